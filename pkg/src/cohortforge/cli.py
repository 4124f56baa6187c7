"""``cohortforge`` command line.

Exit codes: 0 success, 1 validation failure (or ``run --strict`` failure),
2 usage/config/schema error, 3 backend or transport error.  Progress goes to
stderr; data goes to files or stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .annotator import annotate_notes
from .config import default_config, dump_config, load_config_file
from .errors import BackendError, CohortForgeError, DigestMismatchError, StageError
from .fidelity import Tolerances
from .gateway import Gateway, make_backend
from .persona import persona_from_seed, sample_cohort
from .pipeline import (
    STAGES,
    RunSpec,
    build_plans,
    fidelity_report,
    flatten_annotations,
    generate_notes,
    run_pipeline,
    write_json,
)
from .prompts import build_annotation_prompt, build_note_prompt, render_bundle
from .semantic import populate_mentions
from .store import (
    DatasetManifest,
    assemble_training_set,
    dataset_stats,
    read_records,
    subsample_matched,
    write_records,
)
from .taxonomy import annotation_guideline

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_BACKEND = 3


def _log(msg: str) -> None:
    print(f"[cohortforge] {msg}", file=sys.stderr)


def _load_cfg(args):
    cfg = load_config_file(args.config)
    if getattr(args, "manifest", None):
        manifest = DatasetManifest.read(args.manifest)
        if manifest.config_digest != cfg.digest:
            raise DigestMismatchError(
                f"config digest {cfg.digest[:12]} does not match manifest {manifest.config_digest[:12]}"
            )
    return cfg


def _gateway(args, cfg) -> Gateway:
    gp = cfg.generation_params
    return Gateway(
        make_backend(args.backend or gp.backend, cfg.lexicon.keywords),
        max_retries=gp.max_retries,
        concurrency=args.concurrency or gp.concurrency,
    )


def _load_tolerances(path) -> Tolerances:
    if not path:
        return Tolerances()
    with open(path, encoding="utf-8") as fh:
        return Tolerances.from_overrides(json.load(fh))


def _emit_json(obj, out) -> None:
    text = json.dumps(obj, indent=2, ensure_ascii=False) + "\n"
    if out:
        write_json(out, obj)
    else:
        sys.stdout.write(text)


# -- subcommands -------------------------------------------------------------

def cmd_init_config(args) -> int:
    text = dump_config(default_config())
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        _log(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_sample_cohort(args) -> int:
    cfg = _load_cfg(args)
    personas = sample_cohort(cfg, args.n, args.seed, workers=args.workers)
    n = write_records(args.out, "persona", personas)
    _log(f"wrote {n} personas to {args.out}")
    return EXIT_OK


def cmd_plan_visits(args) -> int:
    cfg = _load_cfg(args)
    plans = build_plans(cfg, read_records(args.personas, "persona"))
    write_records(args.out, "plan", plans)
    _log(f"wrote {len(plans)} plans ({sum(len(p.notes) for p in plans)} notes) to {args.out}")
    return EXIT_OK


def cmd_sample_keywords(args) -> int:
    cfg = _load_cfg(args)
    plans = [populate_mentions(cfg, p) for p in read_records(args.plans, "plan")]
    write_records(args.out, "plan", plans)
    _log(f"wrote {len(plans)} plans with mentions to {args.out}")
    return EXIT_OK


def cmd_generate_notes(args) -> int:
    cfg = _load_cfg(args)
    personas = read_records(args.personas, "persona")
    plans = read_records(args.plans, "plan")
    notes, errors = generate_notes(cfg, personas, plans, _gateway(args, cfg), args.concurrency)
    write_records(args.out, "note", notes)
    _log(f"wrote {len(notes)} notes to {args.out}")
    for note_id, err in errors:
        _log(f"failed {note_id}: {err}")
    return EXIT_BACKEND if errors else EXIT_OK


def cmd_annotate(args) -> int:
    cfg = _load_cfg(args)
    notes = read_records(args.notes, "note")
    annotations = annotate_notes(notes, _gateway(args, cfg), annotation_guideline(), args.concurrency)
    records, issues = flatten_annotations(annotations)
    write_records(args.out, "labeled_sentence", records)
    _log(f"wrote {len(records)} labeled sentences to {args.out}")
    if issues:
        _log(f"{len(issues)} sentence(s) left unlabeled after repair")
        if args.errors:
            write_json(args.errors, [vars(i) for i in issues])
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _load_cfg(args)
    personas = read_records(args.personas, "persona")
    plans = read_records(args.plans, "plan") if args.plans else None
    report = fidelity_report(cfg, personas, plans, _load_tolerances(args.tolerance_overrides))
    _emit_json(report.to_dict(), args.report)
    for c in report.failed():
        _log(f"FAIL {c.name}: {c.metrics} {c.detail}".rstrip())
    _log("validation " + ("passed" if report.overall_pass else "failed"))
    return EXIT_OK if report.overall_pass else EXIT_VALIDATION


def cmd_stats(args) -> int:
    stats = dataset_stats(read_records(args.sentences, "labeled_sentence"), args.unique_sentences)
    _emit_json(stats.to_dict(), args.out)
    return EXIT_OK


def cmd_subsample(args) -> int:
    sentences = read_records(args.sentences, "labeled_sentence")
    if args.positives_only:
        sentences = [s for s in sentences if s.labels]
    sub = subsample_matched(sentences, args.target, args.seed)
    write_records(args.out, "labeled_sentence", sub)
    _log(f"wrote {len(sub)} of {len(sentences)} sentences to {args.out}")
    return EXIT_OK


def cmd_assemble(args) -> int:
    positives = read_records(args.positives, "labeled_sentence")
    negatives = read_records(args.negatives, "labeled_sentence")
    combined = assemble_training_set(positives, negatives, args.ratio, args.seed)
    write_records(args.out, "labeled_sentence", combined)
    _log(f"wrote {len(combined)} records to {args.out}")
    return EXIT_OK


def cmd_render_prompt(args) -> int:
    cfg = _load_cfg(args)
    if args.notes:
        notes = read_records(args.notes, "note")
        if not 0 <= args.index < len(notes):
            raise CohortForgeError(f"note index {args.index} out of range (notes file has {len(notes)})")
        bundle = build_annotation_prompt(notes[args.index].text, annotation_guideline())
    else:
        specs = [(plan, n) for plan in read_records(args.plan, "plan") for n in plan.notes]
        if not 0 <= args.index < len(specs):
            raise CohortForgeError(f"note index {args.index} out of range (plan file has {len(specs)} notes)")
        plan, spec = specs[args.index]
        bundle = build_note_prompt(persona_from_seed(cfg, plan.patient_id, plan.seed), spec, cfg)
    text = render_bundle(bundle)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_run(args) -> int:
    spec = RunSpec(
        config_path=args.config,
        master_seed=args.seed,
        cohort_size=args.n,
        out_dir=args.out,
        backend=args.backend or "mock",
        stages=tuple(args.stages.split(",")) if args.stages else STAGES,
        tolerance_overrides=vars(_load_tolerances(args.tolerance_overrides)),
        concurrency=args.concurrency,
        workers=args.workers,
    )
    manifest = run_pipeline(spec, progress=_log)
    print(str(Path(args.out) / manifest.dataset_id))
    if args.strict and manifest.validation_pass is False:
        _log("validation failed (--strict)")
        return EXIT_VALIDATION
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def _add_config(p, manifest: bool = True) -> None:
    p.add_argument("--config", required=True, help="distribution config (JSON)")
    if manifest:
        p.add_argument("--manifest", help="dataset manifest; refuse to run if its config digest differs")


def _add_backend(p) -> None:
    p.add_argument("--backend", choices=("http", "mock"), help="generation backend (default: from config)")
    p.add_argument("--concurrency", type=int, help="max requests in flight (default: from config)")


def _positive(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def _seed(value: str) -> int:
    n = int(value)
    if not 0 <= n < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cohortforge", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init-config", help="write the default distribution config")
    p.add_argument("--out", help="output path (default: stdout)")
    p.set_defaults(func=cmd_init_config)

    p = sub.add_parser("sample-cohort", help="sample personas")
    _add_config(p)
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample_cohort)

    p = sub.add_parser("plan-visits", help="build ten-year visit plans for personas")
    _add_config(p)
    p.add_argument("--personas", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plan_visits)

    p = sub.add_parser("sample-keywords", help="assign keyword mentions to planned notes")
    _add_config(p)
    p.add_argument("--plans", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample_keywords)

    p = sub.add_parser("generate-notes", help="generate note text for planned notes")
    _add_config(p)
    _add_backend(p)
    p.add_argument("--personas", required=True)
    p.add_argument("--plans", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate_notes)

    p = sub.add_parser("annotate", help="label note sentences")
    _add_config(p)
    _add_backend(p)
    p.add_argument("--notes", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--errors", help="write unresolved sentences here (JSON)")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("validate", help="check personas/plans against the config")
    _add_config(p)
    p.add_argument("--personas", required=True)
    p.add_argument("--plans")
    p.add_argument("--tolerance-overrides", help="JSON object of tolerance overrides")
    p.add_argument("--report", help="report path (default: stdout)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", help="per-class sentence counts")
    p.add_argument("--sentences", required=True)
    p.add_argument("--unique-sentences", action="store_true",
                   help="count each sentence once, under its single-label projection")
    p.add_argument("--out", help="output path (default: stdout)")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("subsample", help="proportion-preserving subsample")
    p.add_argument("--sentences", required=True)
    p.add_argument("--target", type=_positive, required=True)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--positives-only", action="store_true", help="drop negative sentences first")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_subsample)

    p = sub.add_parser("assemble", help="positives plus ratio-controlled negatives")
    p.add_argument("--positives", required=True)
    p.add_argument("--negatives", required=True)
    p.add_argument("--ratio", type=int, required=True)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("render-prompt", help="render the generation or annotation prompt for one note")
    _add_config(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--plan", help="plans file with mentions (renders the note-generation prompt)")
    src.add_argument("--notes", help="notes file (renders the annotation prompt)")
    p.add_argument("--index", type=int, required=True, help="0-based note index across the file")
    p.add_argument("--out", help="output path (default: stdout)")
    p.set_defaults(func=cmd_render_prompt)

    p = sub.add_parser("run", help="run the full pipeline")
    _add_config(p, manifest=False)
    _add_backend(p)
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out", required=True, help="parent directory for the dataset")
    p.add_argument("--stages", help=f"comma-separated prefix of: {','.join(STAGES)}")
    p.add_argument("--tolerance-overrides")
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--strict", action="store_true", help="exit 1 when validation fails")
    p.set_defaults(func=cmd_run)
    return parser


def _exit_code(exc: BaseException) -> int:
    while exc is not None:
        if isinstance(exc, BackendError):
            return EXIT_BACKEND
        exc = exc.cause if isinstance(exc, StageError) else exc.__cause__
    return EXIT_USAGE


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CohortForgeError, OSError, ValueError) as exc:
        _log(f"error: {exc}")
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
