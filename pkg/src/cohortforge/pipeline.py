"""End-to-end orchestration of the generation pipeline."""

from __future__ import annotations

import json
import sys
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .annotator import NoteAnnotation, annotate_notes
from .config import DistributionConfig, load_config_file
from .errors import CohortForgeError, PreconditionError, StageError
from .fidelity import (
    FidelityReport,
    Tolerances,
    validate_cohort,
    validate_keyword_alignment,
    validate_visit_alignment,
)
from .gateway import Gateway, GenerationRequest, make_backend
from .persona import Persona, sample_cohort
from .prompts import build_note_prompt
from .records import LabeledSentence, SyntheticNote
from .semantic import populate_mentions
from .store import (
    MANIFEST_FILES,
    DatasetManifest,
    atomic_write_text,
    dataset_id,
    dataset_stats,
    utc_now,
    write_records,
)
from .taxonomy import annotation_guideline
from .trajectory import VisitPlan, build_visit_plan

STAGES = (
    "sample-cohort",
    "plan-visits",
    "sample-keywords",
    "generate-notes",
    "annotate",
    "validate",
    "stats",
)


@dataclass
class RunSpec:
    config_path: str | Path
    master_seed: int
    cohort_size: int
    out_dir: str | Path
    backend: str = "mock"
    stages: tuple[str, ...] = STAGES
    tolerance_overrides: dict[str, float] = field(default_factory=dict)
    concurrency: int | None = None
    workers: int = 1

    def __post_init__(self):
        if self.master_seed < 0:
            raise PreconditionError("master seed must be non-negative")
        if self.cohort_size < 1:
            raise PreconditionError("cohort size must be at least 1")
        unknown = [s for s in self.stages if s not in STAGES]
        if unknown:
            raise PreconditionError(f"unknown stage(s): {', '.join(unknown)}")
        # each stage needs its predecessors, so a selection is a prefix
        if tuple(self.stages) != STAGES[: len(self.stages)]:
            raise PreconditionError(f"stages must be a prefix of {', '.join(STAGES)}")


def build_plans(cfg: DistributionConfig, personas: Iterable[Persona]) -> list[VisitPlan]:
    return [build_visit_plan(cfg, p) for p in personas]


def generate_notes(
    cfg: DistributionConfig,
    personas: Sequence[Persona],
    plans: Sequence[VisitPlan],
    gateway: Gateway,
    concurrency_limit: int | None = None,
) -> tuple[list[SyntheticNote], list[tuple[str, BaseException]]]:
    """One note per planned note that has mentions; failures are returned, not raised."""
    by_id = {p.patient_id: p for p in personas}
    gp = cfg.generation_params
    specs, reqs = [], []
    for plan in plans:
        persona = by_id.get(plan.patient_id)
        if persona is None:
            raise PreconditionError(f"plan for unknown patient {plan.patient_id}")
        for spec in plan.notes:
            if not spec.mentions:
                continue
            bundle = build_note_prompt(persona, spec, cfg)
            specs.append((spec, bundle))
            reqs.append(GenerationRequest(bundle, spec.note_id, gp.temperature, gp.max_output_tokens))
    results = gateway.generate_batch(reqs, concurrency_limit)
    notes, errors = [], []
    for (spec, bundle), res in zip(specs, results):
        if not res.ok:
            errors.append((spec.note_id, res.error))
            continue
        notes.append(SyntheticNote(
            note_id=spec.note_id,
            patient_id=spec.patient_id,
            year_before_dx=spec.year_before_dx,
            note_type=spec.note_type,
            stage=spec.stage,
            prompt_hash=bundle.prompt_hash,
            backend_id=res.backend_id,
            text=res.text,
        ))
    return notes, errors


def flatten_annotations(annotations: Iterable[NoteAnnotation]) -> tuple[list[LabeledSentence], list]:
    records, issues = [], []
    for a in annotations:
        records.extend(a.records)
        issues.extend(a.errors)
    return records, issues


def fidelity_report(
    cfg: DistributionConfig, personas, plans=None, tolerances: Tolerances | None = None
) -> FidelityReport:
    report = validate_cohort(personas, cfg, tolerances)
    if plans is not None:
        report.extend(validate_visit_alignment(plans, cfg, tolerances))
        report.extend(validate_keyword_alignment(plans, cfg, tolerances))
    return report


def write_json(path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, ensure_ascii=False) + "\n")


def _progress(msg: str) -> None:
    print(f"[cohortforge] {msg}", file=sys.stderr)


def run_pipeline(
    spec: RunSpec,
    *,
    gateway: Gateway | None = None,
    progress: Callable[[str], None] = _progress,
) -> DatasetManifest:
    """Run the selected stages, writing ``<out_dir>/<dataset_id>/``.

    A failing stage raises ``StageError``; files from earlier stages are kept
    and the manifest is written with ``complete = False``.
    """
    cfg = load_config_file(spec.config_path)
    ds_id = dataset_id(cfg.digest, spec.master_seed, spec.cohort_size)
    root = Path(spec.out_dir) / ds_id
    root.mkdir(parents=True, exist_ok=True)
    tolerances = Tolerances.from_overrides(spec.tolerance_overrides)
    manifest = DatasetManifest(
        dataset_id=ds_id,
        config_digest=cfg.digest,
        master_seed=spec.master_seed,
        cohort_size=spec.cohort_size,
        created_at=utc_now(),
        tool_version=__version__,
    )
    if gateway is None and {"generate-notes", "annotate"} & set(spec.stages):
        gp = cfg.generation_params
        gateway = Gateway(
            make_backend(spec.backend, cfg.lexicon.keywords),
            max_retries=gp.max_retries,
            concurrency=spec.concurrency or gp.concurrency,
        )

    def save(kind: str, records) -> None:
        name = MANIFEST_FILES[kind]
        manifest.counts[kind] = write_records(root / name, kind, records)
        manifest.files[kind] = name

    state: dict = {}

    def sample_stage():
        state["personas"] = sample_cohort(cfg, spec.cohort_size, spec.master_seed, workers=spec.workers)
        save("persona", state["personas"])

    def plan_stage():
        state["plans"] = build_plans(cfg, state["personas"])
        save("plan", state["plans"])

    def keyword_stage():
        state["plans"] = [populate_mentions(cfg, p) for p in state["plans"]]
        save("plan", state["plans"])

    def note_stage():
        notes, errors = generate_notes(cfg, state["personas"], state["plans"], gateway, spec.concurrency)
        state["notes"] = notes
        save("note", notes)
        if errors:
            note_id, err = errors[0]
            raise CohortForgeError(f"{len(errors)} note(s) failed; first {note_id}: {err}") from err

    def annotate_stage():
        annotations = annotate_notes(state["notes"], gateway, annotation_guideline(), spec.concurrency)
        records, issues = flatten_annotations(annotations)
        state["sentences"] = records
        save("labeled_sentence", records)
        if issues:
            write_json(root / "annotation_errors.json", [vars(i) for i in issues])
            manifest.files["annotation_errors"] = "annotation_errors.json"

    def validate_stage():
        report = fidelity_report(cfg, state["personas"], state.get("plans"), tolerances)
        write_json(root / "report.json", report.to_dict())
        manifest.files["report"] = "report.json"
        manifest.validation_pass = report.overall_pass
        state["report"] = report

    def stats_stage():
        stats = dataset_stats(state.get("sentences", ()))
        write_json(root / "stats.json", stats.to_dict())
        manifest.files["stats"] = "stats.json"

    runners = {
        "sample-cohort": sample_stage,
        "plan-visits": plan_stage,
        "sample-keywords": keyword_stage,
        "generate-notes": note_stage,
        "annotate": annotate_stage,
        "validate": validate_stage,
        "stats": stats_stage,
    }
    for stage in spec.stages:
        progress(f"{stage} ...")
        try:
            runners[stage]()
        except Exception as exc:
            manifest.failed_stage = stage
            manifest.error = str(exc)
            manifest.write(root / "manifest.json")
            raise StageError(stage, exc) from exc
    manifest.complete = True
    manifest.write(root / "manifest.json")
    progress(f"wrote {root}")
    return manifest
