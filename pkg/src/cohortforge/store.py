"""Record files, dataset statistics, matched subsampling and training-set assembly.

Every record file is JSON Lines.  Each line carries ``"record"`` (its kind)
and ``"schema"`` next to the payload fields, so a file handed to the wrong
stage fails loudly instead of half-parsing.
"""

from __future__ import annotations

import json
import os
import random
import tempfile
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import AllocationError, PoolSizeError, PreconditionError, RecordParseError, RecordSchemaError
from .persona import Persona
from .records import LabeledSentence, SyntheticNote
from .rng import sample_indices, shuffle
from .taxonomy import CATEGORY_NAMES, primary_label
from .trajectory import VisitPlan

RECORD_SCHEMA = "1"

RECORD_TYPES = {
    "persona": Persona,
    "plan": VisitPlan,
    "note": SyntheticNote,
    "labeled_sentence": LabeledSentence,
}

# Which pipeline stage writes each record kind; used in mismatch messages.
PRODUCING_STAGE = {
    "persona": "sample-cohort",
    "plan": "plan-visits/sample-keywords",
    "note": "generate-notes",
    "labeled_sentence": "annotate",
}


def _check_kind(kind: str) -> None:
    if kind not in RECORD_TYPES:
        raise RecordSchemaError(f"unknown record kind {kind!r}; expected one of {sorted(RECORD_TYPES)}")


def encode_record(kind: str, obj) -> str:
    _check_kind(kind)
    if not isinstance(obj, RECORD_TYPES[kind]):
        raise RecordSchemaError(f"cannot write {type(obj).__name__} as {kind} record")
    payload = {"record": kind, "schema": RECORD_SCHEMA, **obj.to_record()}
    return json.dumps(payload, ensure_ascii=False, separators=(",", ":"))


def _current_umask() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return mask


# mkstemp creates 0600 files; finished files get the usual umask-derived mode
_UMASK = _current_umask()


def atomic_write_text(path, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.chmod(tmp, 0o666 & ~_UMASK)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def write_records(path, kind: str, records: Iterable) -> int:
    lines = [encode_record(kind, r) for r in records]
    atomic_write_text(path, "".join(line + "\n" for line in lines))
    return len(lines)


def iter_records(path, kind: str):
    _check_kind(kind)
    cls = RECORD_TYPES[kind]
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                raise RecordParseError(path, line_no, "blank line")
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordParseError(path, line_no, f"invalid JSON ({exc.msg})") from None
            if not isinstance(raw, dict):
                raise RecordParseError(path, line_no, "record is not an object")
            found = raw.pop("record", None)
            if found != kind:
                raise RecordSchemaError(
                    f"{path}:{line_no}: expected {kind} records (written by "
                    f"{PRODUCING_STAGE[kind]}), found {found!r} records"
                    + (f" (written by {PRODUCING_STAGE[found]})" if found in PRODUCING_STAGE else "")
                )
            schema = raw.pop("schema", None)
            if schema != RECORD_SCHEMA:
                raise RecordSchemaError(f"{path}:{line_no}: unsupported record schema {schema!r}")
            try:
                yield cls.from_record(raw)
            except (KeyError, TypeError, ValueError) as exc:
                raise RecordParseError(path, line_no, f"bad {kind} record: {exc!r}") from None


def read_records(path, kind: str) -> list:
    return list(iter_records(path, kind))


def count_lines(path) -> int:
    with open(path, "rb") as fh:
        return sum(1 for _ in fh)


# -- statistics --------------------------------------------------------------

@dataclass(frozen=True)
class DatasetStats:
    counts: dict[str, int]
    proportions: dict[str, float]
    total: int
    positives: int
    negatives: int
    label_total: int

    def to_dict(self) -> dict:
        return asdict(self)


def dataset_stats(sentences: Iterable[LabeledSentence], unique_sentences: bool = False) -> DatasetStats:
    """Per-class counts over labeled sentences.

    By default a multi-label sentence counts once under each of its labels.
    With ``unique_sentences`` it counts once, under its single-label
    projection.  ``total`` is the number of sentences, negatives included;
    proportions are relative to it.
    """
    counts = Counter()
    total = negatives = 0
    for s in sentences:
        total += 1
        if not s.labels:
            negatives += 1
        elif unique_sentences:
            counts[primary_label(s.labels).value] += 1
        else:
            counts.update(set(s.labels))
    ordered = {c: counts.get(c, 0) for c in CATEGORY_NAMES}
    return DatasetStats(
        counts=ordered,
        proportions={c: (v / total if total else 0.0) for c, v in ordered.items()},
        total=total,
        positives=total - negatives,
        negatives=negatives,
        label_total=sum(ordered.values()),
    )


# -- matched subsampling -----------------------------------------------------

NEGATIVE_STRATUM = "none"


def stratum_of(sentence: LabeledSentence) -> str:
    label = primary_label(sentence.labels)
    return NEGATIVE_STRATUM if label is None else label.value


def largest_remainder(sizes: Mapping[str, int], target: int) -> dict[str, int]:
    """Hamilton apportionment of ``target`` seats by ``sizes``.

    Floors first, then one extra seat each to the largest remainders; ties go
    to the earlier key.  Quotas use exact integer arithmetic.
    """
    total = sum(sizes.values())
    if total <= 0:
        raise PreconditionError("cannot apportion over an empty population")
    alloc = {}
    remainders = []
    for i, (k, size) in enumerate(sizes.items()):
        q, r = divmod(target * size, total)
        alloc[k] = q
        remainders.append((-r, i, k))
    short = target - sum(alloc.values())
    for _, _, k in sorted(remainders)[:short]:
        alloc[k] += 1
    return alloc


def subsample_matched(
    sentences: Sequence[LabeledSentence], target_size: int, seed: int = 0
) -> list[LabeledSentence]:
    """Subsample to ``target_size`` keeping stratum proportions.

    Strata are single-label projections, with negatives as their own stratum.
    Selection inside a stratum is uniform without replacement under ``seed``;
    the output keeps the input order.
    """
    groups: dict[str, list[int]] = {c: [] for c in (*CATEGORY_NAMES, NEGATIVE_STRATUM)}
    for i, s in enumerate(sentences):
        groups[stratum_of(s)].append(i)
    groups = {k: v for k, v in groups.items() if v}
    total = len(sentences)
    if not 0 < target_size <= total:
        raise PreconditionError(f"target size {target_size} must lie in 1..{total}")
    if target_size < len(groups):
        raise PreconditionError(f"target size {target_size} is below the {len(groups)} non-empty strata")
    alloc = largest_remainder({k: len(v) for k, v in groups.items()}, target_size)
    rng = random.Random(seed)
    chosen: list[int] = []
    for k, idx in groups.items():
        if alloc[k] > len(idx):
            raise AllocationError(f"stratum {k} needs {alloc[k]} records, has {len(idx)}")
        chosen.extend(idx[j] for j in sample_indices(rng, len(idx), alloc[k]))
    chosen.sort()
    return [sentences[i] for i in chosen]


def assemble_training_set(
    positives: Sequence, negative_pool: Sequence, neg_to_pos_ratio: int, seed: int
) -> list:
    """All positives plus ``ratio * len(positives)`` distinct negatives, shuffled."""
    if isinstance(neg_to_pos_ratio, bool) or not isinstance(neg_to_pos_ratio, int) or neg_to_pos_ratio < 0:
        raise PreconditionError("neg_to_pos_ratio must be a non-negative integer")
    need = neg_to_pos_ratio * len(positives)
    if need > len(negative_pool):
        raise PoolSizeError(f"need {need} negatives, pool has {len(negative_pool)}")
    rng = random.Random(seed)
    combined = list(positives) + [negative_pool[i] for i in sample_indices(rng, len(negative_pool), need)]
    return shuffle(rng, combined)


# -- manifests ---------------------------------------------------------------

MANIFEST_FILES = {
    "persona": "personas.jsonl",
    "plan": "plans.jsonl",
    "note": "notes.jsonl",
    "labeled_sentence": "sentences.jsonl",
}


def dataset_id(config_digest: str, master_seed: int, n: int) -> str:
    digest = config_digest.split(":", 1)[-1]
    return f"cf-{digest[:12]}-s{master_seed}-n{n}"


@dataclass
class DatasetManifest:
    dataset_id: str
    config_digest: str
    master_seed: int
    cohort_size: int
    counts: dict[str, int] = field(default_factory=dict)
    files: dict[str, str] = field(default_factory=dict)
    created_at: str = ""
    tool_version: str = ""
    complete: bool = False
    failed_stage: str | None = None
    error: str | None = None
    validation_pass: bool | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: Mapping) -> DatasetManifest:
        return cls(**{k: raw[k] for k in raw if k in cls.__dataclass_fields__})

    def write(self, path) -> None:
        atomic_write_text(path, json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n")

    @classmethod
    def read(cls, path) -> DatasetManifest:
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def utc_now() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


def manifest_counts_match(manifest: DatasetManifest, root) -> bool:
    root = Path(root)
    return all(count_lines(root / manifest.files[k]) == v for k, v in manifest.counts.items())
