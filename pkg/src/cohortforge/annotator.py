"""Sentence-level annotation of generated notes."""

from __future__ import annotations

import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

from .errors import PreconditionError, ProtocolError
from .gateway import Gateway, GenerationRequest, GenerationResult
from .prompts import build_annotation_prompt
from .records import LabeledSentence, SyntheticNote
from .segment import segment, segment_sentences
from .taxonomy import CATEGORY_NAMES, AnnotationCategory, canonical_order

__all__ = [
    "AnnotationIssue",
    "NoteAnnotation",
    "LabeledSentence",
    "Violation",
    "LabelReport",
    "segment_sentences",
    "sentence_id",
    "parse_annotation_response",
    "annotate_note",
    "annotate_notes",
    "validate_labeled",
]

ANNOTATION_TEMPERATURE = 0.0

_LINE = re.compile(r"\s*(\d+)\s*[:.)]\s*(.*?)\s*")
_NONE = {"none", "-", "[]", "n/a", ""}


def sentence_id(note_id: str, ordinal: int) -> str:
    return f"{note_id}-S{ordinal:03d}"


@dataclass(frozen=True)
class AnnotationIssue:
    sentence_id: str
    sentence_text: str
    reason: str


@dataclass(frozen=True)
class NoteAnnotation:
    """Records for every sentence that received valid labels, plus one issue
    per sentence that still had no valid answer after the repair attempt."""

    records: tuple[LabeledSentence, ...]
    errors: tuple[AnnotationIssue, ...] = ()

    def __iter__(self):
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]


def parse_annotation_response(
    text: str, n_sentences: int
) -> tuple[dict[int, tuple[AnnotationCategory, ...]], dict[int, str]]:
    """Split a response into resolved labels and per-index problems.

    Lines that do not start with an index are ignored.  An index outside
    ``range(n_sentences)`` is a protocol error.  An index whose label list
    holds an unknown name, or that is answered twice with different labels,
    is a problem; an index never answered is a problem too.
    """
    answers: dict[int, tuple[AnnotationCategory, ...]] = {}
    problems: dict[int, str] = {}
    for line in text.splitlines():
        m = _LINE.fullmatch(line)
        if m is None:
            continue
        idx = int(m.group(1))
        if not 0 <= idx < n_sentences:
            raise ProtocolError(f"response refers to sentence {idx}, note has {n_sentences}")
        body = m.group(2).strip().lower()
        if body in _NONE:
            labels: tuple[AnnotationCategory, ...] = ()
        else:
            names = [x.strip() for x in body.split(",") if x.strip()]
            bad = [x for x in names if x not in CATEGORY_NAMES]
            if bad:
                problems[idx] = f"unknown label(s) {', '.join(bad)}"
                continue
            labels = canonical_order(names)
        if idx in answers and answers[idx] != labels:
            problems[idx] = "conflicting answers"
            continue
        answers[idx] = labels
    for idx in problems:
        answers.pop(idx, None)
    for idx in range(n_sentences):
        if idx not in answers and idx not in problems:
            problems[idx] = "no answer"
    return answers, problems


def _records(note: SyntheticNote, sentences, answers) -> tuple[LabeledSentence, ...]:
    return tuple(
        LabeledSentence(
            sentence_id=sentence_id(note.note_id, i + 1),
            note_id=note.note_id,
            patient_id=note.patient_id,
            year_before_dx=note.year_before_dx,
            sentence_text=s,
            labels=tuple(c.value for c in answers[i]),
        )
        for i, s in enumerate(sentences)
        if i in answers
    )


def _issues(note: SyntheticNote, sentences, problems) -> tuple[AnnotationIssue, ...]:
    return tuple(
        AnnotationIssue(sentence_id(note.note_id, i + 1), sentences[i], problems[i])
        for i in sorted(problems)
    )


def _request(note: SyntheticNote, protocol_text: str, repair=None, max_tokens=1500) -> GenerationRequest:
    suffix = "-annotate" if repair is None else "-repair"
    return GenerationRequest(
        build_annotation_prompt(note.text, protocol_text, repair),
        request_id=note.note_id + suffix,
        temperature=ANNOTATION_TEMPERATURE,
        max_output_tokens=max_tokens,
    )


def _text_or_raise(result: GenerationResult) -> str:
    if result.error is not None:
        raise result.error
    return result.text


def annotate_note(note: SyntheticNote, gateway: Gateway, protocol_text: str) -> NoteAnnotation:
    if not note.text or not note.text.strip():
        raise PreconditionError(f"{note.note_id}: empty note text")
    sentences = segment(note.text).sentences
    answers, problems = parse_annotation_response(
        gateway.generate(_request(note, protocol_text)).text, len(sentences)
    )
    if problems:
        fixed, problems = _repair(note, sentences, problems,
                                  gateway.generate(_request(note, protocol_text, sorted(problems))).text)
        answers.update(fixed)
    return NoteAnnotation(_records(note, sentences, answers), _issues(note, sentences, problems))


def _repair(note, sentences, problems, text):
    answers, still = parse_annotation_response(text, len(sentences))
    fixed = {i: answers[i] for i in problems if i in answers}
    remaining = {i: still.get(i, problems[i]) for i in problems if i not in fixed}
    return fixed, remaining


def annotate_notes(
    notes: Sequence[SyntheticNote], gateway: Gateway, protocol_text: str,
    concurrency_limit: int | None = None,
) -> list[NoteAnnotation]:
    """Batch form of ``annotate_note``: one round of requests, then one round
    of repair requests for the notes that need it.  Gateway failures raise."""
    for note in notes:
        if not note.text or not note.text.strip():
            raise PreconditionError(f"{note.note_id}: empty note text")
    segs = [segment(n.text).sentences for n in notes]
    first = gateway.generate_batch([_request(n, protocol_text) for n in notes], concurrency_limit)
    parsed = [parse_annotation_response(_text_or_raise(r), len(s)) for r, s in zip(first, segs)]

    needs = [i for i, (_, problems) in enumerate(parsed) if problems]
    if needs:
        repairs = gateway.generate_batch(
            [_request(notes[i], protocol_text, sorted(parsed[i][1])) for i in needs], concurrency_limit
        )
        for i, r in zip(needs, repairs):
            answers, problems = parsed[i]
            fixed, remaining = _repair(notes[i], segs[i], problems, _text_or_raise(r))
            answers.update(fixed)
            parsed[i] = (answers, remaining)

    return [
        NoteAnnotation(_records(n, s, a), _issues(n, s, p))
        for n, s, (a, p) in zip(notes, segs, parsed)
    ]


# -- validation --------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    index: int
    sentence_id: str
    kind: str
    message: str


@dataclass
class LabelReport:
    n_records: int = 0
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "n_records": self.n_records,
            "ok": self.ok,
            "violations": [vars(v) for v in self.violations],
        }


def validate_labeled(
    records: Iterable[LabeledSentence | Mapping],
    notes: Mapping[str, str] | Iterable[SyntheticNote] | None = None,
) -> LabelReport:
    """Check closed label set, non-empty text, unique ids, and references.

    ``notes`` (note objects, or a ``note_id -> patient_id`` map) enables the
    reference check; without it only the sentence-to-note id lineage and
    per-note patient consistency are checked.
    """
    if notes is not None and not isinstance(notes, Mapping):
        notes = {n.note_id: n.patient_id for n in notes}
    report = LabelReport()
    seen: set[str] = set()
    note_owner: dict[str, str] = {}

    for i, rec in enumerate(records):
        report.n_records += 1
        if isinstance(rec, Mapping):
            try:
                rec = LabeledSentence.from_record(rec)
            except (KeyError, TypeError, ValueError) as exc:
                report.violations.append(Violation(i, str(rec.get("sentence_id", "")), "schema", str(exc)))
                continue
        sid = rec.sentence_id

        def flag(kind: str, message: str) -> None:
            report.violations.append(Violation(i, sid, kind, message))

        bad = [x for x in rec.labels if x not in CATEGORY_NAMES]
        if bad:
            flag("closed_set", f"labels outside the five classes: {', '.join(bad)}")
        if len(set(rec.labels)) != len(rec.labels):
            flag("closed_set", "repeated label")
        if not rec.sentence_text.strip():
            flag("empty_text", "sentence text is empty")
        if sid in seen:
            flag("duplicate_id", f"sentence id {sid} appears more than once")
        seen.add(sid)
        if not 1 <= rec.year_before_dx <= 10:
            flag("year", f"year_before_dx {rec.year_before_dx} outside 1..10")
        if not sid.startswith(rec.note_id + "-S"):
            flag("reference", f"sentence id does not belong to note {rec.note_id}")
        if notes is not None:
            if rec.note_id not in notes:
                flag("reference", f"note {rec.note_id} not in dataset")
            elif notes[rec.note_id] != rec.patient_id:
                flag("reference", f"note {rec.note_id} belongs to {notes[rec.note_id]}, not {rec.patient_id}")
        owner = note_owner.setdefault(rec.note_id, rec.patient_id)
        if owner != rec.patient_id:
            flag("reference", f"note {rec.note_id} attributed to both {owner} and {rec.patient_id}")
    return report
