"""Prompt construction for note generation and sentence annotation.

Both templates are fixed text with named slots, versioned by
``TEMPLATE_VERSION``.  Golden renders live in ``fixtures/prompts/``; any
wording change must bump the version and regenerate them
(``cohortforge render-prompt``).
"""

from __future__ import annotations

import hashlib
import json
import re
from collections import Counter
from dataclasses import dataclass, field

from . import defaults
from .config import DistributionConfig
from .errors import PreconditionError, ProtocolError
from .persona import Persona
from .segment import segment
from .trajectory import NoteSpec

TEMPLATE_VERSION = "1"

NOTE_GENERATION = "note_generation"
SENTENCE_ANNOTATION = "sentence_annotation"
PROMPT_KINDS = (NOTE_GENERATION, SENTENCE_ANNOTATION)

REDACTED = "[redacted]"

PROFILE_HEADER = "## Patient profile"
VISIT_HEADER = "## Visit context"
KEYWORD_HEADER = "## Required symptom keywords"
STYLE_HEADER = "## Style"

SENTENCES_OPEN = "<<<SENTENCES"
SENTENCES_CLOSE = "SENTENCES>>>"
NOTE_OPEN = "<<<NOTE"
NOTE_CLOSE = "NOTE>>>"


@dataclass(frozen=True)
class PromptBundle:
    system_text: str
    user_text: str
    kind: str
    prompt_hash: str = field(init=False)

    def __post_init__(self):
        if self.kind not in PROMPT_KINDS:
            raise ProtocolError(f"unknown prompt kind {self.kind!r}")
        if not self.system_text or not self.user_text:
            raise PreconditionError("prompt texts must be non-empty")
        object.__setattr__(self, "prompt_hash", prompt_hash(self.system_text, self.user_text, self.kind))


def prompt_hash(system_text: str, user_text: str, kind: str) -> str:
    payload = json.dumps([kind, system_text, user_text], ensure_ascii=False, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(payload.encode("utf-8")).hexdigest()


def render_bundle(bundle: PromptBundle) -> str:
    """Plain-text form used for golden fixtures."""
    return (
        f"# kind: {bundle.kind}\n# prompt_hash: {bundle.prompt_hash}\n"
        f"## system\n{bundle.system_text}\n## user\n{bundle.user_text}"
    )


# -- note generation ---------------------------------------------------------

NOTE_SYSTEM = (
    "You are an experienced clinician documenting outpatient and inpatient encounters "
    "in an electronic health record. You write synthetic notes for a research corpus: "
    "they must read like real documentation but describe no real person."
)

_NOTE_STYLE = (
    "- Organize the note under the headers Subjective, Objective, Assessment, and Plan (SOAP format).",
    "- Clinical abbreviations, specialty jargon, and a few minor typos are acceptable.",
    "- Keep symptom severity consistent with the disease stage above.",
    f'- Write every person name and every calendar date as "{REDACTED}".',
    "- Return only the note text, with no commentary before or after it.",
)


def _keyword_lines(note_spec: NoteSpec) -> list[str]:
    counts = Counter(m.keyword for m in note_spec.mentions)
    lines = []
    for kw in counts:  # Counter keeps first-seen order
        n = counts[kw]
        lines.append(f"- {kw}" if n == 1 else f"- {kw} (x{n})")
    return lines


def build_note_prompt(persona: Persona, note_spec: NoteSpec, cfg: DistributionConfig) -> PromptBundle:
    if not note_spec.mentions:
        raise PreconditionError(f"{note_spec.note_id}: note has no keyword mentions")
    if note_spec.patient_id != persona.patient_id:
        raise PreconditionError(
            f"{note_spec.note_id} belongs to {note_spec.patient_id}, not {persona.patient_id}"
        )
    visit_type = defaults.NOTE_TYPE_DISPLAY.get(note_spec.note_type, note_spec.note_type)
    lines = [
        f"# Clinical note request (template v{TEMPLATE_VERSION})",
        "",
        "Write one clinical note for the synthetic patient described below.",
        "",
        PROFILE_HEADER,
        *(f"- {name}: {value}" for name, value in persona.assignments.items()),
        "",
        VISIT_HEADER,
        f"- Visit type: {visit_type}",
        f"- Years before Alzheimer's disease diagnosis: {note_spec.year_before_dx}",
        f"- Disease stage: {note_spec.stage}",
        "",
        KEYWORD_HEADER,
        "Mention each keyword below, the stated number of times, in natural clinical phrasing.",
        *_keyword_lines(note_spec),
        "",
        STYLE_HEADER,
        *_NOTE_STYLE,
    ]
    return PromptBundle(NOTE_SYSTEM, "\n".join(lines) + "\n", NOTE_GENERATION)


_KEYWORD_LINE = re.compile(r"- (.+?)(?: \(x(\d+)\))?")


def required_keywords(bundle: PromptBundle) -> list[str]:
    """Keyword mentions requested by a note prompt, expanded by multiplicity."""
    if bundle.kind != NOTE_GENERATION:
        raise ProtocolError("not a note-generation prompt")
    lines = bundle.user_text.split("\n")
    try:
        i = lines.index(KEYWORD_HEADER) + 2
    except ValueError:
        raise ProtocolError("note prompt has no keyword block") from None
    out = []
    while i < len(lines) and lines[i]:
        m = _KEYWORD_LINE.fullmatch(lines[i])
        if m is None:
            raise ProtocolError(f"malformed keyword line {lines[i]!r}")
        out.extend([m.group(1)] * int(m.group(2) or 1))
        i += 1
    return out


# -- annotation --------------------------------------------------------------

ANNOTATION_SYSTEM = (
    "You are a clinical annotator labeling sentences from synthetic clinical notes "
    "for signs and symptoms of cognitive decline. Follow the guideline exactly and "
    "answer only in the requested format."
)

_ESCAPES = {"\\": "\\\\", "\n": "\\n", "\t": "\\t", "\r": "\\r"}
_UNESCAPES = {"\\": "\\", "n": "\n", "t": "\t", "r": "\r"}
_ESCAPED_RE = re.compile(r"\\(.)", re.DOTALL)


def escape_text(text: str) -> str:
    """Make ``text`` safe to embed on a single line inside a delimited block.

    Backslash, newline, tab and CR become two-character escapes; braces and
    angle brackets get a leading backslash, so no delimiter or placeholder can
    be spelled by the note itself.
    """
    out = []
    for ch in text:
        if ch in _ESCAPES:
            out.append(_ESCAPES[ch])
        elif ch in "{}<>":
            out.append("\\" + ch)
        else:
            out.append(ch)
    return "".join(out)


def unescape_text(text: str) -> str:
    return _ESCAPED_RE.sub(lambda m: _UNESCAPES.get(m.group(1), m.group(1)), text)


RESPONSE_FORMAT = (
    "## Response format",
    "Reply with exactly one line per sentence, in index order, and nothing else:",
    "<index>: <label>, <label>",
    "Use these labels only: cognitive_impairment, concern_by_others, requires_assistance, "
    "physiological_changes, neuropsychiatric_symptoms.",
    "A sentence may carry several labels. Write <index>: none when no class applies.",
)


def build_annotation_prompt(
    note_text: str, guideline: str, repair_indices: list[int] | None = None
) -> PromptBundle:
    """Ask for labels on every sentence of ``note_text``.

    Sentences are numbered from 0 in segmentation order.  ``repair_indices``
    adds a corrective instruction naming the sentences whose earlier answers
    could not be parsed.
    """
    if not note_text or not note_text.strip():
        raise PreconditionError("note text is empty")
    if not guideline or not guideline.strip():
        raise PreconditionError("annotation guideline is empty")
    sentences = segment(note_text).sentences
    lines = [
        f"# Sentence annotation request (template v{TEMPLATE_VERSION})",
        "",
        "## Guideline",
        guideline.rstrip("\n"),
        "",
        "## Note",
        "The full note follows for context; it is escaped and sits between the markers.",
        NOTE_OPEN,
        escape_text(note_text),
        NOTE_CLOSE,
        "",
        "## Sentences",
        "Label each sentence below. Each line is <index><TAB><escaped sentence>.",
        SENTENCES_OPEN,
        *(f"{i}\t{escape_text(s)}" for i, s in enumerate(sentences)),
        SENTENCES_CLOSE,
        "",
        *RESPONSE_FORMAT,
    ]
    if repair_indices:
        idx = ", ".join(str(i) for i in sorted(set(repair_indices)))
        lines += [
            "",
            "## Correction",
            f"Your previous answer for sentence(s) {idx} did not follow the response format. "
            "Answer again for those indices only, using the exact format above.",
        ]
    return PromptBundle(ANNOTATION_SYSTEM, "\n".join(lines) + "\n", SENTENCE_ANNOTATION)


def prompt_sentences(bundle: PromptBundle) -> list[str]:
    """The (unescaped) sentences an annotation prompt asks about."""
    if bundle.kind != SENTENCE_ANNOTATION:
        raise ProtocolError("not an annotation prompt")
    lines = bundle.user_text.split("\n")
    try:
        start = lines.index(SENTENCES_OPEN) + 1
        stop = lines.index(SENTENCES_CLOSE, start)
    except ValueError:
        raise ProtocolError("annotation prompt has no sentence block") from None
    out = []
    for expected, line in enumerate(lines[start:stop]):
        idx, sep, text = line.partition("\t")
        if not sep or idx != str(expected):
            raise ProtocolError(f"malformed sentence line {line!r}")
        out.append(unescape_text(text))
    return out
