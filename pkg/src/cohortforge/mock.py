"""Deterministic offline backend.

Notes are SOAP skeletons with one sentence per requested keyword mention;
annotations come from a keyword -> class lookup plus a fixed cue pattern for
reports by family members.  Output depends only on the prompt, so the whole
pipeline is byte-reproducible under this backend.
"""

from __future__ import annotations

import re
from collections.abc import Mapping, Sequence

from . import defaults
from .errors import ConfigError, ProtocolError
from .prompts import (
    NOTE_GENERATION,
    SENTENCE_ANNOTATION,
    PromptBundle,
    prompt_sentences,
    required_keywords,
)
from .taxonomy import LEXICON_TO_ANNOTATION, AnnotationCategory, canonical_order

MOCK_BACKEND_ID = "mock-v1"

SOAP_SECTIONS = ("Subjective", "Objective", "Assessment", "Plan")
MENTION_SENTENCE = "Clinician notes {keyword} during today's visit."
EMPTY_SECTION_SENTENCE = "No additional findings."

CONCERN_CUE = re.compile(
    r"\b(?:daughter|son|wife|husband|spouse|partner|family|caregiver|sister|brother|"
    r"niece|nephew|friend|neighbou?r)s?\b.*?\b(?:reports?|reported|notes?|noted|notices?|"
    r"noticed|concerns?|concerned|worried|worries|states?|stated)\b",
    re.IGNORECASE,
)


class KeywordLabeler:
    """Maps sentences to classes by whole-word lexicon matches.

    Matching is case-insensitive and takes the longest keyword at each
    position, so a multi-word term is never also counted as its parts.
    """

    def __init__(self, lexicon: Mapping[str, Sequence[str]] | None = None):
        lexicon = defaults.LEXICON if lexicon is None else lexicon
        self.table: dict[str, AnnotationCategory] = {}
        for category, words in lexicon.items():
            target = LEXICON_TO_ANNOTATION.get(category)
            if target is None:
                raise ConfigError(f"mock labeler has no annotation class for lexicon category {category!r}")
            for w in words:
                self.table[w.lower()] = target
        alternation = "|".join(re.escape(w) for w in sorted(self.table, key=lambda w: (-len(w), w)))
        self._pattern = re.compile(rf"(?<!\w)(?:{alternation})(?!\w)", re.IGNORECASE)

    def keywords_in(self, sentence: str) -> list[str]:
        return [m.group(0).lower() for m in self._pattern.finditer(sentence)]

    def labels(self, sentence: str) -> tuple[AnnotationCategory, ...]:
        found = {self.table[k] for k in self.keywords_in(sentence)}
        if CONCERN_CUE.search(sentence):
            found.add(AnnotationCategory.CONCERN_BY_OTHERS)
        return canonical_order(found)


def mock_note(keywords: Sequence[str]) -> str:
    sections: list[list[str]] = [[] for _ in SOAP_SECTIONS]
    for i, kw in enumerate(keywords):
        sections[i % len(SOAP_SECTIONS)].append(MENTION_SENTENCE.format(keyword=kw))
    lines = ["Patient Name: [redacted]", "Date: [redacted]", ""]
    for header, body in zip(SOAP_SECTIONS, sections):
        lines.append(f"{header}:")
        lines.extend(body or [EMPTY_SECTION_SENTENCE])
        lines.append("")
    return "\n".join(lines)


def mock_annotation(sentences: Sequence[str], labeler: KeywordLabeler) -> str:
    out = []
    for i, s in enumerate(sentences):
        labels = labeler.labels(s)
        out.append(f"{i}: " + (", ".join(c.value for c in labels) if labels else "none"))
    return "\n".join(out) + "\n"


_DEFAULT_LABELER: KeywordLabeler | None = None


def mock_generate(bundle: PromptBundle, labeler: KeywordLabeler | None = None) -> str:
    global _DEFAULT_LABELER
    if bundle.kind == NOTE_GENERATION:
        return mock_note(required_keywords(bundle))
    if bundle.kind == SENTENCE_ANNOTATION:
        if labeler is None:
            if _DEFAULT_LABELER is None:
                _DEFAULT_LABELER = KeywordLabeler()
            labeler = _DEFAULT_LABELER
        return mock_annotation(prompt_sentences(bundle), labeler)
    raise ProtocolError(f"mock backend cannot handle prompt kind {bundle.kind!r}")


class MockBackend:
    backend_id = MOCK_BACKEND_ID

    def __init__(self, lexicon: Mapping[str, Sequence[str]] | None = None):
        self.labeler = KeywordLabeler(lexicon)

    def complete(self, request) -> str:
        return mock_generate(request.bundle, self.labeler)
