"""The five-class annotation taxonomy and its relation to the lexicon."""

from __future__ import annotations

from enum import Enum
from functools import lru_cache
from importlib import resources


class AnnotationCategory(str, Enum):
    COGNITIVE_IMPAIRMENT = "cognitive_impairment"
    CONCERN_BY_OTHERS = "concern_by_others"
    REQUIRES_ASSISTANCE = "requires_assistance"
    PHYSIOLOGICAL_CHANGES = "physiological_changes"
    NEUROPSYCHIATRIC_SYMPTOMS = "neuropsychiatric_symptoms"

    def __str__(self) -> str:
        return self.value


CATEGORY_NAMES = tuple(c.value for c in AnnotationCategory)

DISPLAY_NAMES = {
    AnnotationCategory.COGNITIVE_IMPAIRMENT: "Cognitive impairment",
    AnnotationCategory.CONCERN_BY_OTHERS: "Notice/concern by others",
    AnnotationCategory.REQUIRES_ASSISTANCE: "Requires assistance / functional impairment",
    AnnotationCategory.PHYSIOLOGICAL_CHANGES: "Physiological changes",
    AnnotationCategory.NEUROPSYCHIATRIC_SYMPTOMS: "Neuropsychiatric symptoms",
}

# Generation-side lexicon category -> labeling-side class.
LEXICON_TO_ANNOTATION = {
    "speech_language": AnnotationCategory.COGNITIVE_IMPAIRMENT,
    "memory": AnnotationCategory.COGNITIVE_IMPAIRMENT,
    "learning_perception": AnnotationCategory.COGNITIVE_IMPAIRMENT,
    "assistance_needed": AnnotationCategory.REQUIRES_ASSISTANCE,
    "physiological_changes": AnnotationCategory.PHYSIOLOGICAL_CHANGES,
    "neuropsychiatric_symptoms": AnnotationCategory.NEUROPSYCHIATRIC_SYMPTOMS,
}

# Single-label projection: the first class present in this order wins.
# Concern-by-others overlays any other class, so it is kept when present;
# the rarer functional and psychiatric classes come before the common ones.
PROJECTION_PRIORITY = (
    AnnotationCategory.CONCERN_BY_OTHERS,
    AnnotationCategory.REQUIRES_ASSISTANCE,
    AnnotationCategory.NEUROPSYCHIATRIC_SYMPTOMS,
    AnnotationCategory.PHYSIOLOGICAL_CHANGES,
    AnnotationCategory.COGNITIVE_IMPAIRMENT,
)


def parse_category(name: str) -> AnnotationCategory:
    """Closed-set lookup; raises ``ValueError`` for anything else."""
    return AnnotationCategory(name)


def canonical_order(labels) -> tuple[AnnotationCategory, ...]:
    present = {AnnotationCategory(x) for x in labels}
    return tuple(c for c in AnnotationCategory if c in present)


def primary_label(labels) -> AnnotationCategory | None:
    present = {AnnotationCategory(x) for x in labels}
    for c in PROJECTION_PRIORITY:
        if c in present:
            return c
    return None


@lru_cache(maxsize=1)
def annotation_guideline() -> str:
    """The shipped five-class labeling protocol."""
    return resources.files("cohortforge.data").joinpath("annotation_guideline.txt").read_text("utf-8")
