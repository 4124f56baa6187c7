"""Record types produced by the generation and annotation stages."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass


@dataclass(frozen=True)
class SyntheticNote:
    note_id: str
    patient_id: str
    year_before_dx: int
    note_type: str
    stage: str
    prompt_hash: str
    backend_id: str
    text: str

    def to_record(self) -> dict:
        return {
            "note_id": self.note_id,
            "patient_id": self.patient_id,
            "year_before_dx": self.year_before_dx,
            "note_type": self.note_type,
            "stage": self.stage,
            "prompt_hash": self.prompt_hash,
            "backend_id": self.backend_id,
            "text": self.text,
        }

    @classmethod
    def from_record(cls, rec: Mapping) -> SyntheticNote:
        return cls(
            note_id=str(rec["note_id"]),
            patient_id=str(rec["patient_id"]),
            year_before_dx=int(rec["year_before_dx"]),
            note_type=str(rec["note_type"]),
            stage=str(rec["stage"]),
            prompt_hash=str(rec["prompt_hash"]),
            backend_id=str(rec["backend_id"]),
            text=str(rec["text"]),
        )


@dataclass(frozen=True)
class LabeledSentence:
    """One annotated sentence.  ``labels`` holds serialized category names;
    an empty tuple marks a negative sentence.  Labels are not checked here so
    that bad input survives loading and can be reported by ``validate_labeled``."""

    sentence_id: str
    note_id: str
    patient_id: str
    year_before_dx: int
    sentence_text: str
    labels: tuple[str, ...] = ()

    @property
    def negative(self) -> bool:
        return not self.labels

    def to_record(self) -> dict:
        return {
            "sentence_id": self.sentence_id,
            "note_id": self.note_id,
            "patient_id": self.patient_id,
            "year_before_dx": self.year_before_dx,
            "sentence_text": self.sentence_text,
            "labels": list(self.labels),
            "negative": self.negative,
        }

    @classmethod
    def from_record(cls, rec: Mapping) -> LabeledSentence:
        labels = rec["labels"]
        if isinstance(labels, str) or not isinstance(labels, (list, tuple)):
            raise TypeError("labels must be a list")
        return cls(
            sentence_id=str(rec["sentence_id"]),
            note_id=str(rec["note_id"]),
            patient_id=str(rec["patient_id"]),
            year_before_dx=int(rec["year_before_dx"]),
            sentence_text=str(rec["sentence_text"]),
            labels=tuple(str(x) for x in labels),
        )
