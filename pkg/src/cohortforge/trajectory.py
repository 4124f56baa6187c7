"""Ten-year pre-diagnosis visit trajectories.

Visit-table cells are expected notes per patient over a whole window; the
per-year rate spreads that total evenly over the window's years, and each
(year, note type) count is an independent Poisson draw at that rate.  When a
config supplies per-patient count samples for a cell, the window total is
bootstrapped from them instead and each note lands in a uniformly chosen year.
"""

from __future__ import annotations

import random
from collections.abc import Mapping
from dataclasses import dataclass, field

from .config import DistributionConfig, StageMap, VisitTypeTable, check_year
from .errors import UnknownKeyError
from .persona import Persona
from .rng import STREAM_VISITS, poisson, stream, uniform_index


@dataclass(frozen=True, slots=True)
class KeywordMention:
    category: str
    keyword: str


@dataclass(frozen=True, slots=True)
class NoteSpec:
    note_id: str
    patient_id: str
    year_before_dx: int
    note_type: str
    stage: str
    mentions: tuple[KeywordMention, ...] = ()

    def to_record(self) -> dict:
        return {
            "note_id": self.note_id,
            "year_before_dx": self.year_before_dx,
            "note_type": self.note_type,
            "stage": self.stage,
            "mentions": [{"category": m.category, "keyword": m.keyword} for m in self.mentions],
        }


@dataclass(frozen=True)
class VisitPlan:
    patient_id: str
    seed: int
    notes: tuple[NoteSpec, ...] = field(default_factory=tuple)

    def to_record(self) -> dict:
        return {
            "patient_id": self.patient_id,
            "seed": self.seed,
            "notes": [n.to_record() for n in self.notes],
        }

    @classmethod
    def from_record(cls, rec: Mapping) -> VisitPlan:
        pid = str(rec["patient_id"])
        notes = tuple(
            NoteSpec(
                note_id=str(n["note_id"]),
                patient_id=pid,
                year_before_dx=int(n["year_before_dx"]),
                note_type=str(n["note_type"]),
                stage=str(n["stage"]),
                mentions=tuple(KeywordMention(m["category"], m["keyword"]) for m in n.get("mentions", ())),
            )
            for n in rec["notes"]
        )
        return cls(pid, int(rec["seed"]), notes)


def note_id(patient_id: str, ordinal: int) -> str:
    return f"{patient_id}-N{ordinal:03d}"


def window_for_year(table: VisitTypeTable, year: int) -> str:
    check_year(year)
    for w in table.windows:
        if w.lo <= year <= w.hi:
            return w.window_id
    raise AssertionError("validated windows always cover 1..10")


def stage_for_year(stage_map: StageMap, year: int) -> str:
    return stage_map.stage_by_year[check_year(year)]


def per_year_rate(table: VisitTypeTable, note_type: str, year: int) -> float:
    if note_type not in table.note_types:
        raise UnknownKeyError(f"unknown note type {note_type!r}")
    w = table.window(window_for_year(table, year))
    return table.means[(w.window_id, note_type)] / len(w)


def sample_visit_counts(
    cfg: DistributionConfig, persona: Persona, rng: random.Random
) -> dict[tuple[int, str], int]:
    """Counts for every (year, note_type) cell, years descending."""
    table = cfg.visits
    counts = {(y, t): 0 for w in table.windows for y in w.years for t in table.note_types}
    for w in table.windows:
        span = len(w)
        for t in table.note_types:
            key = (w.window_id, t)
            samples = table.empirical_counts.get(key)
            if samples is not None:
                total = samples[uniform_index(rng, len(samples))]
                for _ in range(total):
                    counts[(w.hi - uniform_index(rng, span), t)] += 1
                continue
            rate = table.means[key] / span
            if rate == 0.0:
                continue
            for y in w.years:
                counts[(y, t)] = poisson(rng, rate)
    return counts


def build_visit_plan(cfg: DistributionConfig, persona: Persona) -> VisitPlan:
    rng = stream(persona.seed, STREAM_VISITS)
    counts = sample_visit_counts(cfg, persona, rng)
    notes = []
    stages = cfg.stage_map.stage_by_year
    for year in range(10, 0, -1):
        for t in cfg.visits.note_types:
            for _ in range(counts[(year, t)]):
                notes.append(NoteSpec(
                    note_id=note_id(persona.patient_id, len(notes) + 1),
                    patient_id=persona.patient_id,
                    year_before_dx=year,
                    note_type=t,
                    stage=stages[year],
                ))
    return VisitPlan(persona.patient_id, persona.seed, tuple(notes))
