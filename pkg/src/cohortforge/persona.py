"""Persona sampling: one independent categorical draw per configured factor."""

from __future__ import annotations

import random
from collections.abc import Callable, Mapping
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .config import DistributionConfig, FactorSpec
from .errors import ConstraintError, EmptyCohortError
from .rng import STREAM_PERSONA, derive_seed, stream

PATIENT_ID_WIDTH = 7

# A constraint sees the full assignment map and returns False to reject it.
Constraint = Callable[[Mapping[str, str]], bool]


@dataclass(frozen=True)
class Persona:
    patient_id: str
    seed: int
    assignments: dict[str, str]

    def to_record(self) -> dict:
        return {"patient_id": self.patient_id, "seed": self.seed, "assignments": dict(self.assignments)}

    @classmethod
    def from_record(cls, rec: Mapping) -> Persona:
        return cls(str(rec["patient_id"]), int(rec["seed"]), dict(rec["assignments"]))


def patient_id(index: int) -> str:
    return f"SYN-{index:0{PATIENT_ID_WIDTH}d}"


def sample_factor(spec: FactorSpec, rng: random.Random) -> str:
    return spec.sampler.draw(rng)


def sample_persona(
    cfg: DistributionConfig,
    patient_index: int,
    master_seed: int,
    constraint: Constraint | None = None,
    max_attempts: int = 1000,
) -> Persona:
    """Sample persona ``patient_index`` of the cohort seeded by ``master_seed``.

    With a ``constraint``, rejected assignment maps are redrawn from the same
    stream (rejection sampling), so results stay reproducible.  The accepted
    distribution is then the configured one conditioned on the predicate.
    """
    seed = derive_seed(master_seed, patient_index)
    rng = stream(seed, STREAM_PERSONA)
    for _ in range(max_attempts):
        assignments = {f.name: f.sampler.draw(rng) for f in cfg.factors}
        if constraint is None or constraint(assignments):
            return Persona(patient_id(patient_index), seed, assignments)
    raise ConstraintError(
        f"persona {patient_index}: constraint rejected {max_attempts} consecutive draws"
    )


def _sample_range(args: tuple) -> list[Persona]:
    cfg, start, stop, master_seed, constraint = args
    return [sample_persona(cfg, i, master_seed, constraint) for i in range(start, stop)]


def sample_cohort(
    cfg: DistributionConfig,
    n: int,
    master_seed: int,
    *,
    workers: int = 1,
    constraint: Constraint | None = None,
) -> list[Persona]:
    """Personas ``0..n-1``.  ``workers > 1`` shards index ranges across
    processes; each persona depends only on its index, so output is identical."""
    if n < 1:
        raise EmptyCohortError("cohort size must be at least 1")
    if workers <= 1 or n < 2 * workers:
        return _sample_range((cfg, 0, n, master_seed, constraint))
    chunk = -(-n // workers)
    jobs = [(cfg, s, min(s + chunk, n), master_seed, constraint) for s in range(0, n, chunk)]
    out: list[Persona] = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_sample_range, jobs):
            out.extend(part)
    return out


def persona_from_seed(cfg: DistributionConfig, patient_id: str, seed: int) -> Persona:
    """Rebuild an unconstrained persona from its stored seed."""
    rng = stream(seed, STREAM_PERSONA)
    return Persona(patient_id, seed, {f.name: f.sampler.draw(rng) for f in cfg.factors})
