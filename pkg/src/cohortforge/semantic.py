"""Keyword-mention sampling for planned notes.

Per note: a mention count from a zero-truncated Poisson whose mean is the
year's real-world keywords-per-note scaled by the density multiplier; then,
per mention, a category from the normalized category weights and a keyword
uniformly from that category.
"""

from __future__ import annotations

import dataclasses
import random

from .config import DistributionConfig, check_year
from .errors import UnknownKeyError
from .rng import STREAM_MENTIONS, stream, uniform_index, zero_truncated_poisson
from .trajectory import KeywordMention, VisitPlan

__all__ = [
    "KeywordMention",
    "expected_keyword_count",
    "sample_keyword_count",
    "sample_category",
    "sample_keyword",
    "sample_mentions",
    "populate_mentions",
]


def expected_keyword_count(cfg: DistributionConfig, year: int) -> float:
    trend = cfg.keyword_trend
    return trend.per_year_mean[check_year(year)] * trend.density_multiplier


def sample_keyword_count(cfg: DistributionConfig, year: int, rng: random.Random) -> int:
    return zero_truncated_poisson(rng, expected_keyword_count(cfg, year))


def sample_category(cfg: DistributionConfig, rng: random.Random) -> str:
    return cfg.category_weights.sampler.draw(rng)


def sample_keyword(cfg: DistributionConfig, category: str, rng: random.Random) -> str:
    try:
        words = cfg.lexicon.keywords[category]
    except KeyError:
        raise UnknownKeyError(f"unknown lexicon category {category!r}") from None
    return words[uniform_index(rng, len(words))]


def sample_mentions(cfg: DistributionConfig, year: int, rng: random.Random) -> tuple[KeywordMention, ...]:
    out = []
    for _ in range(sample_keyword_count(cfg, year, rng)):
        cat = sample_category(cfg, rng)
        out.append(KeywordMention(cat, sample_keyword(cfg, cat, rng)))
    return tuple(out)


def populate_mentions(cfg: DistributionConfig, plan: VisitPlan) -> VisitPlan:
    """Fill every note's mentions from the plan's own seed stream."""
    rng = stream(plan.seed, STREAM_MENTIONS)
    notes = tuple(
        dataclasses.replace(n, mentions=sample_mentions(cfg, n.year_before_dx, rng)) for n in plan.notes
    )
    return dataclasses.replace(plan, notes=notes)

