"""Independent reference computations for the test suite.

Nothing here imports the package under test: each oracle recomputes its
value from raw table numbers with exact or brute-force arithmetic.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

# Raw table values, retyped from the source tables (not imported).
CATEGORY_WEIGHTS_RAW = {
    "speech_language": "2.746",
    "memory": "1.000",
    "learning_perception": "1.733",
    "assistance_needed": "1.531",
    "physiological_changes": "8.766",
    "neuropsychiatric_symptoms": "4.399",
}

KEYWORDS_PER_NOTE_RAW = {
    10: "2.745", 9: "2.874", 8: "2.993", 7: "3.101", 6: "3.272",
    5: "3.384", 4: "3.508", 3: "3.678", 2: "3.829", 1: "4.160",
}

VISIT_TABLE_RAW = {
    # note type: (10-7, 6-4, 3-2, 1) window totals
    "primary_care": ("2.54", "2.59", "2.95", "5.01"),
    "neurology": ("0.31", "0.74", "1.18", "2.51"),
    "memory_clinic": ("0.31", "0.74", "1.18", "2.51"),
    "neuropsychology": ("0.31", "0.74", "1.18", "2.51"),
    "geriatrics": ("1.02", "0.74", "0.59", "1.67"),
    "psychiatry_mental_health": ("0.51", "0.74", "0.89", "1.67"),
    "emergency": ("1.02", "1.11", "1.18", "2.51"),
    "hbpc": ("0.00", "0.00", "0.59", "1.67"),
}
WINDOW_LENGTHS = (4, 3, 2, 1)

FULL_COLUMN_COUNTS = {
    "cognitive_impairment": 82_359,
    "concern_by_others": 22_951,
    "requires_assistance": 13_915,
    "physiological_changes": 65_943,
    "neuropsychiatric_symptoms": 45_693,
}
FULL_COLUMN_TOTAL = 233_014


def normalized_category_weights() -> dict[str, float]:
    raw = {k: Fraction(v) for k, v in CATEGORY_WEIGHTS_RAW.items()}
    total = sum(raw.values())
    return {k: float(v / total) for k, v in raw.items()}


def mention_rate(year: int, multiplier: str = "5") -> float:
    return float(Fraction(KEYWORDS_PER_NOTE_RAW[year]) * Fraction(multiplier))


def ztp_mean(lam: float) -> float:
    return lam / (1.0 - math.exp(-lam))


def visit_table_sum() -> float:
    return float(sum(Fraction(v) for row in VISIT_TABLE_RAW.values() for v in row))


def per_year_visit_rate(note_type: str, window_index: int) -> float:
    return float(Fraction(VISIT_TABLE_RAW[note_type][window_index]) / WINDOW_LENGTHS[window_index])


def two_stage_marginals(weights: dict[str, float], lexicon: dict[str, list[str]]) -> dict[str, float]:
    """P(keyword) = sum over categories of P(category) * P(keyword | category),
    enumerated by brute force over every (category, keyword) pair."""
    total_w = sum(weights.values())
    out: dict[str, float] = {}
    for cat, words in lexicon.items():
        for w in words:
            out[w] = out.get(w, 0.0) + (weights[cat] / total_w) * (1.0 / len(words))
    return out


def hamilton(sizes: dict[str, int], target: int) -> dict[str, int]:
    """Largest-remainder apportionment with exact rationals."""
    total = sum(sizes.values())
    quotas = {k: Fraction(target * v, total) for k, v in sizes.items()}
    alloc = {k: math.floor(q) for k, q in quotas.items()}
    order = sorted(quotas, key=lambda k: (-(quotas[k] - alloc[k]), list(sizes).index(k)))
    for k in order[: target - sum(alloc.values())]:
        alloc[k] += 1
    return alloc


def chi_square_brute(observed: list[int], probs: list[float]) -> float:
    n = sum(observed)
    return sum((o - n * p) ** 2 / (n * p) for o, p in zip(observed, probs) if p > 0)


def small_count_vectors(k: int, max_count: int, step: int):
    """All count vectors of length k with entries in range(0, max_count+1, step), nonzero total."""
    for vec in itertools.product(range(0, max_count + 1, step), repeat=k):
        if sum(vec):
            yield list(vec)
