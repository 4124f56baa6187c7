import dataclasses
import random
from collections import Counter

import pytest

from cohortforge.config import CategoryWeightTable, KeywordLexicon, KeywordTrendTable
from cohortforge.errors import UnknownKeyError, YearOutOfRangeError
from cohortforge.persona import sample_persona
from cohortforge.semantic import (
    expected_keyword_count,
    populate_mentions,
    sample_category,
    sample_keyword,
    sample_keyword_count,
    sample_mentions,
)
from cohortforge.trajectory import build_visit_plan

from oracles import mention_rate, normalized_category_weights, two_stage_marginals


def toy_config(cfg, lexicon, weights):
    return dataclasses.replace(
        cfg, lexicon=KeywordLexicon(lexicon), category_weights=CategoryWeightTable(weights)
    )


@pytest.mark.parametrize("year", range(1, 11))
def test_expected_count_matches_oracle(cfg, year):
    assert expected_keyword_count(cfg, year) == pytest.approx(mention_rate(year), abs=1e-12)


def test_expected_count_spot_values(cfg):
    assert expected_keyword_count(cfg, 1) == pytest.approx(20.80)
    assert expected_keyword_count(cfg, 10) == pytest.approx(13.725)
    unscaled = dataclasses.replace(
        cfg, keyword_trend=KeywordTrendTable(cfg.keyword_trend.per_year_mean, 1.0)
    )
    assert expected_keyword_count(unscaled, 10) == pytest.approx(2.745)


@pytest.mark.parametrize("year", [0, 11])
def test_expected_count_year_range(cfg, year):
    with pytest.raises(YearOutOfRangeError):
        expected_keyword_count(cfg, year)


def test_keyword_count_mean_year_one(cfg):
    rng = random.Random(42)
    n = 200_000
    mean = sum(sample_keyword_count(cfg, 1, rng) for _ in range(n)) / n
    assert abs(mean - 20.80) / 20.80 < 0.01


def test_keyword_count_floor_on_tiny_rate(cfg):
    tiny = dataclasses.replace(
        cfg, keyword_trend=KeywordTrendTable({y: 0.0002 for y in range(10, 0, -1)}, 5.0)
    )
    rng = random.Random(0)
    assert min(sample_keyword_count(tiny, 3, rng) for _ in range(5000)) >= 1


def test_keyword_count_deterministic(cfg):
    assert sample_keyword_count(cfg, 4, random.Random(9)) == sample_keyword_count(cfg, 4, random.Random(9))


def test_category_frequencies(cfg):
    rng = random.Random(42)
    n = 500_000
    counts = Counter(sample_category(cfg, rng) for _ in range(n))
    oracle = normalized_category_weights()
    assert abs(counts["physiological_changes"] / n - oracle["physiological_changes"]) <= 0.005
    assert abs(counts["memory"] / n - oracle["memory"]) <= 0.005


def test_single_category_table(cfg):
    toy = toy_config(cfg, {"only": ("a", "b")}, {"only": 2.0})
    rng = random.Random(1)
    assert {sample_category(toy, rng) for _ in range(1000)} == {"only"}


def test_single_keyword_category(cfg):
    toy = toy_config(cfg, {"c": ("solo",)}, {"c": 1.0})
    rng = random.Random(1)
    assert {sample_keyword(toy, "c", rng) for _ in range(100)} == {"solo"}


def test_memory_keywords_uniform(cfg):
    rng = random.Random(7)
    n = 300_000
    counts = Counter(sample_keyword(cfg, "memory", rng) for _ in range(n))
    assert set(counts) == set(cfg.lexicon.keywords["memory"])
    for c in counts.values():
        assert abs(c / n - 0.1) <= 0.005


def test_unknown_category(cfg):
    with pytest.raises(UnknownKeyError):
        sample_keyword(cfg, "astrology", random.Random(0))


def test_mentions_belong_to_their_category(cfg):
    rng = random.Random(3)
    for _ in range(200):
        for m in sample_mentions(cfg, 5, rng):
            assert m.keyword in cfg.lexicon.keywords[m.category]


def test_toy_two_stage_marginals(cfg):
    lexicon = {"x": ("x1",), "y": ("y1", "y2"), "z": ("z1", "z2", "z3")}
    weights = {"x": 1.0, "y": 2.0, "z": 5.0}
    toy = toy_config(cfg, lexicon, weights)
    oracle = two_stage_marginals(weights, {k: list(v) for k, v in lexicon.items()})
    rng = random.Random(42)
    n = 200_000
    counts = Counter()
    for _ in range(n):
        cat = sample_category(toy, rng)
        counts[sample_keyword(toy, cat, rng)] += 1
    for kw, p in oracle.items():
        assert abs(counts[kw] / n - p) <= 0.005


def test_populate_mentions_is_deterministic_and_complete(cfg):
    plan = build_visit_plan(cfg, sample_persona(cfg, 1, 42))
    a = populate_mentions(cfg, plan)
    b = populate_mentions(cfg, plan)
    assert a == b
    assert [n.note_id for n in a.notes] == [n.note_id for n in plan.notes]
    assert all(len(n.mentions) >= 1 for n in a.notes)
