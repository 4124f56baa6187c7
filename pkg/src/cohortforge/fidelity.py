"""Statistical checks of generated artifacts against the configured targets."""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable, Mapping
from dataclasses import asdict, dataclass, field, fields

from .config import DistributionConfig
from .errors import ValidationError
from .persona import Persona
from .semantic import expected_keyword_count
from .trajectory import VisitPlan, window_for_year

PROB_SUM_TOLERANCE = 1e-6


# -- chi-square tail ---------------------------------------------------------

def _gamma_series(a: float, x: float) -> float:
    # lower regularized P(a, x), valid for x < a + 1
    term = total = 1.0 / a
    ap = a
    for _ in range(10_000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-16:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cont_fraction(a: float, x: float) -> float:
    # upper regularized Q(a, x) by modified Lentz, valid for x >= a + 1
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def regularized_upper_gamma(a: float, x: float) -> float:
    if a <= 0:
        raise ValueError("a must be positive")
    if x <= 0:
        return 1.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _gamma_series(a, x))
    return _gamma_cont_fraction(a, x)


def chi_square_sf(stat: float, dof: int) -> float:
    """P(X >= stat) for X ~ chi-square(dof)."""
    if dof < 1:
        return 1.0
    return regularized_upper_gamma(dof / 2.0, stat / 2.0)


# -- categorical comparison --------------------------------------------------

@dataclass(frozen=True)
class Divergence:
    n: int
    l1: float
    chi_square: float
    dof: int
    p_value: float
    impossible: tuple[str, ...] = ()
    observed_freq: dict[str, float] = field(default_factory=dict)


def compare_categorical(observed_counts: Mapping[str, int], expected_probs: Mapping[str, float]) -> Divergence:
    """L1 distance and chi-square goodness of fit.

    Labels in ``expected_probs`` that are absent from ``observed_counts`` count
    as zero.  Labels with zero expected mass but nonzero counts are listed in
    ``impossible`` and left out of the chi-square sum.
    """
    extra = set(observed_counts) - set(expected_probs)
    if extra:
        raise ValidationError(f"observed labels not in expected set: {sorted(map(str, extra))}")
    if any(p < 0 for p in expected_probs.values()):
        raise ValidationError("expected probabilities must be non-negative")
    if abs(math.fsum(expected_probs.values()) - 1.0) > PROB_SUM_TOLERANCE:
        raise ValidationError("expected probabilities must sum to 1")
    if any(c < 0 for c in observed_counts.values()):
        raise ValidationError("observed counts must be non-negative")
    n = sum(observed_counts.values())
    if n < 1:
        raise ValidationError("need at least one observation")

    freq = {k: observed_counts.get(k, 0) / n for k in expected_probs}
    l1 = math.fsum(abs(freq[k] - p) for k, p in expected_probs.items())
    chi = 0.0
    impossible = []
    k_pos = 0
    for k, p in expected_probs.items():
        obs = observed_counts.get(k, 0)
        if p > 0:
            k_pos += 1
            e = n * p
            chi += (obs - e) ** 2 / e
        elif obs > 0:
            impossible.append(k)
    dof = k_pos - 1
    return Divergence(n, l1, chi, dof, chi_square_sf(chi, dof), tuple(impossible), freq)


# -- reports -----------------------------------------------------------------

@dataclass(frozen=True)
class Tolerances:
    cohort_l1: float = 0.01
    category_l1: float = 0.02
    keyword_count_rel: float = 0.02
    visit_rel: float = 0.05

    @classmethod
    def from_overrides(cls, overrides: Mapping[str, float] | None) -> Tolerances:
        if not overrides:
            return cls()
        known = {f.name for f in fields(cls)}
        unknown = set(overrides) - known
        if unknown:
            raise ValidationError(f"unknown tolerance(s): {sorted(unknown)}")
        for k, v in overrides.items():
            if not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
                raise ValidationError(f"tolerance {k} must be a non-negative number")
        return cls(**{k: float(v) for k, v in overrides.items()})


@dataclass(frozen=True)
class Check:
    name: str
    target: object
    observed: object
    metrics: dict[str, float]
    passed: bool
    tolerance: float | None
    skipped: bool = False
    detail: str = ""


@dataclass
class FidelityReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def overall_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    def extend(self, other: FidelityReport) -> FidelityReport:
        self.checks.extend(other.checks)
        return self

    def failed(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {"overall_pass": self.overall_pass, "checks": [asdict(c) for c in self.checks]}


def _categorical_check(name: str, counts, expected, tol: float) -> Check:
    d = compare_categorical(counts, expected)
    passed = d.l1 <= tol and not d.impossible
    detail = f"impossible mass on {', '.join(d.impossible)}" if d.impossible else ""
    return Check(
        name=name,
        target=dict(expected),
        observed=d.observed_freq,
        metrics={"n": d.n, "l1": d.l1, "chi_square": d.chi_square, "dof": d.dof, "p_value": d.p_value},
        passed=passed,
        tolerance=tol,
        detail=detail,
    )


def validate_cohort(
    personas: Iterable[Persona], cfg: DistributionConfig, tolerances: Tolerances | None = None
) -> FidelityReport:
    tol = tolerances or Tolerances()
    counts = {f.name: Counter() for f in cfg.factors}
    n = 0
    for p in personas:
        n += 1
        for f in cfg.factors:
            try:
                counts[f.name][p.assignments[f.name]] += 1
            except KeyError:
                raise ValidationError(f"{p.patient_id} has no value for factor {f.name!r}") from None
    if n == 0:
        raise ValidationError("cohort is empty")
    return FidelityReport([
        _categorical_check(f"cohort:{f.name}", counts[f.name], f.probabilities, tol.cohort_l1)
        for f in cfg.factors
    ])


def _ztp_mean(lam: float) -> float:
    return lam / -math.expm1(-lam)


def validate_keyword_alignment(
    plans: Iterable[VisitPlan], cfg: DistributionConfig, tolerances: Tolerances | None = None
) -> FidelityReport:
    """Per-year mean mentions per note, and pooled category proportions.

    The per-year target is the mean of the zero-truncated count law, which
    differs from the configured rate by less than 1e-6 relative for rates above 15.
    """
    tol = tolerances or Tolerances()
    notes_per_year: Counter = Counter()
    mentions_per_year: Counter = Counter()
    categories: Counter = Counter()
    for plan in plans:
        for note in plan.notes:
            notes_per_year[note.year_before_dx] += 1
            mentions_per_year[note.year_before_dx] += len(note.mentions)
            for m in note.mentions:
                categories[m.category] += 1

    report = FidelityReport()
    for year in range(10, 0, -1):
        rate = expected_keyword_count(cfg, year)
        target = _ztp_mean(rate)
        name = f"keywords:year_{year}:mean_count"
        n = notes_per_year[year]
        if n == 0:
            report.checks.append(Check(name, target, None, {"n": 0}, True, tol.keyword_count_rel,
                                       skipped=True, detail="no notes for this year"))
            continue
        mean = mentions_per_year[year] / n
        rel = abs(mean - target) / target
        report.checks.append(Check(
            name, target, mean, {"n": n, "rate": rate, "relative_error": rel},
            rel <= tol.keyword_count_rel, tol.keyword_count_rel,
        ))
    expected = cfg.category_weights.probabilities
    if sum(categories.values()) == 0:
        report.checks.append(Check("keywords:category_proportions", dict(expected), None, {"n": 0}, True,
                                   tol.category_l1, skipped=True, detail="no mentions"))
    else:
        report.checks.append(_categorical_check("keywords:category_proportions", categories, expected,
                                                tol.category_l1))
    return report


def validate_visit_alignment(
    plans: Iterable[VisitPlan], cfg: DistributionConfig, tolerances: Tolerances | None = None
) -> FidelityReport:
    tol = tolerances or Tolerances()
    table = cfg.visits
    totals: Counter = Counter()
    n = 0
    for plan in plans:
        n += 1
        for note in plan.notes:
            if note.note_type not in table.note_types:
                raise ValidationError(f"{note.note_id}: unknown note type {note.note_type!r}")
            totals[(window_for_year(table, note.year_before_dx), note.note_type)] += 1
    if n == 0:
        raise ValidationError("no visit plans to validate")

    report = FidelityReport()
    for w in table.windows:
        for t in table.note_types:
            target = table.means[(w.window_id, t)]
            count = totals[(w.window_id, t)]
            mean = count / n
            name = f"visits:{w.window_id}:{t}"
            if target == 0.0:
                report.checks.append(Check(
                    name, 0.0, mean, {"n": n, "count": count}, count == 0, 0.0,
                    detail="" if count == 0 else f"{count} note(s) in a zero-rate cell",
                ))
                continue
            rel = abs(mean - target) / target
            report.checks.append(Check(
                name, target, mean, {"n": n, "relative_error": rel}, rel <= tol.visit_rel, tol.visit_rel,
            ))
    return report
