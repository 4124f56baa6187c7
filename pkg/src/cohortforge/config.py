"""Distribution configuration: every table the pipeline samples from.

The on-disk form is versioned JSON (see ``docs/config_schema.md``).  Loaded
configs are frozen dataclasses and are treated as read-only everywhere; the
``dict`` fields are never mutated after validation.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from functools import cached_property
from typing import IO, Any

from . import defaults
from .errors import ConfigParseError, SchemaError, ValidationError, YearOutOfRangeError
from .rng import CategoricalSampler

SUPPORTED_VERSIONS = frozenset({defaults.SCHEMA_VERSION})
YEARS = tuple(range(10, 0, -1))
RENORMALIZE_TOLERANCE = 1e-6
# Sums this close to 1 are left untouched so that dump/load is a fixed point.
_EXACT_ENOUGH = 1e-12

TOP_LEVEL_KEYS = (
    "version",
    "factors",
    "lexicon",
    "visits",
    "keyword_trend",
    "category_weights",
    "stage_map",
    "generation_params",
)


@dataclass(frozen=True)
class FactorSpec:
    name: str
    group: str
    categories: tuple[tuple[str, float], ...]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.categories)

    @property
    def probabilities(self) -> dict[str, float]:
        return dict(self.categories)

    @cached_property
    def sampler(self) -> CategoricalSampler:
        return CategoricalSampler(self.labels, [p for _, p in self.categories])


@dataclass(frozen=True)
class KeywordLexicon:
    keywords: dict[str, tuple[str, ...]]

    @property
    def categories(self) -> tuple[str, ...]:
        return tuple(self.keywords)

    @cached_property
    def category_of(self) -> dict[str, str]:
        return {kw: cat for cat, kws in self.keywords.items() for kw in kws}

    def __len__(self) -> int:
        return sum(len(v) for v in self.keywords.values())


@dataclass(frozen=True)
class VisitWindow:
    window_id: str
    hi: int
    lo: int

    @property
    def years(self) -> tuple[int, ...]:
        return tuple(range(self.hi, self.lo - 1, -1))

    def __len__(self) -> int:
        return self.hi - self.lo + 1


@dataclass(frozen=True)
class VisitTypeTable:
    windows: tuple[VisitWindow, ...]
    note_types: tuple[str, ...]
    means: dict[tuple[str, str], float]
    # Optional per-patient count samples for bootstrap resampling, keyed like ``means``.
    empirical_counts: dict[tuple[str, str], tuple[int, ...]] = field(default_factory=dict)

    def window(self, window_id: str) -> VisitWindow:
        for w in self.windows:
            if w.window_id == window_id:
                return w
        raise KeyError(window_id)


@dataclass(frozen=True)
class KeywordTrendTable:
    per_year_mean: dict[int, float]
    density_multiplier: float = defaults.DENSITY_MULTIPLIER


@dataclass(frozen=True)
class CategoryWeightTable:
    weights: dict[str, float]

    @cached_property
    def probabilities(self) -> dict[str, float]:
        return normalize_weights(self.weights)

    @cached_property
    def sampler(self) -> CategoricalSampler:
        probs = self.probabilities
        return CategoricalSampler(list(probs), list(probs.values()))


@dataclass(frozen=True)
class StageMap:
    stage_by_year: dict[int, str]


@dataclass(frozen=True)
class GenerationParams:
    backend: str = "mock"
    temperature: float = 0.7
    max_output_tokens: int = 1500
    max_retries: int = 3
    concurrency: int = 4


@dataclass(frozen=True)
class DistributionConfig:
    version: str
    factors: tuple[FactorSpec, ...]
    lexicon: KeywordLexicon
    visits: VisitTypeTable
    keyword_trend: KeywordTrendTable
    category_weights: CategoryWeightTable
    stage_map: StageMap
    generation_params: GenerationParams

    def factor(self, name: str) -> FactorSpec:
        for f in self.factors:
            if f.name == name:
                return f
        raise KeyError(name)

    @cached_property
    def digest(self) -> str:
        return config_digest(self)


# ---------------------------------------------------------------------------
# weights


def normalize_weights(weights: Mapping[str, float]) -> dict[str, float]:
    """Scale positive weights to a probability vector, preserving key order."""
    if not weights:
        raise ValidationError("weights must not be empty")
    for key, w in weights.items():
        if not (isinstance(w, (int, float)) and math.isfinite(w)) or w <= 0:
            raise ValidationError(f"weight for {key!r} must be a positive finite number, got {w!r}")
    total = math.fsum(weights.values())
    return {key: w / total for key, w in weights.items()}


# ---------------------------------------------------------------------------
# validation helpers


def _require(mapping: Any, key: str, where: str) -> Any:
    if not isinstance(mapping, Mapping):
        raise SchemaError(f"{where} must be an object")
    if key not in mapping:
        raise SchemaError(f"{where} is missing required key {key!r}")
    return mapping[key]


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{where} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ValidationError(f"{where} must be finite")
    return float(value)


def _year_key(key: Any, where: str) -> int:
    try:
        year = int(key)
    except (TypeError, ValueError):
        raise SchemaError(f"{where}: year key {key!r} is not an integer") from None
    if year not in YEARS:
        raise ValidationError(f"{where}: year {year} outside 1..10")
    return year


def _parse_factor(raw: Any, index: int) -> FactorSpec:
    where = f"factors[{index}]"
    name = _require(raw, "name", where)
    group = _require(raw, "group", where)
    cats = _require(raw, "categories", where)
    if not isinstance(name, str) or not name:
        raise SchemaError(f"{where}.name must be a non-empty string")
    where = f"factor {name!r}"
    if group not in defaults.FACTOR_GROUPS:
        raise SchemaError(f"{where}: unknown group {group!r}")
    if not isinstance(cats, list) or not cats:
        raise SchemaError(f"{where}: categories must be a non-empty list")
    labels: list[str] = []
    probs: list[float] = []
    for j, c in enumerate(cats):
        label = _require(c, "label", f"{where}.categories[{j}]")
        p = _number(_require(c, "probability", f"{where}.categories[{j}]"), f"{where}[{label!r}]")
        if not isinstance(label, str) or not label:
            raise SchemaError(f"{where}: category labels must be non-empty strings")
        if label in labels:
            raise ValidationError(f"{where}: duplicate category label {label!r}")
        if p < 0 or p > 1:
            raise ValidationError(f"{where}: probability for {label!r} must lie in [0, 1], got {p}")
        labels.append(label)
        probs.append(p)
    total = math.fsum(probs)
    if abs(total - 1.0) > RENORMALIZE_TOLERANCE:
        raise ValidationError(f"{where}: probabilities sum to {total:.9f}, not 1")
    if abs(total - 1.0) > _EXACT_ENOUGH:
        probs = [p / total for p in probs]
    return FactorSpec(name, group, tuple(zip(labels, probs)))


def _parse_lexicon(raw: Any) -> KeywordLexicon:
    if not isinstance(raw, Mapping):
        raise SchemaError("lexicon must be an object")
    if set(raw) != set(defaults.LEXICON_CATEGORIES):
        raise SchemaError(
            f"lexicon must have exactly the categories {list(defaults.LEXICON_CATEGORIES)}, got {list(raw)}"
        )
    owner: dict[str, str] = {}
    keywords: dict[str, tuple[str, ...]] = {}
    for cat in defaults.LEXICON_CATEGORIES:
        words = raw[cat]
        if not isinstance(words, list) or not words:
            raise ValidationError(f"lexicon category {cat!r} must be a non-empty list")
        for w in words:
            if not isinstance(w, str) or not w.strip():
                raise SchemaError(f"lexicon category {cat!r} has a non-string or blank keyword")
            if w in owner:
                raise ValidationError(f"keyword {w!r} appears in both {owner[w]!r} and {cat!r}")
            owner[w] = cat
        keywords[cat] = tuple(words)
    return KeywordLexicon(keywords)


def _parse_visits(raw: Any) -> VisitTypeTable:
    windows_raw = _require(raw, "windows", "visits")
    types_raw = _require(raw, "note_types", "visits")
    means_raw = _require(raw, "means", "visits")
    if not isinstance(windows_raw, list) or not windows_raw:
        raise SchemaError("visits.windows must be a non-empty list")
    windows = []
    for i, w in enumerate(windows_raw):
        wid = _require(w, "id", f"visits.windows[{i}]")
        years = _require(w, "years", f"visits.windows[{i}]")
        if not (isinstance(years, list) and len(years) == 2 and all(isinstance(y, int) for y in years)):
            raise SchemaError(f"visits.windows[{i}].years must be [hi, lo] integers")
        windows.append(VisitWindow(str(wid), years[0], years[1]))
    expected_hi = 10
    for w in windows:
        if w.hi != expected_hi or w.lo > w.hi:
            raise ValidationError("visit windows must partition years 10..1 in descending order without gaps")
        expected_hi = w.lo - 1
    if expected_hi != 0:
        raise ValidationError("visit windows must partition years 10..1 in descending order without gaps")
    if len({w.window_id for w in windows}) != len(windows):
        raise ValidationError("visit window ids must be unique")

    if not isinstance(types_raw, list) or not types_raw or len(set(types_raw)) != len(types_raw):
        raise SchemaError("visits.note_types must be a non-empty list of unique names")
    note_types = tuple(str(t) for t in types_raw)

    if not isinstance(means_raw, Mapping) or set(means_raw) != set(note_types):
        raise SchemaError("visits.means must have one entry per note type")
    means: dict[tuple[str, str], float] = {}
    for t in note_types:
        row = means_raw[t]
        for w in windows:
            v = _number(_require(row, w.window_id, f"visits.means[{t!r}]"), f"visits.means[{t!r}][{w.window_id!r}]")
            if v < 0:
                raise ValidationError(f"visit mean for ({w.window_id!r}, {t!r}) is negative")
            means[(w.window_id, t)] = v

    empirical: dict[tuple[str, str], tuple[int, ...]] = {}
    for t, row in (raw.get("empirical_counts") or {}).items():
        if t not in note_types:
            raise SchemaError(f"visits.empirical_counts: unknown note type {t!r}")
        for wid, samples in row.items():
            if wid not in {w.window_id for w in windows}:
                raise SchemaError(f"visits.empirical_counts[{t!r}]: unknown window {wid!r}")
            if not samples or not all(isinstance(s, int) and s >= 0 for s in samples):
                raise ValidationError(f"visits.empirical_counts[{t!r}][{wid!r}] must be non-negative integers")
            empirical[(wid, t)] = tuple(samples)
    return VisitTypeTable(tuple(windows), note_types, means, empirical)


def _parse_trend(raw: Any) -> KeywordTrendTable:
    per_year_raw = _require(raw, "per_year_mean", "keyword_trend")
    mult = _number(_require(raw, "density_multiplier", "keyword_trend"), "keyword_trend.density_multiplier")
    if not isinstance(per_year_raw, Mapping):
        raise SchemaError("keyword_trend.per_year_mean must be an object")
    per_year = {}
    for k, v in per_year_raw.items():
        year = _year_key(k, "keyword_trend.per_year_mean")
        value = _number(v, f"keyword_trend.per_year_mean[{year}]")
        if value <= 0:
            raise ValidationError(f"keyword_trend.per_year_mean[{year}] must be positive")
        per_year[year] = value
    if set(per_year) != set(YEARS):
        raise ValidationError("keyword_trend.per_year_mean must cover every year 1..10")
    if mult <= 0:
        raise ValidationError("keyword_trend.density_multiplier must be positive")
    return KeywordTrendTable({y: per_year[y] for y in YEARS}, mult)


def _parse_weights(raw: Any, lexicon: KeywordLexicon) -> CategoryWeightTable:
    if not isinstance(raw, Mapping):
        raise SchemaError("category_weights must be an object")
    if set(raw) != set(lexicon.categories):
        raise SchemaError("category_weights must name exactly the lexicon categories")
    weights = {cat: _number(raw[cat], f"category_weights[{cat!r}]") for cat in lexicon.categories}
    normalize_weights(weights)
    return CategoryWeightTable(weights)


def _parse_stage_map(raw: Any) -> StageMap:
    if not isinstance(raw, Mapping):
        raise SchemaError("stage_map must be an object")
    stages = {}
    for k, v in raw.items():
        year = _year_key(k, "stage_map")
        if v not in defaults.STAGES:
            raise ValidationError(f"stage_map[{year}]: unknown stage {v!r}")
        stages[year] = v
    if set(stages) != set(YEARS):
        raise ValidationError("stage_map must cover every year 1..10")
    return StageMap({y: stages[y] for y in YEARS})


def _parse_generation(raw: Any) -> GenerationParams:
    if not isinstance(raw, Mapping):
        raise SchemaError("generation_params must be an object")
    params = GenerationParams(
        backend=str(raw.get("backend", "mock")),
        temperature=_number(raw.get("temperature", 0.7), "generation_params.temperature"),
        max_output_tokens=int(raw.get("max_output_tokens", 1500)),
        max_retries=int(raw.get("max_retries", 3)),
        concurrency=int(raw.get("concurrency", 4)),
    )
    if params.backend not in ("mock", "http"):
        raise ValidationError(f"generation_params.backend must be 'mock' or 'http', got {params.backend!r}")
    if params.temperature < 0 or params.temperature > 2:
        raise ValidationError("generation_params.temperature must lie in [0, 2]")
    if params.max_output_tokens < 1 or params.max_retries < 0 or params.concurrency < 1:
        raise ValidationError("generation_params: max_output_tokens >= 1, max_retries >= 0, concurrency >= 1")
    return params


def config_from_dict(raw: Mapping[str, Any]) -> DistributionConfig:
    if not isinstance(raw, Mapping):
        raise SchemaError("config root must be an object")
    version = str(_require(raw, "version", "config"))
    if version not in SUPPORTED_VERSIONS:
        raise SchemaError(f"unsupported config version {version!r}; supported: {sorted(SUPPORTED_VERSIONS)}")
    for key in TOP_LEVEL_KEYS:
        _require(raw, key, "config")
    factors_raw = raw["factors"]
    if not isinstance(factors_raw, list) or not factors_raw:
        raise SchemaError("config must define at least one factor")
    factors = tuple(_parse_factor(f, i) for i, f in enumerate(factors_raw))
    if len({f.name for f in factors}) != len(factors):
        raise ValidationError("factor names must be unique")
    lexicon = _parse_lexicon(raw["lexicon"])
    return DistributionConfig(
        version=version,
        factors=factors,
        lexicon=lexicon,
        visits=_parse_visits(raw["visits"]),
        keyword_trend=_parse_trend(raw["keyword_trend"]),
        category_weights=_parse_weights(raw["category_weights"], lexicon),
        stage_map=_parse_stage_map(raw["stage_map"]),
        generation_params=_parse_generation(raw["generation_params"]),
    )


def load_config(source: bytes | str | IO) -> DistributionConfig:
    """Parse and validate a config from bytes, text, or a readable stream."""
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigParseError(f"config is not UTF-8: {exc}") from exc
    try:
        raw = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"malformed config: {exc}") from exc
    return config_from_dict(raw)


def load_config_file(path) -> DistributionConfig:
    with open(path, "rb") as fh:
        return load_config(fh)


# ---------------------------------------------------------------------------
# serialization


def config_to_dict(cfg: DistributionConfig) -> dict[str, Any]:
    visits: dict[str, Any] = {
        "windows": [{"id": w.window_id, "years": [w.hi, w.lo]} for w in cfg.visits.windows],
        "note_types": list(cfg.visits.note_types),
        "means": {
            t: {w.window_id: cfg.visits.means[(w.window_id, t)] for w in cfg.visits.windows}
            for t in cfg.visits.note_types
        },
    }
    if cfg.visits.empirical_counts:
        emp: dict[str, dict[str, list[int]]] = {}
        for (wid, t), samples in cfg.visits.empirical_counts.items():
            emp.setdefault(t, {})[wid] = list(samples)
        visits["empirical_counts"] = emp
    return {
        "version": cfg.version,
        "factors": [
            {
                "name": f.name,
                "group": f.group,
                "categories": [{"label": lab, "probability": p} for lab, p in f.categories],
            }
            for f in cfg.factors
        ],
        "lexicon": {cat: list(kws) for cat, kws in cfg.lexicon.keywords.items()},
        "visits": visits,
        "keyword_trend": {
            "per_year_mean": {str(y): v for y, v in cfg.keyword_trend.per_year_mean.items()},
            "density_multiplier": cfg.keyword_trend.density_multiplier,
        },
        "category_weights": dict(cfg.category_weights.weights),
        "stage_map": {str(y): s for y, s in cfg.stage_map.stage_by_year.items()},
        "generation_params": {
            "backend": cfg.generation_params.backend,
            "temperature": cfg.generation_params.temperature,
            "max_output_tokens": cfg.generation_params.max_output_tokens,
            "max_retries": cfg.generation_params.max_retries,
            "concurrency": cfg.generation_params.concurrency,
        },
    }


def dump_config(cfg: DistributionConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, ensure_ascii=False) + "\n"


def config_digest(cfg: DistributionConfig) -> str:
    canonical = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def default_config_dict() -> dict[str, Any]:
    factors = []
    for group, rows in defaults.RISK_FACTORS:
        for name, cats in rows:
            factors.append({
                "name": name,
                "group": group,
                "categories": [{"label": lab, "probability": p} for lab, p in cats],
            })
    return {
        "version": defaults.SCHEMA_VERSION,
        "factors": factors,
        "lexicon": {cat: list(kws) for cat, kws in defaults.LEXICON.items()},
        "visits": {
            "windows": [{"id": wid, "years": [hi, lo]} for wid, hi, lo in defaults.VISIT_WINDOWS],
            "note_types": list(defaults.NOTE_TYPES),
            "means": {
                t: {wid: v for (wid, _, _), v in zip(defaults.VISIT_WINDOWS, row)}
                for t, row in defaults.VISIT_MEANS.items()
            },
        },
        "keyword_trend": {
            "per_year_mean": {str(y): v for y, v in defaults.KEYWORDS_PER_NOTE.items()},
            "density_multiplier": defaults.DENSITY_MULTIPLIER,
        },
        "category_weights": dict(defaults.CATEGORY_WEIGHTS),
        "stage_map": {str(y): s for y, s in defaults.STAGE_BY_YEAR.items()},
        "generation_params": dict(defaults.GENERATION_PARAMS),
    }


def default_config() -> DistributionConfig:
    return config_from_dict(default_config_dict())


def check_year(year: int) -> int:
    if isinstance(year, bool) or not isinstance(year, int) or year not in YEARS:
        raise YearOutOfRangeError(f"year before diagnosis must be an integer in 1..10, got {year!r}")
    return year
