"""Seed derivation and the sampling primitives every stage builds on.

All randomness flows through :class:`random.Random` (MT19937) and only its
``random()`` method is ever called.  CPython guarantees that ``random()``
reproduces the same sequence for the same integer seed across releases and
platforms, whereas ``randrange``/``shuffle``/``sample`` are allowed to change.
Everything else (inverse-CDF categorical draws, Poisson draws, uniform indices,
Fisher-Yates shuffles) is implemented here on top of that one call.

Seeds are 64-bit.  ``mix64`` is the SplitMix64 finalizer, a bijection on
``[0, 2**64)``.
"""

from __future__ import annotations

import bisect
import math
import random
from collections.abc import Sequence
from typing import TypeVar

T = TypeVar("T")

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

# Sub-stream tags so that one persona seed feeds independent generators.
STREAM_PERSONA = 0
STREAM_VISITS = 1
STREAM_MENTIONS = 2


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Seed for stream ``index`` under ``master_seed``.

    ``mix64(mix64(master_seed) + (index + 1) * GOLDEN_GAMMA)``.  For a fixed
    master seed the map is injective in ``index`` modulo 2**64, because the
    gamma is odd and ``mix64`` is a bijection.
    """
    if index < 0:
        raise ValueError("index must be non-negative")
    return mix64((mix64(master_seed) + (index + 1) * GOLDEN_GAMMA) & MASK64)


def stream(seed: int, tag: int) -> random.Random:
    """A fresh generator for sub-stream ``tag`` of ``seed``."""
    return random.Random(derive_seed(seed, tag))


class CategoricalSampler:
    """Inverse-CDF draw over labels in their listed order."""

    __slots__ = ("labels", "_cum", "_last_positive")

    def __init__(self, labels: Sequence[str], weights: Sequence[float]):
        if len(labels) != len(weights) or not labels:
            raise ValueError("labels and weights must be non-empty and aligned")
        total = 0.0
        cum = []
        last_positive = -1
        for i, w in enumerate(weights):
            if w < 0:
                raise ValueError("weights must be non-negative")
            total += w
            cum.append(total)
            if w > 0:
                last_positive = i
        if last_positive < 0:
            raise ValueError("at least one weight must be positive")
        self.labels = tuple(labels)
        self._cum = cum
        self._last_positive = last_positive

    def draw_index(self, rng: random.Random) -> int:
        u = rng.random() * self._cum[-1]
        i = bisect.bisect_right(self._cum, u)
        # u can round up to the total; never land on a trailing zero-mass slot
        return min(i, self._last_positive)

    def draw(self, rng: random.Random) -> str:
        return self.labels[self.draw_index(rng)]


def uniform_index(rng: random.Random, n: int) -> int:
    if n <= 0:
        raise ValueError("n must be positive")
    return min(int(rng.random() * n), n - 1)


_POISSON_CHUNK = 30.0


def _poisson_small(rng: random.Random, lam: float, u: float | None = None) -> int:
    # sequential inverse transform, one uniform per draw
    if u is None:
        u = rng.random()
    p = math.exp(-lam)
    cdf = p
    k = 0
    limit = int(lam + 40.0 * math.sqrt(lam) + 40)
    while u > cdf and k < limit:
        k += 1
        p *= lam / k
        cdf += p
    return k


def poisson(rng: random.Random, lam: float) -> int:
    """Poisson(lam).  Large means are split into chunks of at most 30."""
    if lam < 0:
        raise ValueError("lam must be non-negative")
    if lam == 0:
        return 0
    total = 0
    while lam > _POISSON_CHUNK:
        total += _poisson_small(rng, _POISSON_CHUNK)
        lam -= _POISSON_CHUNK
    return total + _poisson_small(rng, lam)


def zero_truncated_poisson(rng: random.Random, lam: float) -> int:
    """Poisson(lam) conditioned on being at least 1.

    For ``lam <= 30`` a single uniform is mapped into ``(P(0), 1)`` and
    inverted; larger means reject zeros, which are vanishingly rare there.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    if lam <= _POISSON_CHUNK:
        p0 = math.exp(-lam)
        u = p0 + rng.random() * (1.0 - p0)
        return max(1, _poisson_small(rng, lam, u))
    while True:
        k = poisson(rng, lam)
        if k >= 1:
            return k


def shuffle(rng: random.Random, items: list[T]) -> list[T]:
    """In-place Fisher-Yates shuffle; returns ``items``."""
    for i in range(len(items) - 1, 0, -1):
        j = uniform_index(rng, i + 1)
        items[i], items[j] = items[j], items[i]
    return items


def sample_indices(rng: random.Random, population: int, k: int) -> list[int]:
    """``k`` distinct indices from ``range(population)``, uniformly, via a
    partial Fisher-Yates pass.  Result is in selection order."""
    if not 0 <= k <= population:
        raise ValueError("k must lie in [0, population]")
    pool = list(range(population))
    for i in range(k):
        j = i + uniform_index(rng, population - i)
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:k]
