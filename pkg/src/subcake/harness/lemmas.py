"""Monte-Carlo checks of the sampling lemma and binomial slack helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from gmpy2 import mpq

from ..cake import rational


def binomial_sigma(p: float, trials: int) -> float:
    """Standard deviation of an empirical frequency around ``p``."""
    p = min(max(float(p), 0.0), 1.0)
    return math.sqrt(p * (1 - p) / trials) if trials else 0.0


def passes_floor(rate: float, floor, trials: int, slack: float = 3.0) -> bool:
    """``rate >= floor - slack * sigma``, with sigma taken at the floor."""
    floor = float(floor)
    return rate >= floor - slack * binomial_sigma(floor, trials)


@dataclass(frozen=True)
class SamplingLemmaParams:
    n: int
    eps: mpq
    s: mpq
    t: mpq
    r: int

    def __post_init__(self):
        for name in ("eps", "s", "t"):
            object.__setattr__(self, name, rational(getattr(self, name)))
        self.validate()

    def validate(self) -> None:
        if not 0 < self.eps <= 1:
            raise ValueError("eps must lie in (0, 1]")
        if self.s <= 1 or self.t <= 1:
            raise ValueError("s and t must exceed 1")
        if (self.s - 1) * (self.t - 1) <= 1:
            raise ValueError("need (s-1)(t-1) > 1")
        if self.r < 0 or self.r * self.s > self.eps * self.n:
            raise ValueError("need 0 <= r <= eps*n/s")

    @property
    def draws(self) -> int:
        x = self.t * self.r / self.eps
        return int(-((-x.numerator) // x.denominator))

    @property
    def subset_size(self) -> int:
        x = self.eps * self.n
        return int(x.numerator // x.denominator)

    def bound(self) -> mpq:
        """``1 - s^2 / (((s-1)(t-1) - 1)^2 r)``; 1 when ``r == 0``."""
        if self.r == 0:
            return mpq(1)
        return 1 - self.s**2 / (((self.s - 1) * (self.t - 1) - 1) ** 2 * self.r)


def check_lemma1(params: SamplingLemmaParams, trials: int, rng: np.random.Generator) -> float:
    """Fraction of trials in which ``ceil(t r / eps)`` uniform draws from ``{0..n-1}``
    hit at least ``r`` distinct members of a fixed ``floor(eps n)``-subset.

    The subset is ``{0, ..., floor(eps n) - 1}``; by symmetry any fixed subset works.
    """
    if trials <= 0:
        raise ValueError("need at least one trial")
    if params.r == 0:
        return 1.0
    hits = 0
    size = params.subset_size
    for _ in range(trials):
        draws = rng.integers(0, params.n, size=params.draws)
        if np.unique(draws[draws < size]).size >= params.r:
            hits += 1
    return hits / trials
