"""Seeded instance generators.

Every generator returns exactly normalized rational valuations and is fully
determined by its spec (including the seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from gmpy2 import mpq

from ..cake import ONE, ZERO, Instance, Valuation, rational

KINDS = ("uniform", "spike", "block", "adversarial", "mix")
PROFILES = ("left", "right", "split")


@dataclass(frozen=True)
class GeneratorSpec:
    """What to generate.

    ``kind`` is one of ``uniform``, ``spike`` (``region``, ``fraction``),
    ``block`` (``num_blocks``, optional ``prototypes``), ``adversarial``
    (``profile``) or ``mix`` (``components``: list of ``[weight, spec-dict]``).
    """

    kind: str
    n: int
    seed: int = 0
    region: tuple = ("9/10", "1")
    fraction: object = 1
    num_blocks: int = 8
    prototypes: int | None = None
    profile: str = "right"
    components: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("n must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorSpec":
        data = dict(data)
        if "region" in data:
            data["region"] = tuple(data["region"])
        if "components" in data:
            data["components"] = tuple((w, dict(s)) for w, s in data["components"])
        return cls(**data)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "n": self.n, "seed": self.seed}
        if self.kind == "spike":
            out.update(region=[str(x) for x in self.region], fraction=str(self.fraction))
        elif self.kind == "block":
            out.update(num_blocks=self.num_blocks, prototypes=self.prototypes)
        elif self.kind == "adversarial":
            out.update(profile=self.profile)
        elif self.kind == "mix":
            out.update(components=[[str(w), dict(s)] for w, s in self.components])
        return out

    def with_seed(self, seed: int) -> "GeneratorSpec":
        return replace(self, seed=seed)


def spike_valuation(lo, hi, fraction=1) -> Valuation:
    """``fraction`` of the mass spread evenly over ``[lo, hi]``, the rest over its complement."""
    lo, hi, fraction = rational(lo), rational(hi), rational(fraction)
    if not ZERO <= lo < hi <= ONE or not ZERO <= fraction <= ONE:
        raise ValueError("bad spike region or fraction")
    inside = hi - lo
    outside = ONE - inside
    if outside == 0:
        return Valuation.uniform()
    rest = (ONE - fraction) / outside
    bps, dens = [ZERO], []
    if lo > 0:
        bps.append(lo)
        dens.append(rest)
    dens.append(fraction / inside)
    bps.append(hi)
    if hi < 1:
        bps.append(ONE)
        dens.append(rest)
    return Valuation(bps, dens)


def block_valuation(rng: np.random.Generator, num_blocks: int) -> Valuation:
    """Random integer weights 0..9 on ``num_blocks`` equal blocks (at least one positive)."""
    weights = rng.integers(0, 10, size=num_blocks)
    if not weights.any():
        weights[rng.integers(0, num_blocks)] = 1
    bps = [mpq(i, num_blocks) for i in range(num_blocks + 1)]
    return Valuation.from_weights(bps, [int(w) for w in weights])


def _adversarial(spec: GeneratorSpec) -> list[Valuation]:
    left = spike_valuation(0, "1/10")
    right = spike_valuation("9/10", 1)
    if spec.profile == "left":
        return [left] * spec.n
    if spec.profile == "right":
        return [right] * spec.n
    if spec.profile == "split":
        return [left if p % 2 == 0 else right for p in range(spec.n)]
    raise ValueError(f"unknown adversarial profile {spec.profile!r}")


def _split_counts(n: int, weights: list[mpq]) -> list[int]:
    total = sum(weights, ZERO)
    counts = [int(n * w / total) for w in weights]
    counts[-1] += n - sum(counts)
    return counts


def _valuations(spec: GeneratorSpec) -> list[Valuation]:
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, KINDS.index(spec.kind)]))
    if spec.kind == "uniform":
        return [Valuation.uniform()] * spec.n
    if spec.kind == "spike":
        return [spike_valuation(*spec.region, spec.fraction)] * spec.n
    if spec.kind == "block":
        if spec.prototypes is None:
            return [block_valuation(rng, spec.num_blocks) for _ in range(spec.n)]
        pool = [block_valuation(rng, spec.num_blocks) for _ in range(spec.prototypes)]
        picks = rng.integers(0, spec.prototypes, size=spec.n)
        return [pool[i] for i in picks]
    if spec.kind == "adversarial":
        return _adversarial(spec)
    weights = [rational(w) for w, _ in spec.components]
    counts = _split_counts(spec.n, weights)
    out: list[Valuation] = []
    for index, ((_, sub), count) in enumerate(zip(spec.components, counts)):
        if count == 0:
            continue
        child = GeneratorSpec.from_dict({**sub, "n": count, "seed": spec.seed * 1000 + index})
        out.extend(_valuations(child))
    order = rng.permutation(spec.n)
    return [out[i] for i in order]


def generate(spec: GeneratorSpec | dict) -> Instance:
    if isinstance(spec, dict):
        spec = GeneratorSpec.from_dict(spec)
    return Instance(_valuations(spec))


def with_designated(instance: Instance, valuations: list[Valuation]) -> Instance:
    """Replace the first ``len(valuations)`` players' valuations."""
    rest = instance.valuations[len(valuations) :]
    return Instance(list(valuations) + list(rest))
