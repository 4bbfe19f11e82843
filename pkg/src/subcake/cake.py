"""Exact model of the unit cake: intervals, piece sets, valuations and instances.

All arithmetic is done on ``gmpy2.mpq`` rationals.  Floats are rejected at the
boundary so that fairness comparisons stay exact.
"""

from __future__ import annotations

import json
from bisect import bisect_left, bisect_right
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from gmpy2 import mpq

ZERO = mpq(0)
ONE = mpq(1)


def rational(value) -> mpq:
    """Convert ``value`` to an exact rational.

    Accepts ints, ``Fraction``/``mpq`` instances and strings in either
    ``"p/q"`` or decimal notation.
    """
    if type(value) is type(ZERO):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, (int, Fraction)):
        return mpq(value)
    if isinstance(value, str):
        text = value.strip()
        try:
            return mpq(Fraction(text))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational: {value!r}") from exc
    if isinstance(value, float):
        raise TypeError(f"refusing inexact float {value!r}; pass a string instead")
    try:
        return mpq(value)
    except TypeError as exc:
        raise TypeError(f"cannot convert {value!r} to a rational") from exc


def format_rational(value: mpq) -> str:
    """Serialize as ``"p/q"`` (or ``"p"`` for integers)."""
    value = rational(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


class Interval:
    """Closed subinterval ``[lo, hi]`` of the unit cake."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi):
        lo = rational(lo)
        hi = rational(hi)
        if not ZERO <= lo <= hi <= ONE:
            raise ValueError(f"invalid interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    @property
    def length(self) -> mpq:
        return self.hi - self.lo

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def __eq__(self, other) -> bool:
        if not isinstance(other, Interval):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self) -> int:
        return hash((self.lo, self.hi))

    def __repr__(self) -> str:
        return f"Interval({format_rational(self.lo)}, {format_rational(self.hi)})"

    def to_json(self) -> list[str]:
        return [format_rational(self.lo), format_rational(self.hi)]


class PieceSet:
    """A finite disjoint union of intervals, kept sorted.

    Zero-length intervals are dropped and touching intervals are merged, so
    ``len(piece)`` is the number of contiguous fragments.  Overlapping input
    raises ``ValueError``; use :meth:`union` to merge overlapping pieces.
    """

    __slots__ = ("intervals",)

    def __init__(self, intervals: Iterable[Interval] = ()):
        parts = sorted((iv for iv in intervals if iv.hi > iv.lo), key=lambda iv: iv.lo)
        merged: list[Interval] = []
        for iv in parts:
            if merged and iv.lo < merged[-1].hi:
                raise ValueError(f"overlapping intervals {merged[-1]!r} and {iv!r}")
            if merged and iv.lo == merged[-1].hi:
                merged[-1] = Interval(merged[-1].lo, iv.hi)
            else:
                merged.append(iv)
        self.intervals: tuple[Interval, ...] = tuple(merged)

    @classmethod
    def of(cls, *bounds: tuple) -> "PieceSet":
        """``PieceSet.of((0, "1/4"), ("1/2", "3/4"))``"""
        return cls(Interval(lo, hi) for lo, hi in bounds)

    @classmethod
    def whole(cls) -> "PieceSet":
        return cls((Interval(ZERO, ONE),))

    @classmethod
    def union(cls, pieces: Iterable["PieceSet | Interval"]) -> "PieceSet":
        """Set union; overlapping parts are merged."""
        parts: list[Interval] = []
        for piece in pieces:
            if isinstance(piece, Interval):
                parts.append(piece)
            else:
                parts.extend(piece.intervals)
        parts = sorted((iv for iv in parts if iv.hi > iv.lo), key=lambda iv: iv.lo)
        merged: list[list[mpq]] = []
        for iv in parts:
            if merged and iv.lo <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], iv.hi)
            else:
                merged.append([iv.lo, iv.hi])
        return cls(Interval(lo, hi) for lo, hi in merged)

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.intervals)

    def __bool__(self) -> bool:
        return bool(self.intervals)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PieceSet):
            return NotImplemented
        return self.intervals == other.intervals

    def __hash__(self) -> int:
        return hash(self.intervals)

    def __repr__(self) -> str:
        inner = ", ".join(
            f"[{format_rational(iv.lo)}, {format_rational(iv.hi)}]" for iv in self.intervals
        )
        return f"PieceSet({inner})"

    @property
    def length(self) -> mpq:
        return sum((iv.length for iv in self.intervals), ZERO)

    def contains_point(self, x) -> bool:
        return any(iv.lo <= x <= iv.hi for iv in self.intervals)

    def clip(self, lo, hi) -> "PieceSet":
        """Intersection with ``[lo, hi]``."""
        lo, hi = rational(lo), rational(hi)
        out = []
        for iv in self.intervals:
            a = iv.lo if iv.lo > lo else lo
            b = iv.hi if iv.hi < hi else hi
            if b > a:
                out.append(Interval(a, b))
        return PieceSet(out)

    def complement(self) -> "PieceSet":
        """``[0, 1]`` minus this piece set."""
        out = []
        cursor = ZERO
        for iv in self.intervals:
            if iv.lo > cursor:
                out.append(Interval(cursor, iv.lo))
            cursor = iv.hi
        if cursor < ONE:
            out.append(Interval(cursor, ONE))
        return PieceSet(out)

    def overlap_length(self, other: "PieceSet") -> mpq:
        """Length of the intersection; two-pointer sweep over both fragment lists."""
        total = ZERO
        i = j = 0
        a, b = self.intervals, other.intervals
        while i < len(a) and j < len(b):
            lo = max(a[i].lo, b[j].lo)
            hi = min(a[i].hi, b[j].hi)
            if hi > lo:
                total += hi - lo
            if a[i].hi < b[j].hi:
                i += 1
            else:
                j += 1
        return total

    def overlaps(self, other: "PieceSet") -> bool:
        """True when the intersection has positive length."""
        return self.overlap_length(other) > 0

    def issubset(self, other: "PieceSet") -> bool:
        return self.overlap_length(other) == self.length

    def to_json(self) -> list[list[str]]:
        return [iv.to_json() for iv in self.intervals]

    @classmethod
    def from_json(cls, data: Sequence[Sequence]) -> "PieceSet":
        return cls(Interval(lo, hi) for lo, hi in data)


def as_pieceset(piece: "PieceSet | Interval") -> PieceSet:
    if isinstance(piece, PieceSet):
        return piece
    return PieceSet((piece,))


class Valuation:
    """Piecewise-constant, normalized density on ``[0, 1]``.

    ``densities[i]`` applies on ``[breakpoints[i], breakpoints[i + 1]]``.
    """

    __slots__ = ("breakpoints", "densities", "_cum", "_key")

    def __init__(self, breakpoints: Sequence, densities: Sequence):
        bps = tuple(rational(b) for b in breakpoints)
        dens = tuple(rational(d) for d in densities)
        if len(bps) < 2 or bps[0] != ZERO or bps[-1] != ONE:
            raise ValueError("breakpoints must start at 0 and end at 1")
        if any(b >= c for b, c in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if len(dens) != len(bps) - 1:
            raise ValueError("need exactly one density per breakpoint gap")
        if any(d < 0 for d in dens):
            raise ValueError("densities must be nonnegative")
        cum = [ZERO]
        for i, d in enumerate(dens):
            cum.append(cum[-1] + d * (bps[i + 1] - bps[i]))
        if cum[-1] != ONE:
            raise ValueError(f"valuation not normalized: total mass {cum[-1]}")
        self.breakpoints = bps
        self.densities = dens
        self._cum = tuple(cum)
        self._key = (bps, dens)

    @classmethod
    def uniform(cls) -> "Valuation":
        return cls((ZERO, ONE), (ONE,))

    @classmethod
    def from_weights(cls, breakpoints: Sequence, weights: Sequence) -> "Valuation":
        """Build a valuation whose block masses are proportional to ``weights``."""
        bps = [rational(b) for b in breakpoints]
        ws = [rational(w) for w in weights]
        total = sum(ws, ZERO)
        if total <= 0:
            raise ValueError("weights must have positive sum")
        dens = [w / total / (bps[i + 1] - bps[i]) for i, w in enumerate(ws)]
        return cls(bps, dens)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Valuation):
            return NotImplemented
        return self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        return f"Valuation(pieces={len(self.densities)})"

    def cdf(self, x: mpq) -> mpq:
        """Mass of ``[0, x]``."""
        bps = self.breakpoints
        i = bisect_right(bps, x) - 1
        if i >= len(self.densities):
            return ONE
        return self._cum[i] + self.densities[i] * (x - bps[i])

    def mass(self, lo: mpq, hi: mpq) -> mpq:
        return self.cdf(hi) - self.cdf(lo)

    def inverse_cdf(self, target: mpq) -> mpq:
        """Smallest ``x`` with ``cdf(x) == target`` (``0 <= target <= 1``)."""
        j = bisect_left(self._cum, target)
        if j == 0:
            return ZERO
        i = j - 1
        return self.breakpoints[i] + (target - self._cum[i]) / self.densities[i]

    def measure(self, piece: "PieceSet | Interval") -> mpq:
        if isinstance(piece, Interval):
            return self.mass(piece.lo, piece.hi)
        total = ZERO
        for iv in piece.intervals:
            total += self.cdf(iv.hi) - self.cdf(iv.lo)
        return total

    def to_json(self) -> dict:
        return {
            "breakpoints": [format_rational(b) for b in self.breakpoints],
            "densities": [format_rational(d) for d in self.densities],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Valuation":
        return cls(data["breakpoints"], data["densities"])


def measure(valuation: Valuation, piece: "PieceSet | Interval") -> mpq:
    """Ground-truth value of ``piece``; never charged to a query ledger."""
    return valuation.measure(piece)


class Instance:
    """``n`` players with their valuations.

    Players holding equal valuations share a *class*; the oracle uses classes
    to answer a batch of identical queries with a single computation.
    """

    def __init__(self, valuations: Sequence[Valuation]):
        if not valuations:
            raise ValueError("an instance needs at least one player")
        classes: dict[Valuation, int] = {}
        distinct: list[Valuation] = []
        class_of = []
        for v in valuations:
            idx = classes.get(v)
            if idx is None:
                idx = classes[v] = len(distinct)
                distinct.append(v)
            class_of.append(idx)
        # one object per class keeps memory flat when millions of players share a density
        self.valuations: list[Valuation] = [distinct[c] for c in class_of]
        self.distinct: list[Valuation] = distinct
        self.class_of: list[int] = class_of

    @property
    def n(self) -> int:
        return len(self.valuations)

    @property
    def players(self) -> range:
        return range(self.n)

    def value(self, player: int, piece: "PieceSet | Interval") -> mpq:
        return self.valuations[player].measure(piece)

    def group(self, players: Iterable[int]) -> list[tuple[int, list[int]]]:
        """Partition ``players`` by valuation class; id lists come back sorted."""
        buckets: dict[int, list[int]] = {}
        class_of = self.class_of
        for p in players:
            buckets.setdefault(class_of[p], []).append(p)
        out = []
        for cls in sorted(buckets):
            ids = buckets[cls]
            ids.sort()
            out.append((cls, ids))
        return out

    def to_json(self) -> dict:
        return {"n": self.n, "players": [v.to_json() for v in self.valuations]}

    @classmethod
    def from_json(cls, data: dict) -> "Instance":
        players = data["players"]
        if "n" in data and int(data["n"]) != len(players):
            raise ValueError(f"n={data['n']} but {len(players)} players listed")
        cache: dict[str, Valuation] = {}
        valuations = []
        for entry in players:
            key = json.dumps(entry, sort_keys=True)
            if key not in cache:
                cache[key] = Valuation.from_json(entry)
            valuations.append(cache[key])
        return cls(valuations)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "Instance":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))
