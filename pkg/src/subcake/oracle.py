"""Robertson-Webb query oracle with per-phase query accounting.

A query against a piece made of ``k`` contiguous fragments is simulated by
``k`` queries on the fragments, so it is charged ``k`` to the ledger.  The
fragments are read left to right as one virtual contiguous cake.
"""

from __future__ import annotations

from contextlib import contextmanager
from typing import Iterator, Sequence

from gmpy2 import mpq

from .cake import ZERO, Instance, Interval, PieceSet, Valuation, as_pieceset, rational

CUT = "cut"
EVAL = "eval"


class _Marker:
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name

    def __repr__(self) -> str:
        return self.name

    def __reduce__(self):
        return self.name


NO_SUCH_POINT = _Marker("NO_SUCH_POINT")
"""Returned by a cut query when the piece is worth less than the target."""

END = _Marker("END")
"""Evaluate the whole piece (``Eval(D, p)``)."""


class QueryViolation(ValueError):
    """A query was issued outside its precondition."""


class QueryLedger:
    """Monotone cut/eval counters keyed by phase label."""

    def __init__(self):
        self.counters: dict[str, dict[str, int]] = {}

    def charge(self, phase: str, kind: str, amount: int = 1) -> None:
        if amount < 0:
            raise ValueError("ledger counters never decrease")
        row = self.counters.setdefault(phase, {CUT: 0, EVAL: 0})
        row[kind] += amount

    def count(self, phase: str | None = None, kind: str | None = None) -> int:
        rows = self.counters.values() if phase is None else [self.counters.get(phase, {})]
        kinds = (CUT, EVAL) if kind is None else (kind,)
        return sum(row.get(k, 0) for row in rows for k in kinds)

    @property
    def total(self) -> int:
        return self.count()

    def to_dict(self) -> dict[str, dict[str, int]]:
        return {phase: dict(row) for phase, row in sorted(self.counters.items())}


def _fragments(piece: PieceSet | Interval) -> tuple[Interval, ...]:
    if isinstance(piece, Interval):
        return (piece,)
    return piece.intervals


def answer_cut(valuation: Valuation, piece: PieceSet | Interval, alpha: mpq):
    """Smallest point at which the left-to-right prefix of ``piece`` is worth ``alpha``."""
    frags = _fragments(piece)
    if not frags:
        return NO_SUCH_POINT
    remaining = alpha
    for iv in frags:
        start = valuation.cdf(iv.lo)
        worth = valuation.cdf(iv.hi) - start
        if remaining <= worth:
            if remaining == 0:
                return iv.lo
            return valuation.inverse_cdf(start + remaining)
        remaining -= worth
    return NO_SUCH_POINT


def answer_eval(valuation: Valuation, piece: PieceSet | Interval, x=END) -> mpq:
    """Value of the prefix of ``piece`` ending at ``x``."""
    frags = _fragments(piece)
    if x is END:
        total = ZERO
        for iv in frags:
            total += valuation.cdf(iv.hi) - valuation.cdf(iv.lo)
        return total
    total = ZERO
    for iv in frags:
        if x < iv.lo:
            break
        if x <= iv.hi:
            return total + valuation.cdf(x) - valuation.cdf(iv.lo)
        total += valuation.cdf(iv.hi) - valuation.cdf(iv.lo)
    raise QueryViolation(f"eval point {x} lies outside the queried piece")


class Oracle:
    """Answers cut/eval queries for an instance and charges them to a ledger."""

    def __init__(self, instance: Instance, ledger: QueryLedger | None = None, phase: str = "main"):
        self.instance = instance
        self.ledger = ledger if ledger is not None else QueryLedger()
        self.phase_label = phase

    @property
    def n(self) -> int:
        return self.instance.n

    @contextmanager
    def phase(self, label: str) -> Iterator[None]:
        previous = self.phase_label
        self.phase_label = label
        try:
            yield
        finally:
            self.phase_label = previous

    def _charge(self, kind: str, piece, times: int = 1) -> None:
        self.ledger.charge(self.phase_label, kind, max(len(_fragments(piece)), 1) * times)

    def cut(self, piece: PieceSet | Interval, player: int, alpha):
        alpha = rational(alpha)
        if alpha < 0:
            raise QueryViolation("cut target must be nonnegative")
        self._charge(CUT, piece)
        return answer_cut(self.instance.valuations[player], piece, alpha)

    def eval(self, piece: PieceSet | Interval, player: int, x=END) -> mpq:
        self._charge(EVAL, piece)
        return answer_eval(self.instance.valuations[player], piece, x)

    # Batched forms: every listed player is charged, but players sharing a
    # valuation get the same answer so it is computed once.

    def _shared_valuation(self, players: Sequence[int]) -> Valuation:
        cls = self.instance.class_of
        first = cls[players[0]]
        if any(cls[p] != first for p in players):
            raise ValueError("batched query players must share a valuation")
        return self.instance.distinct[first]

    def cut_group(self, piece: PieceSet | Interval, players: Sequence[int], alpha):
        alpha = rational(alpha)
        if alpha < 0:
            raise QueryViolation("cut target must be nonnegative")
        valuation = self._shared_valuation(players)
        self._charge(CUT, piece, len(players))
        return answer_cut(valuation, piece, alpha)

    def eval_group(self, piece: PieceSet | Interval, players: Sequence[int], x=END) -> mpq:
        valuation = self._shared_valuation(players)
        self._charge(EVAL, piece, len(players))
        return answer_eval(valuation, piece, x)


def fragmented_query(oracle: Oracle, piece: PieceSet, player: int, kind: str, arg=END):
    """Run one cut (``arg`` = target value) or eval (``arg`` = point or END) on ``piece``."""
    piece = as_pieceset(piece)
    if kind == CUT:
        return oracle.cut(piece, player, arg)
    if kind == EVAL:
        return oracle.eval(piece, player, arg)
    raise ValueError(f"unknown query kind {kind!r}")
