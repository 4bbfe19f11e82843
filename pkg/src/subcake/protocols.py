"""Shared protocol building blocks: divide-and-conquer, Pcut, Victimize,
safety predicates and the approximate-fair-division strategy contract."""

from __future__ import annotations

import heapq
from bisect import bisect_right
from dataclasses import dataclass, field
from itertools import islice
from typing import Callable, Iterable, Mapping, Sequence

from gmpy2 import mpq

from .cake import ONE, ZERO, Instance, Interval, PieceSet, as_pieceset, format_rational, rational
from .oracle import NO_SUCH_POINT, Oracle


@dataclass
class Allocation:
    assignments: dict[int, PieceSet] = field(default_factory=dict)
    phase: str = ""

    def __getitem__(self, player: int) -> PieceSet:
        return self.assignments[player]

    def __len__(self) -> int:
        return len(self.assignments)

    @property
    def players(self) -> list[int]:
        return sorted(self.assignments)

    def pieces(self) -> Iterable[PieceSet]:
        return self.assignments.values()

    def pairwise_disjoint(self) -> bool:
        return pieces_disjoint(self.assignments.values())

    def within(self, piece: PieceSet | Interval) -> bool:
        piece = as_pieceset(piece)
        return all(p.issubset(piece) for p in self.assignments.values())

    def merged(self, other: "Allocation", phase: str = "") -> "Allocation":
        clash = set(self.assignments) & set(other.assignments)
        if clash:
            raise ValueError(f"players allocated twice: {sorted(clash)[:5]}")
        return Allocation({**self.assignments, **other.assignments}, phase or self.phase)

    def to_json(self, certificate: "FairnessCertificate | None" = None) -> dict:
        data = {
            "phase": self.phase,
            "assignments": {str(p): self.assignments[p].to_json() for p in self.players},
        }
        if certificate is not None:
            data["certificate"] = certificate.to_json()
        return data

    @classmethod
    def from_json(cls, data: Mapping) -> "Allocation":
        return cls(
            {int(p): PieceSet.from_json(iv) for p, iv in data["assignments"].items()},
            data.get("phase", ""),
        )


def pieces_disjoint(pieces: Iterable[PieceSet]) -> bool:
    """No two pieces share a positive-length overlap."""
    intervals = sorted(
        (iv for piece in pieces for iv in piece.intervals), key=lambda iv: (iv.lo, iv.hi)
    )
    return all(a.hi <= b.lo for a, b in zip(intervals, intervals[1:]))


@dataclass(frozen=True)
class CertificateRow:
    player: int
    value: mpq
    threshold: mpq

    @property
    def fair(self) -> bool:
        return self.value >= self.threshold


@dataclass
class FairnessCertificate:
    rows: list[CertificateRow]

    @property
    def all_fair(self) -> bool:
        return all(row.fair for row in self.rows)

    @property
    def violations(self) -> list[int]:
        return [row.player for row in self.rows if not row.fair]

    def summary(self) -> dict:
        worst = min((row.value / row.threshold for row in self.rows if row.threshold > 0), default=None)
        return {
            "players": len(self.rows),
            "fair": sum(row.fair for row in self.rows),
            "violations": len(self.violations),
            "min_value_over_threshold": None if worst is None else format_rational(worst),
        }

    def to_json(self) -> list[dict]:
        return [
            {
                "player": row.player,
                "value": format_rational(row.value),
                "threshold": format_rational(row.threshold),
                "fair": row.fair,
            }
            for row in self.rows
        ]


def certify(
    instance: Instance,
    allocation: Allocation,
    threshold: mpq | Mapping[int, mpq] | None = None,
) -> FairnessCertificate:
    """Check each allocated piece with ground-truth measures.

    ``threshold`` defaults to ``1/n``; a mapping gives per-player thresholds.
    """
    if threshold is None:
        threshold = mpq(1, instance.n)
    rows = []
    for p in allocation.players:
        bar = threshold[p] if isinstance(threshold, Mapping) else rational(threshold)
        rows.append(CertificateRow(p, instance.value(p, allocation[p]), bar))
    return FairnessCertificate(rows)


Group = tuple[int, list[int]]


def take_smallest(entries: list[tuple], count: int) -> tuple[list[Group], list[Group], object]:
    """Split grouped players into the ``count`` smallest by ``(key, id)`` and the rest.

    ``entries`` holds ``(key, class, sorted_ids)``.  Returns the taken groups, the
    remaining groups and the key of the last taken player (``None`` if none).
    """
    entries = sorted(entries, key=lambda e: (e[0], e[1]))
    taken: list[Group] = []
    rest: list[Group] = []
    need = count
    boundary = None
    i = 0
    while i < len(entries):
        key = entries[i][0]
        j = i
        while j < len(entries) and entries[j][0] == key:
            j += 1
        bucket = entries[i:j]
        size = sum(len(ids) for _, _, ids in bucket)
        if need == 0:
            rest.extend((cls, ids) for _, cls, ids in bucket)
        elif size <= need:
            taken.extend((cls, ids) for _, cls, ids in bucket)
            need -= size
            boundary = key
        else:
            if len(bucket) == 1:
                last_id = bucket[0][2][need - 1]
            else:
                last_id = next(islice(heapq.merge(*(ids for _, _, ids in bucket)), need - 1, None))
            for _, cls, ids in bucket:
                k = bisect_right(ids, last_id)
                if k:
                    taken.append((cls, ids[:k]))
                if k < len(ids):
                    rest.append((cls, ids[k:]))
            need = 0
            boundary = key
        i = j
    return taken, rest, boundary


def dc(oracle: Oracle, players: Iterable[int], piece: PieceSet | Interval) -> Allocation:
    """Even-Paz divide and conquer.

    Every player half-cuts the current piece at ``floor(k/2)/k`` of their own
    value for it; the ``floor(k/2)`` players with the leftmost cuts (ties by id)
    recurse on the part left of the last of those cuts, the others on the rest.
    Each player ends up with at least ``1/k`` of their value for ``piece``.
    """
    piece = as_pieceset(piece)
    groups = oracle.instance.group(players)
    out: dict[int, PieceSet] = {}
    if groups:
        _dc(oracle, groups, sum(len(ids) for _, ids in groups), piece, out)
    return Allocation(out, oracle.phase_label)


def _dc(oracle: Oracle, groups: list[Group], k: int, piece: PieceSet, out: dict) -> None:
    if k == 1:
        out[groups[0][1][0]] = piece
        return
    if not piece:
        for _, ids in groups:
            for p in ids:
                out[p] = piece
        return
    left = k // 2
    share = mpq(left, k)
    entries = []
    for cls, ids in groups:
        worth = oracle.eval_group(piece, ids)
        x = oracle.cut_group(piece, ids, worth * share)
        entries.append((x, cls, ids))
    taken, rest, split = take_smallest(entries, left)
    _dc(oracle, taken, left, piece.clip(ZERO, split), out)
    _dc(oracle, rest, k - left, piece.clip(split, ONE), out)


@dataclass
class PcutResult:
    selected: list[int]
    points: dict[int, object]
    shortfall: bool


def pcut(oracle: Oracle, players: Iterable[int], piece, alpha, m: int) -> PcutResult:
    """One cut query per listed player; keep the ``m`` with the leftmost cut points.

    Repeated ids re-issue their query (and are charged again) but are selected
    at most once.  Players without a cut point never beat a finite one.
    """
    alpha = rational(alpha)
    points: dict[int, object] = {}
    for p in players:
        points[p] = oracle.cut(piece, p, alpha)
    finite = sorted((x, p) for p, x in points.items() if x is not NO_SUCH_POINT)
    selected = [p for _, p in finite[:m]]
    return PcutResult(selected, points, len(selected) < m)


@dataclass
class VictimizeResult:
    survivors: list[int]
    victims: list[int]


def victimize(oracle: Oracle, players: Iterable[int], piece, m: int) -> VictimizeResult:
    """Evaluate ``piece`` for every player and drop the ``m`` lowest (ties by id)."""
    groups = oracle.instance.group(players)
    size = sum(len(ids) for _, ids in groups)
    if not 0 <= m <= size:
        raise ValueError(f"cannot victimize {m} of {size} players")
    entries = [(oracle.eval_group(piece, ids), cls, ids) for cls, ids in groups]
    taken, rest, _ = take_smallest(entries, m)
    victims = sorted(p for _, ids in taken for p in ids)
    survivors = sorted(p for _, ids in rest for p in ids)
    return VictimizeResult(survivors, victims)


def is_safe(instance: Instance, player: int, group: Sequence[int] | int, piece) -> bool:
    """``player`` values ``piece`` at least ``|group| / n``."""
    size = group if isinstance(group, int) else len(group)
    return instance.value(player, piece) >= mpq(size, instance.n)


def all_safe(instance: Instance, group: Sequence[int], piece) -> bool:
    bar = mpq(len(group), instance.n)
    return all(instance.value(p, piece) >= bar for p in group)


def m_safe(instance: Instance, group: Sequence[int], piece, m: int) -> bool:
    """Can removing at most ``m`` players make ``group`` safe for ``piece``?"""
    values = sorted((instance.value(p, piece), p) for p in group)
    size = len(values)
    drops = 0
    while drops < size and values[drops][0] < mpq(size - drops, instance.n):
        if drops == m:
            return False
        drops += 1
    return True


def failure_bound(c) -> mpq:
    """Failure-probability bound of the linear-time ``c``-fair algorithm (``c > 32``)."""
    c = rational(c)
    if c <= 32:
        raise ValueError("the bound is only defined for c > 32")
    return mpq(2**13) / (c * c * (c - 32)) + mpq(1024) / c**3 + mpq(128) / c**2


@dataclass(frozen=True)
class ApproxFairContract:
    c: mpq

    def __post_init__(self):
        object.__setattr__(self, "c", rational(self.c))
        if self.c < 1:
            raise ValueError("c must be at least 1")

    @property
    def failure_bound(self) -> mpq:
        return failure_bound(self.c)

    def share(self, worth: mpq, players: int) -> mpq:
        """Value every player is promised on success."""
        return worth / (self.c * players)


Strategy = Callable[..., "Allocation | None"]


def dc_adapter(oracle: Oracle, players, piece, c, rng=None) -> Allocation:
    """Exact proportional division; never fails and is c-fair for every c >= 1."""
    return dc(oracle, players, piece)


STRATEGIES: dict[str, Strategy] = {"dc": dc_adapter}
DEFAULT_STRATEGY = "dc"


def register_strategy(name: str, strategy: Strategy) -> None:
    STRATEGIES[name] = strategy


def approx_fair(
    oracle: Oracle, players, piece, c, strategy: str = DEFAULT_STRATEGY, rng=None
) -> Allocation | None:
    """Run a registered c-fair division strategy; ``None`` signals failure."""
    try:
        impl = STRATEGIES[strategy]
    except KeyError:
        raise ValueError(f"unknown approx-fair strategy {strategy!r}") from None
    ApproxFairContract(c)
    return impl(oracle, list(players), as_pieceset(piece), rational(c), rng)


def preassign_basic(oracle: Oracle, designated: Sequence[int], t, strategy: str = DEFAULT_STRATEGY, rng=None):
    """Give each of ``r <= n/t`` designated players a ``t``-fair share of the whole cake.

    Returns ``(allocation or None, certificate or None)``; fairness is checked
    against ``1/n``.
    """
    t = rational(t)
    r = len(designated)
    if r * t > oracle.n:
        raise ValueError("need r <= n / t")
    allocation = approx_fair(oracle, designated, PieceSet.whole(), t, strategy, rng)
    if allocation is None:
        return None, None
    return allocation, certify(oracle.instance, allocation)
