"""Preassignment for designated players: deposit, condense, relation-graph
grouping, then completion on what is left of the cake."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import gmpy2
from gmpy2 import mpq

from .cake import Instance, Interval, PieceSet, rational
from .oracle import NO_SUCH_POINT, Oracle
from .protocols import Allocation, FairnessCertificate, certify, dc
from .report import TrialReport
from .undesignated import ParameterError, completion, floor_q, survivors_safe

EARLY_EXIT = "EarlyExit"
LOOP_EXHAUSTED = "LoopExhausted"

with gmpy2.context(gmpy2.get_context(), precision=256):
    _INV_E = gmpy2.exp(-1)


def at_most_inverse_e(eps: mpq) -> bool:
    with gmpy2.context(gmpy2.get_context(), precision=256):
        return gmpy2.mpfr(eps) <= _INV_E


@dataclass(frozen=True)
class DesignatedParams:
    designated: tuple[int, ...]
    eps: mpq
    t: mpq
    scale: mpq = mpq(1)

    def __post_init__(self):
        object.__setattr__(self, "designated", tuple(int(p) for p in self.designated))
        object.__setattr__(self, "eps", rational(self.eps))
        object.__setattr__(self, "t", rational(self.t))
        object.__setattr__(self, "scale", rational(self.scale))

    @property
    def r(self) -> int:
        return len(self.designated)

    @property
    def eps_prime(self) -> mpq:
        return self.eps / self.r

    @property
    def _log_inv(self) -> float:
        return math.log(1 / float(self.eps_prime))

    @property
    def samples(self) -> int:
        """Players sampled per deposit round."""
        return math.ceil(float(self.scale) * 2**10 * float(self.t / self.eps_prime) * self._log_inv)

    @property
    def rounds(self) -> int:
        """Upper bound on deposit rounds."""
        return math.ceil(float(self.scale) * 54 * self._log_inv**2)

    @property
    def threshold(self) -> float:
        """Deposit stops once fewer sampled players than this still value the piece."""
        return float(self.scale) * 2**9 * float(self.t) * self._log_inv

    def validate(self, n: int) -> None:
        if self.r < 1:
            raise ParameterError("at least one designated player is required")
        if len(set(self.designated)) != self.r:
            raise ParameterError("designated players must be distinct")
        if any(not 0 <= p < n for p in self.designated):
            raise ParameterError("designated player id out of range")
        if not (0 < self.eps and at_most_inverse_e(self.eps)):
            raise ParameterError("eps must lie in (0, 1/e]")
        if self.t < 1:
            raise ParameterError("t must be at least 1")
        if not 0 < self.scale <= 1:
            raise ParameterError("scale must lie in (0, 1]")

    def to_json(self) -> dict:
        return {
            "designated": list(self.designated),
            "eps": self.eps,
            "t": self.t,
            "scale": self.scale,
            "eps_prime": self.eps_prime,
            "samples": self.samples,
            "rounds": self.rounds,
            "threshold": self.threshold,
        }


def theorem2_floor(r: int, eps, t):
    """Success probability floor ``1 - (eps/r)^t``; exact for integer ``t``."""
    ratio = rational(eps) / r
    t = rational(t)
    if t.denominator == 1:
        return 1 - ratio ** int(t)
    return 1 - float(ratio) ** float(t)


def fairness_regime(n: int, r: int, eps) -> bool:
    """``(7 ln(r/eps))^2 <= ln n``: deposits then guarantee a fair share."""
    return (7 * math.log(r / float(rational(eps)))) ** 2 <= math.log(n)


def max_designated(n: int, eps) -> float:
    """Largest ``r`` inside the fairness regime, ``eps * exp(sqrt(ln n) / 7)``."""
    return float(rational(eps)) * math.exp(math.sqrt(math.log(n)) / 7)


@dataclass
class CondenseResult:
    piece: Interval
    median_player: int
    median_point: mpq
    points: list[mpq]
    left_value: mpq
    right_value: mpq


def condense(oracle: Oracle, player: int, sample: Sequence[int], piece: Interval) -> CondenseResult:
    """Halve ``piece`` at the lower median of the sample's half-cuts; ``player`` keeps the better side.

    ``sample`` is a multiset: repeated players are queried (and charged) once
    per occurrence.  Ties between the halves go right.
    """
    if not sample:
        raise ValueError("condense needs a nonempty sample")
    lo, hi = piece.lo, piece.hi
    marks = []
    for position, q in enumerate(sample):
        worth = oracle.eval(piece, q)
        x = oracle.cut(piece, q, worth / 2)
        assert x is not NO_SUCH_POINT
        marks.append((x, q, position))
    marks.sort()
    x0, q0, _ = marks[(len(marks) - 1) // 2]
    left_value = oracle.eval(Interval(lo, x0), player)
    right_value = oracle.eval(Interval(x0, hi), player)
    if left_value > right_value:
        kept = Interval(lo, x0)
    else:
        kept = Interval(x0, hi)
    return CondenseResult(kept, q0, x0, [m[0] for m in marks], left_value, right_value)


@dataclass
class DepositResult:
    player: int
    piece: Interval
    exit: str
    condense_calls: int
    history: list[Interval] = field(default_factory=list)


def deposit(oracle: Oracle, player: int, params: DesignatedParams, rng) -> DepositResult:
    """Shrink the cake around ``player`` until few sampled players still value it."""
    n = oracle.n
    current = Interval(0, 1)
    history = [current]
    calls = 0
    for _ in range(params.rounds):
        drawn = [int(q) for q in rng.integers(0, n, size=params.samples)]
        approving = [q for q in drawn if oracle.eval(current, q) >= params.eps_prime]
        if len(approving) < params.threshold:
            return DepositResult(player, current, EARLY_EXIT, calls, history)
        current = condense(oracle, player, approving, current).piece
        calls += 1
        history.append(current)
    return DepositResult(player, current, LOOP_EXHAUSTED, calls, history)


def approvers(instance: Instance, alpha, piece) -> set[int]:
    """Players valuing ``piece`` at least ``alpha`` (ground truth, not charged)."""
    alpha = rational(alpha)
    good = {c for c, v in enumerate(instance.distinct) if v.measure(piece) >= alpha}
    cls = instance.class_of
    return {p for p in range(instance.n) if cls[p] in good}


class DisjointSet:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


@dataclass
class RelationGraph:
    vertices: list[int]
    edges: list[tuple[int, int]]
    components: list[list[int]]


def relation_components(pieces: Mapping[int, PieceSet | Interval]) -> RelationGraph:
    """Overlap graph on the pieces; touching endpoints do not count as overlap."""
    keys = sorted(pieces)
    sets = {k: PieceSet((pieces[k],)) if isinstance(pieces[k], Interval) else pieces[k] for k in keys}
    edges = []
    dsu = DisjointSet(keys)
    for i, a in enumerate(keys):
        for b in keys[i + 1 :]:
            if sets[a].overlaps(sets[b]):
                edges.append((a, b))
                dsu.union(a, b)
    groups: dict[int, list[int]] = {}
    for k in keys:
        groups.setdefault(dsu.find(k), []).append(k)
    return RelationGraph(keys, edges, sorted(groups.values()))


@dataclass
class PreassignSOutcome:
    deposits: dict[int, DepositResult]
    graph: RelationGraph
    allocation: Allocation
    component_size: dict[int, int]

    @property
    def covered(self) -> PieceSet:
        return PieceSet.union(self.allocation.pieces())


def preassign_s(oracle: Oracle, params: DesignatedParams, rng) -> PreassignSOutcome:
    params.validate(oracle.n)
    streams = rng.spawn(params.r)
    deposits = {
        p: deposit(oracle, p, params, stream) for p, stream in zip(params.designated, streams)
    }
    graph = relation_components({p: d.piece for p, d in deposits.items()})
    assignments: dict[int, PieceSet] = {}
    sizes: dict[int, int] = {}
    for members in graph.components:
        union = PieceSet.union(deposits[p].piece for p in members)
        for p in members:
            sizes[p] = len(members)
        if len(members) == 1:
            assignments[members[0]] = union
        else:
            assignments.update(dc(oracle, members, union).assignments)
    return PreassignSOutcome(deposits, graph, Allocation(assignments, oracle.phase_label), sizes)


@dataclass
class DesignatedOutcome:
    n: int
    params: DesignatedParams
    preassign: PreassignSOutcome
    remainder: PieceSet
    victims: list[int]
    survivors: list[int]
    completion_allocation: Allocation
    ledger: dict
    designated_certificate: FairnessCertificate
    halving_certificate: FairnessCertificate
    survivor_certificate: FairnessCertificate
    checks: dict = field(default_factory=dict)

    @property
    def success(self) -> bool:
        return (
            self.designated_certificate.all_fair
            and self.survivor_certificate.all_fair
            and len(self.victims) == floor_q(self.params.eps * self.n)
        )

    def allocation(self) -> Allocation:
        return self.preassign.allocation.merged(self.completion_allocation, "theorem2")


def run_theorem2(instance: Instance, params: DesignatedParams, rng) -> tuple[DesignatedOutcome, TrialReport]:
    """Deposit for every designated player, group overlapping deposits, then complete.

    Records ground-truth politeness of each deposit and of the covered cake,
    and certifies designated players both at ``1/n`` and at the halving bound
    ``(1/2)^calls / component_size``.
    """
    started = time.perf_counter()
    n = instance.n
    params.validate(n)
    oracle = Oracle(instance)
    with oracle.phase("preassign"):
        pre = preassign_s(oracle, params, rng)
    remainder = pre.covered.complement()
    designated = set(params.designated)
    with oracle.phase("completion"):
        done = completion(oracle, (p for p in range(n) if p not in designated), remainder, params.eps)

    halving = {
        p: mpq(1, 2) ** pre.deposits[p].condense_calls / pre.component_size[p] for p in params.designated
    }
    outcome = DesignatedOutcome(
        n=n,
        params=params,
        preassign=pre,
        remainder=remainder,
        victims=done.victims,
        survivors=done.survivors,
        completion_allocation=done.allocation,
        ledger=oracle.ledger.to_dict(),
        designated_certificate=certify(instance, pre.allocation),
        halving_certificate=certify(instance, pre.allocation, halving),
        survivor_certificate=certify(instance, done.allocation),
    )

    eps_prime = params.eps_prime
    polite = {
        p: len(approvers(instance, eps_prime, d.piece)) <= eps_prime * n for p, d in pre.deposits.items()
    }
    outcome.checks = {
        "designated_disjoint": pre.allocation.pairwise_disjoint(),
        "polite": all(polite.values()),
        "polite_count": sum(polite.values()),
        "covered_approvers": len(approvers(instance, params.eps, pre.covered)),
        "victim_quota": floor_q(params.eps * n),
        "survivors_safe": survivors_safe(instance, done.survivors, remainder),
        "remainder_fragments": len(remainder),
        "components": len(pre.graph.components),
        "regime": fairness_regime(n, params.r, params.eps),
    }
    report = TrialReport(
        scenario="theorem2",
        n=n,
        params=params.to_json(),
        status="Success" if outcome.success else "Unfair",
        success=outcome.success,
        ledger=outcome.ledger,
        certificates={
            "designated": outcome.designated_certificate.summary(),
            "designated_halving": outcome.halving_certificate.summary(),
            "survivors": outcome.survivor_certificate.summary(),
        },
        victims=len(done.victims),
        flags={
            "scale": params.scale,
            "loop_exhausted": sorted(p for p, d in pre.deposits.items() if d.exit == LOOP_EXHAUSTED),
            "condense_calls": {p: d.condense_calls for p, d in sorted(pre.deposits.items())},
            "degenerate_completion": done.degenerate,
        },
        checks=outcome.checks,
        wall_time=time.perf_counter() - started,
    )
    return outcome, report
