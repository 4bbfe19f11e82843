"""Sublinear preassignment for undesignated players, followed by completion.

The preassigning part samples ``ceil(t*r/eps)`` players, keeps the ``r`` whose
``128r/n``-cuts of the whole cake are leftmost, and divides ``[0, x]`` among
them (``x`` the largest of those cuts).  Completion drops the ``floor(eps*n)``
players who value ``[x, 1]`` least and divides ``[x, 1]`` among the rest.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from gmpy2 import mpq

from .cake import ONE, ZERO, Instance, Interval, PieceSet, rational
from .oracle import Oracle
from .protocols import (
    DEFAULT_STRATEGY,
    Allocation,
    FairnessCertificate,
    take_smallest,
    approx_fair,
    certify,
    dc,
    pcut,
    victimize,
)
from .report import TrialReport

APPROX_C = 128

SUCCESS = "Success"
FAILED_SAMPLING = "FailedSampling"
FAILED_APPROX_FAIR = "FailedApproxFair"


def ceil_q(x: mpq) -> int:
    return int(-((-x.numerator) // x.denominator))


def floor_q(x: mpq) -> int:
    return int(x.numerator // x.denominator)


class ParameterError(ValueError):
    """Protocol parameters outside the range the guarantees need."""


@dataclass(frozen=True)
class UndesignatedParams:
    r: int
    eps: mpq
    t: mpq
    charge_duplicates: bool = False
    strategy: str = DEFAULT_STRATEGY

    def __post_init__(self):
        object.__setattr__(self, "eps", rational(self.eps))
        object.__setattr__(self, "t", rational(self.t))

    @property
    def draws(self) -> int:
        return ceil_q(self.t * self.r / self.eps)

    @property
    def retries(self) -> int:
        return ceil_q(self.t / self.eps)

    def alpha_star(self, n: int) -> mpq:
        return mpq(APPROX_C * self.r, n)

    def victims(self, n: int) -> int:
        return floor_q(self.eps * n)

    def validate(self, n: int) -> None:
        if self.r < 1:
            raise ParameterError("r must be a positive integer")
        if not 0 < self.eps <= 1:
            raise ParameterError("eps must lie in (0, 1]")
        if self.t <= mpq(3, 2):
            raise ParameterError("t must exceed 3/2")
        if 127 * self.r > self.eps * n:
            raise ParameterError(f"need r <= eps*n/127 (r={self.r}, eps*n={self.eps * n})")
        if APPROX_C * self.r > n:
            raise ParameterError(
                f"cut target 128r/n = {self.alpha_star(n)} exceeds 1; every cut would fail"
            )

    def to_json(self) -> dict:
        return {
            "r": self.r,
            "eps": self.eps,
            "t": self.t,
            "charge_duplicates": self.charge_duplicates,
            "strategy": self.strategy,
        }


def theorem1_floor(r: int, eps, t, approx_failure: bool = True):
    """Guaranteed success probability ``1 - 8/((2t-3)^2 r) - (1/64)^(t/eps)``.

    With ``approx_failure=False`` the last term is dropped (a never-failing
    division strategy).  Exact when ``t/eps`` is an integer, float otherwise.
    """
    eps = rational(eps)
    t = rational(t)
    floor = 1 - mpq(8) / ((2 * t - 3) ** 2 * r)
    if not approx_failure:
        return floor
    exponent = t / eps
    if exponent.denominator == 1:
        return floor - mpq(1, 64) ** int(exponent)
    return float(floor) - (1 / 64) ** float(exponent)


@dataclass
class PreassignOutcome:
    status: str
    sampled: list[int] = field(default_factory=list)
    distinct: list[int] = field(default_factory=list)
    selected: list[int] = field(default_factory=list)
    cut_point: mpq | None = None
    allocation: Allocation | None = None
    attempts: int = 0

    @property
    def piece(self) -> PieceSet:
        return PieceSet((Interval(ZERO, self.cut_point),))

    @property
    def remainder(self) -> PieceSet:
        return PieceSet((Interval(self.cut_point, ONE),))


def _draw(rng, n: int, size: int) -> list[int]:
    return [int(p) for p in rng.integers(0, n, size=size)]


def preassign_u(oracle: Oracle, params: UndesignatedParams, rng) -> PreassignOutcome:
    n = oracle.n
    params.validate(n)
    sampled = _draw(rng, n, params.draws)
    distinct = sorted(set(sampled))
    if len(distinct) < params.r:
        return PreassignOutcome(FAILED_SAMPLING, sampled, distinct)
    asked = sampled if params.charge_duplicates else distinct
    found = pcut(oracle, asked, PieceSet.whole(), params.alpha_star(n), params.r)
    if found.shortfall:
        return PreassignOutcome(FAILED_SAMPLING, sampled, distinct, found.selected)
    x = max(found.points[p] for p in found.selected)
    outcome = PreassignOutcome(FAILED_APPROX_FAIR, sampled, distinct, found.selected, x)
    piece = outcome.piece
    for attempt in range(1, params.retries + 1):
        outcome.attempts = attempt
        allocation = approx_fair(oracle, found.selected, piece, APPROX_C, params.strategy, rng)
        if allocation is not None:
            outcome.allocation = allocation
            outcome.status = SUCCESS
            break
    return outcome


@dataclass
class CompletionOutcome:
    victims: list[int]
    survivors: list[int]
    allocation: Allocation
    degenerate: bool = False


def completion(oracle: Oracle, pool, remainder: PieceSet, eps) -> CompletionOutcome:
    """Victimize the ``floor(eps*n)`` lowest evaluators of ``remainder``, divide it among the rest."""
    pool = list(pool)
    m = floor_q(rational(eps) * oracle.n)
    degenerate = m > len(pool)
    if degenerate:
        m = len(pool)
    result = victimize(oracle, pool, remainder, m)
    allocation = dc(oracle, result.survivors, remainder)
    return CompletionOutcome(result.victims, result.survivors, allocation, degenerate)


def _class_values(instance: Instance, piece) -> list[mpq]:
    return [v.measure(piece) for v in instance.distinct]


def survivors_safe(instance: Instance, survivors, piece) -> bool:
    """Ground-truth safety of the survivor set for ``piece``."""
    values = _class_values(instance, piece)
    bar = mpq(len(survivors), instance.n)
    cls = instance.class_of
    return all(values[cls[p]] >= bar for p in survivors)


def reference_cut_set(instance: Instance, alpha, m: int) -> set[int]:
    """Players with the ``m`` leftmost ``alpha``-cuts of the whole cake (ground truth).

    This is the analytical set the sampling argument is about; the protocol
    itself never computes it.
    """
    alpha = rational(alpha)
    entries = []
    for cls, ids in instance.group(range(instance.n)):
        v = instance.distinct[cls]
        x = v.inverse_cdf(alpha) if alpha <= 1 else None
        if x is not None:
            entries.append((x, cls, ids))
    taken, _, _ = take_smallest(entries, min(m, sum(len(e[2]) for e in entries)))
    return {p for _, ids in taken for p in ids}


@dataclass
class UndesignatedOutcome:
    n: int
    params: UndesignatedParams
    preassign: PreassignOutcome
    completion: CompletionOutcome | None
    ledger: dict
    preassigned_certificate: FairnessCertificate | None = None
    survivor_certificate: FairnessCertificate | None = None
    checks: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        return self.preassign.status

    @property
    def victims(self) -> list[int]:
        return self.completion.victims if self.completion else []

    def allocation(self) -> Allocation:
        if self.completion is None:
            return Allocation({}, "theorem1")
        return self.preassign.allocation.merged(self.completion.allocation, "theorem1")

    @property
    def success(self) -> bool:
        if self.status != SUCCESS or self.completion is None:
            return False
        return (
            self.preassigned_certificate is not None
            and self.preassigned_certificate.all_fair
            and self.survivor_certificate is not None
            and self.survivor_certificate.all_fair
            and not self.completion.degenerate
            and len(self.victims) == self.params.victims(self.n)
        )


def run_theorem1(
    instance: Instance,
    params: UndesignatedParams,
    rng,
    analyze: bool = True,
) -> tuple[UndesignatedOutcome, TrialReport]:
    """Preassign then complete; certify every allocation with ground-truth measures.

    With ``analyze`` the report also records the premises of the correctness
    argument (sampling hit count, survivor safety), computed outside the ledger.
    """
    started = time.perf_counter()
    n = instance.n
    params.validate(n)
    oracle = Oracle(instance)
    with oracle.phase("preassign"):
        pre = preassign_u(oracle, params, rng)
    outcome = UndesignatedOutcome(n, params, pre, None, {})
    if pre.status == SUCCESS:
        chosen = set(pre.selected)
        pool = (p for p in range(n) if p not in chosen)
        with oracle.phase("completion"):
            outcome.completion = completion(oracle, pool, pre.remainder, params.eps)
        outcome.preassigned_certificate = certify(instance, pre.allocation)
        outcome.survivor_certificate = certify(instance, outcome.completion.allocation)
        if analyze:
            target = reference_cut_set(instance, params.alpha_star(n), params.victims(n))
            hits = len(target.intersection(pre.distinct))
            outcome.checks["sampling_hits"] = hits
            outcome.checks["sampling_premise"] = hits >= params.r
            outcome.checks["survivors_safe"] = survivors_safe(
                instance, outcome.completion.survivors, pre.remainder
            )
            outcome.checks["disjoint"] = outcome.allocation().pairwise_disjoint()
    outcome.ledger = oracle.ledger.to_dict()

    certificates = {}
    if outcome.preassigned_certificate is not None:
        certificates["preassigned"] = outcome.preassigned_certificate.summary()
        certificates["survivors"] = outcome.survivor_certificate.summary()
    report = TrialReport(
        scenario="theorem1",
        n=n,
        params={**params.to_json(), "draws": params.draws, "retries": params.retries},
        status=pre.status,
        success=outcome.success,
        ledger=outcome.ledger,
        certificates=certificates,
        victims=len(outcome.victims),
        flags={
            "charge_duplicates": params.charge_duplicates,
            "strategy": params.strategy,
            "approx_fair_attempts": pre.attempts,
            "degenerate_completion": bool(outcome.completion and outcome.completion.degenerate),
        },
        checks=dict(outcome.checks),
        wall_time=time.perf_counter() - started,
    )
    return outcome, report
