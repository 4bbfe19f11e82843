"""Seeded trial batches for each scenario kind.

Trial ``i`` of a batch with master seed ``s`` draws all of its randomness from
``SeedSequence([s, i])``, so batches can be split or reordered without
changing any individual trial.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from statistics import fmean
from typing import Callable, Mapping

import numpy as np

from ..cake import Instance, PieceSet, Valuation
from ..designated import DesignatedParams, run_theorem2, theorem2_floor
from ..oracle import Oracle
from ..protocols import certify, dc
from ..report import TrialReport
from ..undesignated import UndesignatedParams, run_theorem1, theorem1_floor
from .generators import GeneratorSpec, generate, spike_valuation
from .lemmas import SamplingLemmaParams, binomial_sigma, check_lemma1, passes_floor


def child_sequence(master_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([master_seed, index])


def child_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(child_sequence(master_seed, index))


def child_seed(master_seed: int, index: int) -> int:
    return int(child_sequence(master_seed, index).generate_state(1, np.uint32)[0])


InstanceSource = Callable[[int], Instance]


def instance_source(
    spec: GeneratorSpec | Mapping | Instance,
    vary: bool = False,
    overrides: Mapping[int, Valuation] | None = None,
) -> InstanceSource:
    """Map a trial seed to an instance; a fixed instance is built once and reused."""
    if isinstance(spec, Instance):
        fixed = _override(spec, overrides)
        return lambda seed: fixed
    if not isinstance(spec, GeneratorSpec):
        spec = GeneratorSpec.from_dict(spec)
    if not vary:
        fixed = _override(generate(spec), overrides)
        return lambda seed: fixed
    return lambda seed: _override(generate(spec.with_seed(seed)), overrides)


def _override(instance: Instance, overrides: Mapping[int, Valuation] | None) -> Instance:
    if not overrides:
        return instance
    valuations = list(instance.valuations)
    for p, v in overrides.items():
        valuations[p] = v
    return Instance(valuations)


def spike_overrides(designated, regions) -> dict[int, Valuation]:
    """Give designated player ``i`` all of its mass on ``regions[i]``."""
    return {int(p): spike_valuation(lo, hi) for p, (lo, hi) in zip(designated, regions)}


def _stamp(report: TrialReport, index: int, seed: int, timing: bool) -> TrialReport:
    report.trial = index
    report.seed = seed
    if not timing:
        report.wall_time = None
    return report


def theorem1_trials(
    source: InstanceSource, params: UndesignatedParams, trials: int, master_seed: int, timing: bool = False
) -> list[TrialReport]:
    reports = []
    for i in range(trials):
        seed = child_seed(master_seed, i)
        _, report = run_theorem1(source(seed), params, child_rng(master_seed, i))
        reports.append(_stamp(report, i, seed, timing))
    return reports


def theorem2_trials(
    source: InstanceSource, params: DesignatedParams, trials: int, master_seed: int, timing: bool = False
) -> list[TrialReport]:
    reports = []
    for i in range(trials):
        seed = child_seed(master_seed, i)
        _, report = run_theorem2(source(seed), params, child_rng(master_seed, i))
        reports.append(_stamp(report, i, seed, timing))
    return reports


def dc_bound(players: int, fragments: int = 1) -> int:
    """``2 k ceil(log2 k)`` queries, times the fragment count."""
    return 2 * players * math.ceil(math.log2(players)) * fragments if players > 1 else 0


def run_dc_trial(instance: Instance, piece: PieceSet | None = None) -> TrialReport:
    started = time.perf_counter()
    piece = piece if piece is not None else PieceSet.whole()
    oracle = Oracle(instance, phase="dc")
    allocation = dc(oracle, range(instance.n), piece)
    shares = {p: instance.value(p, piece) / instance.n for p in range(instance.n)}
    certificate = certify(instance, allocation, shares)
    queries = oracle.ledger.total
    bound = dc_bound(instance.n, max(len(piece), 1))
    proportional = certificate.all_fair
    return TrialReport(
        scenario="dc",
        n=instance.n,
        params={"fragments": len(piece)},
        status="Success" if proportional else "Unfair",
        success=proportional and queries <= bound,
        ledger=oracle.ledger.to_dict(),
        certificates={"proportional": certificate.summary()},
        checks={
            "query_bound": bound,
            "within_bound": queries <= bound,
            "disjoint": allocation.pairwise_disjoint(),
            "within_piece": allocation.within(piece),
        },
        wall_time=time.perf_counter() - started,
    )


def dc_trials(
    source: InstanceSource, trials: int, master_seed: int, piece: PieceSet | None = None, timing: bool = False
) -> list[TrialReport]:
    reports = []
    for i in range(trials):
        seed = child_seed(master_seed, i)
        reports.append(_stamp(run_dc_trial(source(seed), piece), i, seed, timing))
    return reports


def lemma1_trial(params: SamplingLemmaParams, trials: int, master_seed: int, timing: bool = False) -> TrialReport:
    started = time.perf_counter()
    rate = check_lemma1(params, trials, child_rng(master_seed, 0))
    bound = params.bound()
    report = TrialReport(
        scenario="lemma1",
        n=params.n,
        params={"eps": params.eps, "s": params.s, "t": params.t, "r": params.r, "trials": trials},
        status="Checked",
        success=passes_floor(rate, bound, trials),
        checks={
            "frequency": rate,
            "bound": float(bound),
            "sigma": binomial_sigma(bound, trials),
            "draws": params.draws,
        },
        wall_time=time.perf_counter() - started,
    )
    return _stamp(report, 0, child_seed(master_seed, 0), timing)


@dataclass
class BatchSummary:
    scenario: str
    n: int
    r: int | None
    eps: str | None
    t: str | None
    sigma: str | None
    trials: int
    success_rate: float
    floor: float | None
    preassign_queries_mean: float | None
    completion_queries_mean: float | None
    victims_mean: float | None

    @property
    def passes(self) -> bool:
        if self.floor is None:
            return True
        return passes_floor(self.success_rate, self.floor, self.trials)


def summarize(scenario: str, reports: list[TrialReport]) -> BatchSummary:
    """Aggregate a batch of same-scenario reports into one summary row."""
    if not reports:
        return BatchSummary(scenario, 0, None, None, None, None, 0, 1.0, None, None, None, None)
    first = reports[0]
    kind = first.scenario
    params = first.params
    rate = fmean(1.0 if r.success else 0.0 for r in reports)
    floor = None
    r = eps = t = sigma = None
    pre = comp = vic = None
    if kind == "theorem1":
        r, eps, t = params["r"], str(params["eps"]), str(params["t"])
        floor = float(theorem1_floor(params["r"], params["eps"], params["t"], params["strategy"] != "dc"))
    elif kind == "theorem2":
        r, eps, t = len(params["designated"]), str(params["eps"]), str(params["t"])
        sigma = str(params["scale"])
        floor = float(theorem2_floor(r, params["eps"], params["t"]))
    elif kind == "lemma1":
        r, eps, t = params["r"], str(params["eps"]), str(params["t"])
        trials = params["trials"]
        rate = first.checks["frequency"]
        return BatchSummary(scenario, first.n, r, eps, t, None, trials, rate, first.checks["bound"], None, None, None)
    elif kind == "dc":
        floor = 1.0
    if kind in ("theorem1", "theorem2"):
        pre = fmean(rep.queries("preassign") for rep in reports)
        comp = fmean(rep.queries("completion") for rep in reports)
        vic = fmean(rep.victims for rep in reports)
    else:
        comp = fmean(rep.total_queries for rep in reports)
    return BatchSummary(scenario, first.n, r, eps, t, sigma, len(reports), rate, floor, pre, comp, vic)
