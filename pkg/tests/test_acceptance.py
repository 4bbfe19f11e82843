"""Acceptance suite: one PASS/FAIL line per criterion, at the stated tolerances."""

import json
import math
import time

import numpy as np
import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from subcake import END, Interval, Oracle, PieceSet, dc, failure_bound, fragmented_query, measure
from subcake.designated import (
    DesignatedParams,
    approvers,
    condense,
    deposit,
    fairness_regime,
    run_theorem2,
)
from subcake.harness.cli import main as cli_main
from subcake.harness.generators import generate, spike_valuation, with_designated
from subcake.harness.lemmas import SamplingLemmaParams, binomial_sigma
from subcake.harness.suite import run_suite
from subcake.harness.trials import (
    child_rng,
    child_seed,
    instance_source,
    lemma1_trial,
    summarize,
    theorem1_trials,
)
from subcake.oracle import CUT, EVAL
from subcake.undesignated import SUCCESS, UndesignatedParams, run_theorem1

from helpers import random_instance

NEAR_INV_E = "367879/1000000"  # largest 6-digit decimal below 1/e


@pytest.fixture
def verdict(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {number:2d}] {'PASS' if ok else 'FAIL'}  {title}: {detail}", flush=True)
        assert ok, detail

    return emit


def block_mix(n, seed, region=("2/5", "1/2")):
    return {
        "kind": "mix",
        "n": n,
        "seed": seed,
        "components": [
            [1, {"kind": "block", "num_blocks": 8, "prototypes": 16}],
            [1, {"kind": "spike", "region": list(region), "fraction": "1/2"}],
        ],
    }


def test_dc_exact_proportionality(verdict):
    started = time.perf_counter()
    violations = 0
    for i in range(200):
        n = 2 + i % 63
        inst = generate({"kind": "block", "n": n, "num_blocks": 8, "seed": i})
        piece = PieceSet.whole() if i % 2 else PieceSet.of((mpq(i % 7, 16), mpq(15 - i % 5, 16)))
        alloc = dc(Oracle(inst), range(n), piece)
        for p in range(n):
            v = inst.valuations[p]
            if measure(v, alloc[p]) * n < measure(v, piece):
                violations += 1
    elapsed = time.perf_counter() - started
    verdict(1, "DC exact proportionality", violations == 0 and elapsed < 10,
            f"200 instances, n in 2..64, {violations} violations, {elapsed:.1f} s")


def test_dc_query_complexity(verdict):
    worst = 0.0
    failures = []
    for n in range(2, 1025, 2):
        inst = generate({"kind": "block", "n": n, "prototypes": 32, "seed": n})
        o = Oracle(inst)
        dc(o, range(n), PieceSet.whole())
        bound = 2 * n * math.ceil(math.log2(n))
        worst = max(worst, o.ledger.total / bound)
        if o.ledger.total > bound:
            failures.append(n)
    for k in range(2, 9):
        piece = PieceSet.of(*[(mpq(2 * j, 2 * k), mpq(2 * j + 1, 2 * k)) for j in range(k)])
        for n in (2, 16, 128, 1024):
            inst = generate({"kind": "block", "n": n, "prototypes": 32, "seed": 7 * n + k})
            o = Oracle(inst)
            dc(o, range(n), piece)
            if o.ledger.total > k * 2 * n * math.ceil(math.log2(n)):
                failures.append((k, n))
    verdict(2, "DC query complexity", not failures,
            f"even n in 2..1024 plus k-fragment cakes k=2..8, max ledger/bound {worst:.3f}, "
            f"violations {failures}")


@pytest.mark.slow
def test_undesignated_sublinear_preassignment(verdict):
    params = UndesignatedParams(10, "1/10", 2, charge_duplicates=True)
    rows = []
    for n in (12700, 127000, 1270000):
        _, report = run_theorem1(generate(block_mix(n, 1)), params, np.random.default_rng(5), analyze=False)
        rows.append((n, report.status, report.queries("preassign"), report.queries("completion")))
    statuses = {r[1] for r in rows}
    pre_counts = {r[2] for r in rows}
    base_n, _, _, base_c = rows[0]
    in_bracket = True
    monotone = all(a[3] < b[3] for a, b in zip(rows, rows[1:]))
    ratios = []
    for n, _, _, comp in rows[1:]:
        predicted = n * math.log2(n) / (base_n * math.log2(base_n))
        actual = comp / base_c
        ratios.append(f"{actual:.2f}/{predicted:.2f}")
        in_bracket &= 0.5 * predicted <= actual <= 4 * predicted
    ok = statuses == {SUCCESS} and len(pre_counts) == 1 and monotone and in_bracket
    verdict(3, "sublinear preassignment", ok,
            f"preassign queries {sorted(pre_counts)} at n=12700/127000/1270000, "
            f"completion growth actual/predicted {', '.join(ratios)}")


@pytest.mark.slow
def test_undesignated_statistical_floor(verdict):
    started = time.perf_counter()
    params = UndesignatedParams(10, "1/10", 2)
    source = instance_source(block_mix(12700, 0), vary=True)
    reports = theorem1_trials(source, params, 300, master_seed=2024)
    summary = summarize("theorem1", reports)
    elapsed = time.perf_counter() - started
    victims_ok = all(r.victims == 1270 for r in reports if r.status == SUCCESS)
    ok = summary.passes and summary.floor == pytest.approx(0.2) and victims_ok and elapsed < 300
    slack = 3 * binomial_sigma(summary.floor, 300)
    verdict(4, "undesignated end-to-end floor", ok,
            f"empirical success {summary.success_rate:.4f} vs floor {summary.floor:.4f} - {slack:.4f} "
            f"over 300 seeds, {elapsed:.0f} s")


def test_sampling_check(verdict):
    started = time.perf_counter()
    params = SamplingLemmaParams(127000, "1/5", 127, 2, 200)
    report = lemma1_trial(params, 1000, master_seed=17)
    elapsed = time.perf_counter() - started
    bound = float(params.bound())
    ok = abs(bound - 0.99484) < 5e-6 and report.success and elapsed < 30
    verdict(5, "sampling bound check", ok,
            f"frequency {report.checks['frequency']:.4f} vs bound {bound:.5f} - "
            f"{3 * binomial_sigma(bound, 1000):.5f}, {elapsed:.1f} s")


def test_condense_halving(verdict):
    rng = np.random.default_rng(606)
    halving = median = 0
    for _ in range(500):
        inst = random_instance(rng, 24)
        p = int(rng.integers(0, 24))
        sample = [int(q) for q in rng.integers(0, 24, size=int(rng.integers(1, 16)))]
        lo = mpq(int(rng.integers(0, 64)), 64)
        hi = lo + mpq(int(rng.integers(1, 65 - lo * 64)), 64)
        piece = Interval(lo, hi)
        res = condense(Oracle(inst), p, sample, piece)
        halving += 2 * inst.value(p, res.piece) < inst.value(p, piece)
        need = math.ceil(len(sample) / 2)
        below = sum(x <= res.median_point for x in res.points)
        above = sum(x >= res.median_point for x in res.points)
        median += below < need or above < need
    verdict(6, "condense halving", halving == 0 and median == 0,
            f"500 calls, {halving} halving violations, {median} median violations")


def test_deposit_politeness(verdict):
    params = DesignatedParams([0], "1/5", 1, "1/64")
    spec = {"kind": "mix", "n": 5000, "components": [
        [9, {"kind": "uniform"}],
        [1, {"kind": "spike", "region": ["3/5", "7/10"], "fraction": "3/4"}]]}
    polite = 0
    for i in range(100):
        inst = generate({**spec, "seed": child_seed(7, i)})
        res = deposit(Oracle(inst), 0, params, child_rng(7, i))
        polite += len(approvers(inst, params.eps_prime, res.piece)) <= params.eps_prime * inst.n
    verdict(7, "deposit politeness", polite >= 90, f"{polite}/100 deposits polite (need 90)")


def test_designated_end_to_end(verdict):
    regions = [(0, "1/10"), ("9/20", "11/20"), ("9/10", 1)]
    spikes = [spike_valuation(lo, hi) for lo, hi in regions]
    params = DesignatedParams([0, 1, 2], NEAR_INV_E, 1, "1/64")
    disjoint = victims = halving = fair = 0
    for i in range(100):
        base = generate({"kind": "block", "n": 3000, "prototypes": 16, "seed": child_seed(8, i)})
        outcome, report = run_theorem2(with_designated(base, spikes), params, child_rng(8, i))
        disjoint += report.checks["designated_disjoint"]
        victims += report.victims == 1103
        halving += outcome.halving_certificate.all_fair
        fair += outcome.survivor_certificate.all_fair
    ok = disjoint == victims == halving == 100 and fair >= 90 and not fairness_regime(3000, 3, NEAR_INV_E)
    verdict(8, "designated end-to-end", ok,
            f"disjoint {disjoint}/100, victims 1103 in {victims}/100, halving bound {halving}/100, "
            f"survivors fair {fair}/100")


def test_failure_bound_arithmetic(verdict):
    at128, at64 = failure_bound(128), failure_bound(64)
    ok = at128 == mpq(83, 6144) and at128 < mpq(1, 64) and at64 <= mpq(2**9, 64**2) == mpq(1, 8)
    verdict(9, "failure bound arithmetic", ok, f"c=128 gives {at128}, c=64 gives {at64}")


def random_fragment_case(rng, k, kind):
    inst = random_instance(rng, 2)
    edges = np.sort(rng.choice(np.arange(1, 128), size=2 * k, replace=False))
    piece = PieceSet.of(*[(mpq(int(edges[2 * j]), 128), mpq(int(edges[2 * j + 1]), 128)) for j in range(k)])
    o = Oracle(inst)
    arg = mpq(int(rng.integers(0, 9)), 8) if kind == CUT else END
    fragmented_query(o, piece, int(rng.integers(0, 2)), kind, arg)
    return len(piece) == k and o.ledger.count(kind=kind) == k and o.ledger.total == k


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1), st.sampled_from([CUT, EVAL]))
def test_fragment_accounting_property(k, seed, kind):
    assert random_fragment_case(np.random.default_rng(seed), k, kind)


def test_fragment_accounting(verdict):
    checked = []
    for k in range(1, 9):
        piece = PieceSet.of(*[(mpq(2 * j, 2 * k), mpq(2 * j + 1, 2 * k)) for j in range(k)])
        o = Oracle(generate({"kind": "block", "n": 2, "seed": k}))
        for kind, arg in [(EVAL, END), (CUT, mpq(1, 3)), (CUT, mpq(2))]:
            before = o.ledger.count(kind=kind)
            fragmented_query(o, piece, 1, kind, arg)
            checked.append(o.ledger.count(kind=kind) - before == k)
    rng = np.random.default_rng(10)
    randomized = [random_fragment_case(rng, k, kind) for k in range(1, 9) for kind in (CUT, EVAL) for _ in range(20)]
    ok = all(checked) and all(randomized)
    verdict(10, "fragment accounting", ok,
            f"{sum(checked)}/{len(checked)} fixed and {sum(randomized)}/{len(randomized)} random queries "
            "charge exactly k for k=1..8")


def test_reproducibility(verdict, tmp_path):
    config = {
        "master_seed": 99,
        "scenarios": [
            {"name": "undesignated", "kind": "theorem1", "trials": 3, "vary_instance": True,
             "instance": block_mix(1270, 0), "params": {"r": 1, "eps": "1/10", "t": 2}},
            {"name": "designated", "kind": "theorem2", "trials": 2,
             "instance": {"kind": "block", "n": 800, "prototypes": 8,
                          "designated_spikes": [["0", "1/10"], ["9/10", "1"]]},
             "params": {"designated": [0, 1], "eps": "1/5", "t": 1, "scale": "1/64"}},
            {"name": "dc", "kind": "dc", "trials": 2, "vary_instance": True,
             "instance": {"kind": "block", "n": 32}, "sweep": {"param": "n", "values": [8, 32]}},
            {"kind": "lemma1", "trials": 100, "params": {"n": 12700, "eps": "1/5", "s": 127, "t": 2, "r": 20}},
        ],
    }
    first, second = run_suite(config), run_suite(json.loads(json.dumps(config)))
    same_api = first.reports_json() == second.reports_json() and first.summary_csv() == second.summary_csv()
    path = tmp_path / "suite.json"
    path.write_text(json.dumps(config))
    outputs = []
    for run in ("a", "b"):
        assert cli_main(["suite", "--config", str(path), "--out-dir", str(tmp_path / run)]) in (0, 1)
        outputs.append((tmp_path / run / "reports.json").read_bytes())
    same_cli = outputs[0] == outputs[1] == first.reports_json().encode()
    verdict(11, "reproducibility", same_api and same_cli,
            f"{len(first.reports)} reports byte-identical across two runs and two CLI invocations")
