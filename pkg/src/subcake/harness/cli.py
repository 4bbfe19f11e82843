"""Command line entry point: ``subcake <theorem1|theorem2|dc|lemma1|suite|generate>``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from ..cake import Instance, PieceSet, rational
from ..designated import DesignatedParams, run_theorem2
from ..oracle import Oracle
from ..protocols import certify, dc
from ..undesignated import ParameterError, UndesignatedParams, run_theorem1
from .generators import GeneratorSpec, generate
from .lemmas import SamplingLemmaParams
from .suite import load_config, run_suite
from .trials import child_rng, child_seed, lemma1_trial, summarize

log = logging.getLogger("subcake")


def _write_json(path: str, data) -> None:
    text = json.dumps(data, sort_keys=True, indent=1) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _run_trials(args, runner, params) -> int:
    instance = Instance.load(args.instance)
    reports = []
    allocation = None
    for i in range(args.trials):
        outcome, report = runner(instance, params, child_rng(args.seed, i))
        report.trial, report.seed = i, child_seed(args.seed, i)
        report.wall_time = None
        reports.append(report)
        if i == 0 and args.allocation:
            allocation = outcome.allocation()
        log.info("trial %d: %s", i, report.status)
    _write_json(args.out, [r.to_json() for r in reports])
    if allocation is not None:
        _write_json(args.allocation, allocation.to_json(certify(instance, allocation)))
    summary = summarize(reports[0].scenario, reports)
    log.info("success rate %.4f over %d trials", summary.success_rate, summary.trials)
    return 0


def cmd_theorem1(args) -> int:
    params = UndesignatedParams(args.r, args.eps, args.t, charge_duplicates=args.charge_duplicates)
    return _run_trials(args, run_theorem1, params)


def cmd_theorem2(args) -> int:
    ids = [int(x) for x in args.designated.split(",") if x.strip()]
    params = DesignatedParams(ids, args.eps, args.t, args.scale)
    return _run_trials(args, run_theorem2, params)


def cmd_dc(args) -> int:
    instance = Instance.load(args.instance)
    oracle = Oracle(instance, phase="dc")
    whole = PieceSet.whole()
    allocation = dc(oracle, range(instance.n), whole)
    shares = {p: instance.value(p, whole) / instance.n for p in range(instance.n)}
    data = allocation.to_json(certify(instance, allocation, shares))
    data["ledger"] = oracle.ledger.to_dict()
    _write_json(args.out, data)
    return 0


def cmd_lemma1(args) -> int:
    params = SamplingLemmaParams(args.n, args.eps, args.s, args.t, args.r)
    report = lemma1_trial(params, args.trials, args.seed)
    _write_json(args.out, report.to_json())
    log.info("frequency %.5f vs bound %.5f", report.checks["frequency"], report.checks["bound"])
    return 0 if report.success else 1


def cmd_suite(args) -> int:
    result = run_suite(load_config(args.config))
    result.write(args.out_dir)
    for name in result.failures:
        log.error("assertion failed: %s", name)
    return 0 if result.ok else 1


def cmd_generate(args) -> int:
    spec = GeneratorSpec.from_dict(json.loads(args.spec))
    instance = generate(spec)
    if args.out == "-":
        sys.stdout.write(instance.dumps() + "\n")
    else:
        instance.save(args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subcake", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theorem1", help="undesignated preassignment + completion")
    p.add_argument("--instance", required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--eps", type=rational, required=True)
    p.add_argument("--t", type=rational, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--charge-duplicates", action="store_true")
    p.add_argument("--allocation", help="write the first trial's allocation here")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_theorem1)

    p = sub.add_parser("theorem2", help="designated preassignment + completion")
    p.add_argument("--instance", required=True)
    p.add_argument("--designated", required=True, help="comma-separated player ids")
    p.add_argument("--eps", type=rational, required=True)
    p.add_argument("--t", type=rational, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--scale", type=rational, default=rational(1))
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--allocation", help="write the first trial's allocation here")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_theorem2)

    p = sub.add_parser("dc", help="divide and conquer over the whole cake")
    p.add_argument("--instance", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dc)

    p = sub.add_parser("lemma1", help="Monte-Carlo check of the sampling bound")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=rational, required=True)
    p.add_argument("--s", type=rational, required=True)
    p.add_argument("--t", type=rational, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_lemma1)

    p = sub.add_parser("suite", help="run a JSON scenario config")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("generate", help="write a generated instance file")
    p.add_argument("--spec", required=True, help='JSON, e.g. \'{"kind": "uniform", "n": 100}\'')
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ParameterError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
