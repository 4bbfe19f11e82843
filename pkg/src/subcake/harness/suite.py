"""Config-driven batches of scenarios with JSON/CSV/TSV outputs.

Config layout (JSON)::

    {
      "master_seed": 7,
      "timing": false,
      "scenarios": [
        {"name": "t1-small", "kind": "theorem1",
         "instance": {"kind": "block", "n": 1270, "num_blocks": 8, "prototypes": 8},
         "vary_instance": true, "trials": 20, "assert": true,
         "params": {"r": 1, "eps": "1/10", "t": 2}},
        {"kind": "lemma1", "trials": 1000,
         "params": {"n": 127000, "eps": "1/5", "s": 127, "t": 2, "r": 200}}
      ]
    }

A scenario may carry ``"sweep": {"param": "n", "values": [...]}``; each value
becomes its own batch and a row of the plot-data TSV.
"""

from __future__ import annotations

import copy
import csv
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..cake import Instance, PieceSet
from ..designated import DesignatedParams
from ..undesignated import UndesignatedParams
from .lemmas import SamplingLemmaParams
from .trials import (
    BatchSummary,
    dc_trials,
    instance_source,
    lemma1_trial,
    spike_overrides,
    summarize,
    theorem1_trials,
    theorem2_trials,
)

CSV_COLUMNS = (
    "scenario",
    "n",
    "r",
    "eps",
    "t",
    "sigma",
    "trials",
    "success_rate",
    "floor",
    "preassign_queries_mean",
    "completion_queries_mean",
    "victims_mean",
)
TSV_COLUMNS = ("scenario", "param", "x", "success_rate", "preassign_queries_mean", "completion_queries_mean")


@dataclass
class SuiteResult:
    reports: list[dict] = field(default_factory=list)
    summary: list[BatchSummary] = field(default_factory=list)
    plot_rows: list[dict] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def reports_json(self) -> str:
        return json.dumps(self.reports, sort_keys=True, indent=1) + "\n"

    def summary_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.summary:
            writer.writerow(_csv_row(row))
        return buf.getvalue()

    def plot_tsv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=TSV_COLUMNS, delimiter="\t", lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.plot_rows)
        return buf.getvalue()

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "reports.json").write_text(self.reports_json(), encoding="utf-8")
        (out / "summary.csv").write_text(self.summary_csv(), encoding="utf-8")
        if self.plot_rows:
            (out / "plot.tsv").write_text(self.plot_tsv(), encoding="utf-8")


def _csv_row(row: BatchSummary) -> dict:
    data = asdict(row)
    for key, value in data.items():
        if isinstance(value, float):
            data[key] = f"{value:.6g}"
        elif value is None:
            data[key] = ""
    return data


def _expand(scenario: dict) -> list[tuple[dict, object]]:
    sweep = scenario.get("sweep")
    if not sweep:
        return [(scenario, None)]
    param = sweep["param"]
    out = []
    for value in sweep["values"]:
        item = copy.deepcopy(scenario)
        item.pop("sweep")
        if param == "n":
            if "instance" in item:
                item["instance"]["n"] = value
            else:
                item["params"]["n"] = value
        else:
            item["params"][param] = value
        out.append((item, value))
    return out


def _instance_block(scenario: dict):
    block = scenario["instance"]
    if "file" in block:
        return Instance.load(block["file"])
    return {k: v for k, v in block.items() if k != "designated_spikes"}


def run_batch(scenario: dict, master_seed: int, timing: bool = False):
    """Run one (already expanded) scenario; returns its reports."""
    kind = scenario["kind"]
    trials = int(scenario.get("trials", 1))
    params = dict(scenario.get("params", {}))
    if kind == "lemma1":
        return [lemma1_trial(SamplingLemmaParams(**params), trials, master_seed, timing)]

    vary = bool(scenario.get("vary_instance", False))
    if kind == "theorem1":
        source = instance_source(_instance_block(scenario), vary)
        return theorem1_trials(source, UndesignatedParams(**params), trials, master_seed, timing)
    if kind == "theorem2":
        p = DesignatedParams(**params)
        spikes = scenario["instance"].get("designated_spikes")
        overrides = spike_overrides(p.designated, spikes) if spikes else None
        source = instance_source(_instance_block(scenario), vary, overrides)
        return theorem2_trials(source, p, trials, master_seed, timing)
    if kind == "dc":
        piece = PieceSet.from_json(scenario["piece"]) if "piece" in scenario else None
        source = instance_source(_instance_block(scenario), vary)
        return dc_trials(source, trials, master_seed, piece, timing)
    raise ValueError(f"unknown scenario kind {kind!r}")


def scenario_seed(master: int, index: int, position: int = 0) -> int:
    return int(np.random.SeedSequence([master, index, position]).generate_state(1, np.uint32)[0])


def run_suite(config: dict) -> SuiteResult:
    master = int(config.get("master_seed", 0))
    timing = bool(config.get("timing", False))
    result = SuiteResult()
    for index, raw in enumerate(config.get("scenarios", [])):
        for position, (scenario, x) in enumerate(_expand(raw)):
            name = scenario.get("name", f"{scenario['kind']}-{index}")
            if x is not None:
                name = f"{name}[{raw['sweep']['param']}={x}]"
            seed = int(scenario.get("seed", scenario_seed(master, index, position)))
            reports = run_batch(scenario, seed, timing)
            summary = summarize(name, reports)
            result.summary.append(summary)
            for report in reports:
                data = report.to_json()
                data["kind"] = data["scenario"]
                data["scenario"] = name
                result.reports.append(data)
            if scenario.get("assert", False) and not summary.passes:
                result.failures.append(name)
            if x is not None:
                result.plot_rows.append(
                    {
                        "scenario": raw.get("name", f"{raw['kind']}-{index}"),
                        "param": raw["sweep"]["param"],
                        "x": x,
                        "success_rate": f"{summary.success_rate:.6g}",
                        "preassign_queries_mean": _fmt(summary.preassign_queries_mean),
                        "completion_queries_mean": _fmt(summary.completion_queries_mean),
                    }
                )
    return result


def _fmt(value) -> str:
    return "" if value is None else f"{value:.6g}"


def load_config(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
