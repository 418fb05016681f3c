"""Batch experiments: generate, synthesize, optimize, verify, compare, report.

A suite file is JSON::

    {"name": "random-log",
     "configurations": [
        {"name": "log", "benchmark": "random", "sizes": [10, 100], "seeds": 10,
         "generator": {"class_size_mode": "logarithmic"},
         "optimizer": {"synth_budget": 30, "optimize_budget": 60},
         "baselines": {"brute": true, "brute_nodes": 20000, "approx": true}}]}

``seeds`` is a count (seeds 0..k-1) or an explicit list.  ``sizes`` are state
counts for ``random`` and map sizes for ``drone``.  Every generator knob of
``RandomModelSpec`` / ``DroneModelSpec`` and every ``OptimizerConfig`` field
may appear in the respective block.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from statistics import mean
from typing import Any, Mapping

from .baselines import approx_bounds, brute_force_uniform, conclusive
from .benchgen import DroneModelSpec, RandomModelSpec, gen_drone, gen_random
from .model import Model, ReachabilityGoal, dumps_model
from .optimizer import OptimizerConfig, optimize, optimize_coal
from .strategy import StrategyProfile, broken_states, strategy_reach, verify_winning
from .synthesis import strat_synth, synthesize_profile

# exit codes of the standalone verifier
IDEAL, NON_UNIFORM, NOT_WINNING = 0, 1, 2


def metric_ep(m: Model, goal: ReachabilityGoal, profile: StrategyProfile) -> int:
    """States reached by the profile whose choice clashes with an indistinguishable reached state."""
    return len(broken_states(m, goal, profile))


def metric_str(m: Model, goal: ReachabilityGoal, profile: StrategyProfile) -> int:
    return len(strategy_reach(m, goal, profile))


def verify_code(m: Model, goal: ReachabilityGoal, profile: StrategyProfile) -> int:
    """0: uniform and winning from every state of Q0; 1: wins only with perfect information; 2: loses."""
    if not verify_winning(m, goal, profile, "perfect").winning:
        return NOT_WINNING
    ideal = (
        metric_ep(m, goal, profile) == 0
        and verify_winning(m, goal, profile, "imperfect").winning
    )
    return IDEAL if ideal else NON_UNIFORM


def is_ideal(m: Model, goal: ReachabilityGoal, profile: StrategyProfile) -> bool:
    return metric_ep(m, goal, profile) == 0 and verify_winning(m, goal, profile, "imperfect").winning


# ---------------------------------------------------------------------------
# suite configuration
# ---------------------------------------------------------------------------

BENCHMARKS = ("random", "drone")


@dataclass(frozen=True)
class Instance:
    config: str
    benchmark: str
    size: int
    seed: int
    generator: Mapping[str, Any]
    optimizer: Mapping[str, Any]
    baselines: Mapping[str, Any]


def _knobs(cls) -> set[str]:
    return {f.name for f in fields(cls)}


def expand_suite(suite: Mapping) -> list[Instance]:
    """All (configuration, size, seed) instances of a suite, in report order."""
    out = []
    for conf in suite.get("configurations", []):
        bench = conf.get("benchmark", "random")
        if bench not in BENCHMARKS:
            raise ValueError(f"unknown benchmark {bench!r}")
        gen = dict(conf.get("generator", {}))
        allowed = _knobs(RandomModelSpec if bench == "random" else DroneModelSpec)
        allowed -= {"seed", "n_states", "map_size"}
        unknown = set(gen) - allowed
        if unknown:
            raise ValueError(f"unknown generator knobs for {bench}: {sorted(unknown)}")
        opt = dict(conf.get("optimizer", {}))
        unknown = set(opt) - _knobs(OptimizerConfig)
        if unknown:
            raise ValueError(f"unknown optimizer knobs: {sorted(unknown)}")
        seeds = conf.get("seeds", 10)
        seeds = list(range(seeds)) if isinstance(seeds, int) else [int(s) for s in seeds]
        for size in conf.get("sizes", [10]):
            name = f"{conf.get('name', bench)}-{size}"
            for seed in seeds:
                out.append(Instance(name, bench, int(size), seed, gen, opt, dict(conf.get("baselines", {}))))
    return out


def build_instance(inst: Instance) -> tuple[Model, ReachabilityGoal]:
    if inst.benchmark == "random":
        return gen_random(RandomModelSpec(n_states=inst.size, seed=inst.seed, **inst.generator))
    return gen_drone(DroneModelSpec(map_size=inst.size, seed=inst.seed, **inst.generator))


# ---------------------------------------------------------------------------
# one instance
# ---------------------------------------------------------------------------

COLUMNS = (
    "row", "config", "benchmark", "size", "seed", "instances", "model_id", "n_states", "gen_time",
    "realizable", "synth_time", "str_before", "ep_before", "str_after", "ep_after", "reduction",
    "opt_time", "ir", "termination", "sweeps", "replacements",
    "brute", "brute_time", "lower", "upper", "approx_time", "conclusive", "error",
)
TIMING = ("gen_time", "synth_time", "opt_time", "brute_time", "approx_time")


def run_instance(inst: Instance, out_dir: str | None = None, timing: bool = True) -> dict:
    """Run the whole pipeline on one instance; failures become an ``error`` row."""
    row: dict[str, Any] = {c: "" for c in COLUMNS}
    row.update(row="instance", config=inst.config, benchmark=inst.benchmark, size=inst.size,
               seed=inst.seed, instances=1, model_id=f"{inst.config}/{inst.seed}")
    artifacts: dict[str, str] = {}
    try:
        _pipeline(inst, row, artifacts)
    except Exception as exc:  # one bad instance must not sink the suite
        row["error"] = f"{type(exc).__name__}: {exc}"
    if not timing:
        for c in TIMING:
            if row[c] != "":
                row[c] = 0.0
    if out_dir is not None:
        where = Path(out_dir) / inst.config / str(inst.seed)
        where.mkdir(parents=True, exist_ok=True)
        for name, text in artifacts.items():
            if name == "trace.json" and not timing:
                data = json.loads(text)
                data["elapsed"] = 0.0
                text = json.dumps(data, sort_keys=True)
            (where / name).write_text(text)
        (where / "row.json").write_text(json.dumps(row, sort_keys=True))
    return row


def _pipeline(inst: Instance, row: dict, artifacts: dict) -> None:
    t = time.monotonic()
    m, goal = build_instance(inst)
    row["gen_time"] = time.monotonic() - t
    row["n_states"] = m.n_states
    artifacts["model.json"] = dumps_model(m)

    cfg = OptimizerConfig(**{"seed": inst.seed, **inst.optimizer})
    t = time.monotonic()
    if len(goal.coalition) == 1:
        synth = strat_synth(m, goal, seed=cfg.seed)
        initial = synth.profile if synth else None
    else:
        synth = None
        initial = synthesize_profile(m, goal, cfg.seed)
    row["synth_time"] = time.monotonic() - t
    if row["synth_time"] > cfg.synth_budget:
        row["realizable"] = False
        row["termination"] = "synth_timeout"
        return
    row["realizable"] = initial is not None
    if initial is None:
        row["termination"] = "unrealizable"
        return
    row["str_before"] = metric_str(m, goal, initial)
    row["ep_before"] = metric_ep(m, goal, initial)
    artifacts["initial_strategy.json"] = json.dumps(initial.to_dict())

    t = time.monotonic()
    if synth is not None:
        trace = optimize(m, goal, synth, cfg)
    else:
        trace = optimize_coal(m, goal, cfg, initial=initial)
    row["opt_time"] = time.monotonic() - t
    final = trace.final_profile
    row["str_after"] = metric_str(m, goal, final)
    row["ep_after"] = metric_ep(m, goal, final)
    row["ir"] = is_ideal(m, goal, final)
    red = relative_reduction(row)
    row["reduction"] = "" if red is None else red
    row["termination"] = trace.termination
    row["sweeps"] = trace.sweeps
    row["replacements"] = trace.replacements
    artifacts["strategy.json"] = json.dumps(final.to_dict())
    artifacts["trace.json"] = json.dumps(trace.to_dict(), sort_keys=True)

    base = inst.baselines
    if base.get("brute", False):
        budget = base.get("brute_nodes", 20000)
        verdict = brute_force_uniform(m, goal, node_budget=budget)
        row["brute"] = verdict.answer
        row["brute_time"] = verdict.elapsed
    if base.get("approx", True):
        t = time.monotonic()
        lower, upper = approx_bounds(m, goal)
        row["approx_time"] = time.monotonic() - t
        row["lower"] = lower.answer
        row["upper"] = upper.answer
        row["conclusive"] = conclusive(lower, upper)


# ---------------------------------------------------------------------------
# aggregation and output
# ---------------------------------------------------------------------------


def relative_reduction(row: Mapping) -> float | None:
    """Share of broken states removed by optimization; ``None`` when there was nothing to fix."""
    before = row.get("ep_before")
    if before in ("", None) or before == 0 or row.get("ep_after") in ("", None):
        return None
    return (before - row["ep_after"]) / before


def aggregate(rows: list[dict]) -> list[dict]:
    """One row per configuration, computed over realizable instances only."""
    by_conf: dict[str, list[dict]] = {}
    for r in rows:
        by_conf.setdefault(r["config"], []).append(r)
    out = []
    for conf, group in by_conf.items():
        done = [r for r in group if r["realizable"] is True and not r["error"] and r["ir"] != ""]
        agg: dict[str, Any] = {c: "" for c in COLUMNS}
        agg.update(row="aggregate", config=conf, benchmark=group[0]["benchmark"], size=group[0]["size"],
                   instances=len(group), realizable=len(done))
        for c in ("n_states", "gen_time"):
            vals = [r[c] for r in group if r[c] != ""]
            if vals:
                agg[c] = float(mean(vals))
        for c in ("synth_time", "str_before", "ep_before", "str_after", "ep_after", "opt_time",
                  "sweeps", "replacements", "brute_time", "approx_time"):
            vals = [r[c] for r in done if r[c] != ""]
            if vals:
                agg[c] = float(mean(vals))
        if done:
            agg["ir"] = sum(bool(r["ir"]) for r in done) / len(done)
            reductions = [r["reduction"] for r in done if r["reduction"] != ""]
            if reductions:
                agg["reduction"] = mean(reductions)
            brute = [r["brute"] for r in done if r["brute"] != ""]
            if brute:
                agg["brute"] = sum(b == "true" for b in brute) / len(brute)
            concl = [r["conclusive"] for r in done if r["conclusive"] != ""]
            if concl:
                agg["conclusive"] = sum(bool(c) for c in concl) / len(concl)
        agg["error"] = sum(bool(r["error"]) for r in group)
        out.append(agg)
    return out


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def report_csv(rows: list[dict], aggregates: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in list(rows) + list(aggregates):
        w.writerow([_cell(r[c]) for c in COLUMNS])
    return buf.getvalue()


@dataclass
class ExperimentReport:
    rows: list[dict]
    aggregates: list[dict]

    def to_csv(self) -> str:
        return report_csv(self.rows, self.aggregates)

    def to_json(self) -> str:
        return json.dumps({"columns": list(COLUMNS), "instances": self.rows, "aggregates": self.aggregates},
                          indent=1, sort_keys=True)

    def write(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.csv").write_text(self.to_csv())
        (out / "report.json").write_text(self.to_json())


def _run_one(args):
    inst, out_dir, timing = args
    return run_instance(inst, out_dir, timing)


def run_suite(suite: Mapping | str | Path, out_dir: str | Path | None = None, workers: int = 1,
              timing: bool = True) -> ExperimentReport:
    """Run every instance of a suite; rows come back in (configuration, size, seed) order."""
    if not isinstance(suite, Mapping):
        suite = json.loads(Path(suite).read_text())
    instances = expand_suite(suite)
    where = str(out_dir) if out_dir is not None else None
    jobs = [(inst, where, timing) for inst in instances]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_one, jobs))
    else:
        rows = [_run_one(j) for j in jobs]
    report = ExperimentReport(rows, aggregate(rows))
    if out_dir is not None:
        report.write(out_dir)
    return report
