"""Command line entry point (``pgsynth`` or ``python -m pgsynth``)."""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from dataclasses import fields
from pathlib import Path

from . import harness
from .baselines import approx_bounds, brute_force_uniform, conclusive
from .benchgen import DroneModelSpec, RandomModelSpec, check_generated, gen_drone, gen_random
from .model import ModelError, PreconditionError, ReachabilityGoal, dumps_model, load_model
from .optimizer import OptimizerConfig, optimize, optimize_coal
from .strategy import load_profile, verify_winning
from .synthesis import build_records, info_sets, strat_synth, synthesize_profile

INPUT_ERROR = 3


def duration(text: str) -> float:
    """Seconds from ``"30"``, ``"30s"``, ``"10ms"`` or ``"2m"``."""
    match = re.fullmatch(r"\s*([0-9]*\.?[0-9]+)\s*(ms|s|m)?\s*", text)
    if not match:
        raise argparse.ArgumentTypeError(f"not a duration: {text!r}")
    value = float(match.group(1))
    return value * {"ms": 0.001, "s": 1.0, "m": 60.0, None: 1.0}[match.group(2)]


def coalition(text: str) -> tuple[int, ...]:
    try:
        return tuple(sorted({int(x) for x in text.split(",") if x.strip()}))
    except ValueError:
        raise argparse.ArgumentTypeError(f"coalition must be comma-separated agent ids, got {text!r}")


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text + "\n")
    else:
        Path(path).write_text(text + "\n")


def _sidecar(out: str) -> Path:
    p = Path(out)
    return p.with_name(p.stem + ".spec.json")


def _goal_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--coalition", type=coalition, default=(0,), help="agent ids, e.g. 0 or 0,1")
    p.add_argument("--target", default="win", help="proposition to reach")
    p.add_argument("--initial", type=int, default=0, help="initial state id")


def _load(args):
    m = load_model(args.model)
    goal = ReachabilityGoal(args.coalition, args.target, args.initial)
    goal.check(m)
    return m, goal


def cmd_generate_random(args) -> int:
    spec = RandomModelSpec(
        n_states=args.states,
        class_size_mode=args.classes,
        seed=args.seed,
        connections=args.connections,
        n_actions=args.actions,
        n_winning=args.winning,
        n_paths=args.paths,
        repetitions=args.repetitions,
        max_class_size=args.max_class_size,
        labeling=args.labeling,
        forward_edges=args.forward_edges,
    )
    m, goal = gen_random(spec)
    check_generated(m)
    _write(args.out, dumps_model(m))
    if args.out and args.out != "-":
        _sidecar(args.out).write_text(json.dumps({"benchmark": "random", **spec.to_dict(),
                                                  "goal": _goal_dict(goal)}, sort_keys=True) + "\n")
    return 0


def cmd_generate_drone(args) -> int:
    spec = DroneModelSpec(
        map_size=args.map_size,
        n_drones=args.drones,
        initial_energy=args.energy,
        seed=args.seed,
        wind_rate=args.wind_rate,
        gps_confusion_rate=args.gps_rate,
    )
    m, goal = gen_drone(spec)
    check_generated(m)
    _write(args.out, dumps_model(m))
    if args.out and args.out != "-":
        _sidecar(args.out).write_text(json.dumps({"benchmark": "drone", **spec.to_dict(),
                                                  "goal": _goal_dict(goal)}, sort_keys=True) + "\n")
    return 0


def _goal_dict(goal: ReachabilityGoal) -> dict:
    return {"coalition": list(goal.coalition), "target": goal.target, "initial": goal.initial_state}


def cmd_synth(args) -> int:
    m, goal = _load(args)
    if len(goal.coalition) == 1:
        out = strat_synth(m, goal, seed=args.seed)
        if out is None:
            print("unrealizable: no perfect-information winning strategy", file=sys.stderr)
            return 1
        profile, records = out.profile, out.records
    else:
        profile = synthesize_profile(m, goal, args.seed)
        if profile is None:
            print("unrealizable: no perfect-information winning strategy", file=sys.stderr)
            return 1
        records = [r for a in goal.coalition for r in build_records(m, goal, profile, info_sets(m, goal, profile, a))]
    _write(args.out, json.dumps(profile.to_dict()))
    if args.records:
        Path(args.records).write_text(json.dumps([r.to_dict() for r in records], indent=1) + "\n")
    return 0


def cmd_optimize(args) -> int:
    m, goal = _load(args)
    cfg = OptimizerConfig(
        synth_budget=args.synth_budget,
        optimize_budget=args.opt_budget,
        candidate_budget=args.candidate_budget,
        exhaustive_threshold=args.exhaustive_threshold,
        verify_each_sweep=args.verify_sweeps,
        seed=args.seed,
    )
    if len(goal.coalition) == 1:
        synth = strat_synth(m, goal, seed=args.seed)
        trace = optimize(m, goal, synth, cfg) if synth else None
    else:
        trace = optimize_coal(m, goal, cfg)
    if trace is None:
        print("unrealizable: no perfect-information winning strategy", file=sys.stderr)
        return 1
    _write(args.out, json.dumps(trace.final_profile.to_dict()))
    if args.trace:
        Path(args.trace).write_text(json.dumps(trace.to_dict(timing=not args.no_timing), indent=1) + "\n")
    summary = {
        "termination": trace.termination,
        "sweeps": trace.sweeps,
        "replacements": trace.replacements,
        "ep_before": harness.metric_ep(m, goal, trace.initial_profile),
        "ep_after": harness.metric_ep(m, goal, trace.final_profile),
        "ideal": harness.is_ideal(m, goal, trace.final_profile),
    }
    print(json.dumps(summary), file=sys.stderr)
    return 0


def cmd_verify(args) -> int:
    m, goal = _load(args)
    profile = load_profile(args.strategy)
    if profile.coalition != goal.coalition:
        raise PreconditionError(f"strategy is for coalition {list(profile.coalition)}, goal names {list(goal.coalition)}")
    profile.check(m)
    code = harness.verify_code(m, goal, profile)
    perfect = verify_winning(m, goal, profile, "perfect")
    print(json.dumps({
        "verdict": {0: "winning-uniform", 1: "winning-nonuniform", 2: "not-winning"}[code],
        "broken_states": harness.metric_ep(m, goal, profile),
        "counterexample": list(perfect.counterexample) if perfect.counterexample else None,
    }))
    return code


def cmd_brute(args) -> int:
    m, goal = _load(args)
    deadline = time.monotonic() + args.budget if args.budget is not None else None
    verdict = brute_force_uniform(m, goal, deadline=deadline, node_budget=args.nodes)
    _write(args.out, json.dumps(verdict.to_dict(timing=not args.no_timing)))
    return 0


def cmd_approx(args) -> int:
    m, goal = _load(args)
    lower, upper = approx_bounds(m, goal)
    t = not args.no_timing
    _write(args.out, json.dumps({"lower": lower.to_dict(t), "upper": upper.to_dict(t),
                                 "conclusive": conclusive(lower, upper)}))
    return 0


def cmd_bench(args) -> int:
    report = harness.run_suite(args.config, out_dir=args.out_dir, workers=args.workers,
                               timing=not args.no_timing)
    for agg in report.aggregates:
        print(f"{agg['config']}: realizable {agg['realizable']}/{agg['instances']}"
              f"  ir {harness._cell(agg['ir'])}  ep {harness._cell(agg['ep_before'])}"
              f" -> {harness._cell(agg['ep_after'])}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pgsynth", description="Uniform strategy synthesis by iterated optimization.")
    sub = parser.add_subparsers(dest="command", required=True)

    d = RandomModelSpec(10)
    p = sub.add_parser("generate-random", help="random agent-versus-environment model")
    p.add_argument("--states", type=int, required=True)
    p.add_argument("--classes", choices=("logarithmic", "linear"), default=d.class_size_mode)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--connections", type=int)
    p.add_argument("--actions", type=int)
    p.add_argument("--winning", type=int)
    p.add_argument("--paths", type=int)
    p.add_argument("--repetitions", type=int, default=d.repetitions)
    p.add_argument("--max-class-size", type=int)
    p.add_argument("--labeling", choices=("edge", "hyperedge"), default=d.labeling)
    p.add_argument("--forward-edges", action=argparse.BooleanOptionalAction, default=d.forward_edges)
    p.add_argument("--out", help="model JSON path (stdout if omitted); a .spec.json sidecar is written next to it")
    p.set_defaults(func=cmd_generate_random)

    dd = DroneModelSpec(5)
    p = sub.add_parser("generate-drone", help="drones mapping pollution on a random map")
    p.add_argument("--map-size", type=int, required=True)
    p.add_argument("--drones", type=int, default=1)
    p.add_argument("--energy", type=int, help="initial energy (default twice the map size)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--wind-rate", type=float, default=dd.wind_rate)
    p.add_argument("--gps-rate", type=float, default=dd.gps_confusion_rate)
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate_drone)

    p = sub.add_parser("synth", help="perfect-information winning strategy")
    _goal_args(p)
    p.add_argument("--seed", type=int, help="randomize among safe actions")
    p.add_argument("--out")
    p.add_argument("--records", help="dump the per-information-set records here")
    p.set_defaults(func=cmd_synth)

    c = OptimizerConfig()
    p = sub.add_parser("optimize", help="synthesize, then optimize towards a uniform strategy")
    _goal_args(p)
    p.add_argument("--seed", type=int, default=c.seed)
    p.add_argument("--synth-budget", type=duration, default=c.synth_budget)
    p.add_argument("--opt-budget", type=duration, default=c.optimize_budget)
    p.add_argument("--candidate-budget", type=int, default=c.candidate_budget)
    p.add_argument("--exhaustive-threshold", type=int, default=c.exhaustive_threshold)
    p.add_argument("--verify-sweeps", action=argparse.BooleanOptionalAction, default=c.verify_each_sweep)
    p.add_argument("--trace")
    p.add_argument("--no-timing", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("verify", help="exit 0 winning and uniform, 1 winning but not uniform, 2 not winning")
    _goal_args(p)
    p.add_argument("--strategy", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("brute", help="exact search for a uniform winning strategy")
    _goal_args(p)
    p.add_argument("--budget", type=duration, help="wall-clock limit")
    p.add_argument("--nodes", type=int, help="search-node limit (deterministic)")
    p.add_argument("--no-timing", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_brute)

    p = sub.add_parser("approx", help="lower and upper bound on uniform realizability")
    _goal_args(p)
    p.add_argument("--no-timing", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("bench", help="run an experiment suite")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default="results")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-timing", action="store_true")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ModelError, PreconditionError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
