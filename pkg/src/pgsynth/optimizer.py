"""Iterated improvement of a perfect-information strategy towards uniformity.

Each sweep walks the info-set records in discovery order and replaces a
record's partial strategy while a best uniformity- or outcome-dominating
alternative exists.  Sweeps repeat until nothing changes or the time budget
runs out.  Every intermediate profile still wins from the initial state, so
stopping at any moment yields a usable strategy.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

from .dominance import OUTCOME_FIRST, UNIFORM_FIRST, Criterion, Scores, find_best_dominating
from .model import Model, ReachabilityGoal
from .strategy import (
    InfoSet,
    PartialStrategyRecord,
    StrategyProfile,
    broken_states,
    input_states,
    verify_winning,
    with_sigma,
)
from .synthesis import SynthesisOutput, build_records, info_sets, synthesize_profile


@dataclass
class OptimizerConfig:
    synth_budget: float = 30.0
    optimize_budget: float = 60.0
    candidate_budget: int = 20000
    exhaustive_threshold: int = 4096
    verify_each_sweep: bool = True
    # check that the merged profile still wins before accepting a replacement
    guard_replacements: bool = True
    max_sweeps: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.synth_budget < 0 or self.optimize_budget < 0:
            raise ValueError("budgets must be nonnegative")
        if self.candidate_budget < 1 or self.exhaustive_threshold < 1:
            raise ValueError("candidate budget and exhaustive threshold must be positive")


class ReplacementEvent(NamedTuple):
    agent: int
    record_id: int
    primary: Criterion
    secondary: Criterion
    before: Scores
    after: Scores


class SweepResult(NamedTuple):
    records: list[PartialStrategyRecord]
    profile: StrategyProfile
    replacements: int
    timed_out: bool


@dataclass
class OptimizationTrace:
    sweeps: int
    replacements: int
    termination: str  # fixpoint | timeout | rollback | cycle | sweep_limit
    final_profile: StrategyProfile
    final_records: list[PartialStrategyRecord]
    initial_profile: StrategyProfile
    conflicts_per_sweep: list[int] = field(default_factory=list)
    replacements_per_sweep: list[int] = field(default_factory=list)
    ep_per_sweep: list[int] = field(default_factory=list)
    elapsed: float = 0.0

    def to_dict(self, timing: bool = True) -> dict:
        return {
            "sweeps": self.sweeps,
            "replacements": self.replacements,
            "termination": self.termination,
            "conflicts_per_sweep": self.conflicts_per_sweep,
            "replacements_per_sweep": self.replacements_per_sweep,
            "ep_per_sweep": self.ep_per_sweep,
            "elapsed": self.elapsed if timing else 0.0,
            "records": [r.to_dict() for r in self.final_records],
        }

    def comparable(self):
        """Everything except wall-clock time, for determinism checks."""
        d = self.to_dict(timing=False)
        d["profile"] = self.final_profile.to_dict()
        return d


def optimize_once(
    m: Model,
    goal: ReachabilityGoal,
    records: list[PartialStrategyRecord],
    profile: StrategyProfile,
    cfg: OptimizerConfig,
    *,
    deadline: float | None = None,
    on_replace: Callable[[ReplacementEvent], None] | None = None,
) -> SweepResult:
    """One pass over one agent's records."""
    records = list(records)
    if not records:
        return SweepResult(records, profile, 0, False)
    coalition = profile.coalition
    targets = m.states_with(goal.target)
    replacements = 0

    def expired():
        return deadline is not None and time.monotonic() >= deadline

    for i in range(len(records)):
        if expired():
            return SweepResult(records, profile, replacements, True)
        rec = records[i]
        agent = rec.agent

        def still_wins(cand):
            return verify_winning(m, goal, profile.updated(cand), "perfect").winning

        while True:
            before_round = rec.sigma
            for primary, secondary in (UNIFORM_FIRST, OUTCOME_FIRST):
                found = find_best_dominating(
                    m,
                    agent,
                    rec,
                    primary,
                    secondary,
                    cfg.candidate_budget,
                    targets,
                    coalition=coalition,
                    exhaustive_threshold=cfg.exhaustive_threshold,
                    accept=still_wins if cfg.guard_replacements else None,
                    deadline=deadline,
                )
                if found is None:
                    continue
                new_rec = with_sigma(m, coalition, rec, sigma=found.sigma)
                if on_replace is not None:
                    on_replace(
                        ReplacementEvent(
                            agent, rec.id, primary, secondary,
                            Scores(rec.reach, rec.conflicts), Scores(new_rec.reach, new_rec.conflicts),
                        )
                    )
                rec = new_rec
                profile = profile.updated(rec.sigma)
                replacements += 1
            if rec.sigma == before_round or expired():
                break
        records[i] = rec

        ins = input_states(m, goal, profile, [r.states for r in records])
        for j, r in enumerate(records):
            if j != i and ins[j] != r.inputs:
                records[j] = with_sigma(m, coalition, r, inputs=ins[j])
    return SweepResult(records, profile, replacements, expired())


def _total_conflicts(records_by_agent) -> int:
    return sum(len(r.conflicts) for recs in records_by_agent.values() for r in recs)


def _key(records_by_agent):
    return tuple((a, tuple(r.key() for r in recs)) for a, recs in sorted(records_by_agent.items()))


def _improve(
    m: Model,
    goal: ReachabilityGoal,
    profile: StrategyProfile,
    sets_by_agent: dict[int, list[InfoSet]],
    cfg: OptimizerConfig,
    on_replace=None,
) -> OptimizationTrace:
    started = time.monotonic()
    deadline = started + cfg.optimize_budget
    agents = sorted(sets_by_agent)
    initial = profile

    def resync(p):
        return {a: build_records(m, goal, p, sets_by_agent[a]) for a in agents}

    records = resync(profile)
    best = (len(broken_states(m, goal, profile)), profile, records)
    trace = OptimizationTrace(0, 0, "fixpoint", profile, [], initial)
    seen = {_key(records)}

    while True:
        if time.monotonic() >= deadline:
            trace.termination = "timeout"
            break
        if trace.sweeps >= cfg.max_sweeps:
            trace.termination = "sweep_limit"
            break
        snapshot = (profile, records)
        made = 0
        timed_out = False
        for a in agents:
            recs = build_records(m, goal, profile, sets_by_agent[a])
            res = optimize_once(m, goal, recs, profile, cfg, deadline=deadline, on_replace=on_replace)
            profile = res.profile
            made += res.replacements
            if res.timed_out:
                timed_out = True
                break
        trace.sweeps += 1
        if cfg.verify_each_sweep and not verify_winning(m, goal, profile, "perfect").winning:
            profile, records = snapshot
            trace.termination = "rollback"
            break
        records = resync(profile)
        trace.replacements += made
        trace.replacements_per_sweep.append(made)
        trace.conflicts_per_sweep.append(_total_conflicts(records))
        ep = len(broken_states(m, goal, profile))
        trace.ep_per_sweep.append(ep)
        if ep <= best[0]:
            best = (ep, profile, records)
        if timed_out:
            trace.termination = "timeout"
            break
        if made == 0:
            trace.termination = "fixpoint"
            break
        key = _key(records)
        if key in seen:
            trace.termination = "cycle"
            break
        seen.add(key)

    _, profile, records = best
    trace.final_profile = profile
    trace.final_records = [r for a in agents for r in records[a]]
    trace.elapsed = time.monotonic() - started
    return trace


def optimize(
    m: Model, goal: ReachabilityGoal, synth: SynthesisOutput, cfg: OptimizerConfig | None = None, on_replace=None
) -> OptimizationTrace:
    """Repeat single sweeps until a fixpoint or the optimisation deadline."""
    cfg = cfg or OptimizerConfig()
    sets = {goal.coalition[0]: list(synth.info_sets)}
    return _improve(m, goal, synth.profile, sets, cfg, on_replace)


def optimize_coal(
    m: Model,
    goal: ReachabilityGoal,
    cfg: OptimizerConfig | None = None,
    on_replace=None,
    *,
    initial: StrategyProfile | None = None,
) -> OptimizationTrace | None:
    """Agent-alternating variant for coalitions; ``None`` if no perfect-information win exists.

    ``initial`` skips synthesis and starts from the given winning profile.
    """
    cfg = cfg or OptimizerConfig()
    profile = initial if initial is not None else synthesize_profile(m, goal, cfg.seed)
    if profile is None:
        return None
    sets = {a: info_sets(m, goal, profile, a) for a in goal.coalition}
    return _improve(m, goal, profile, sets, cfg, on_replace)
