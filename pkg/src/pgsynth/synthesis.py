"""Perfect-information synthesis and decomposition into per-info-set records."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .model import Coalition, JointAction, Model, PreconditionError, ReachabilityGoal, initial_states
from .strategy import (
    InfoSet,
    PartialStrategyRecord,
    StrategyProfile,
    decision_states,
    input_states,
    make_record,
)


@dataclass(frozen=True)
class AttractorResult:
    coalition: Coalition
    winning_region: frozenset[int]
    rank: dict[int, int]
    # rank-decreasing coalition actions per non-target region state, lexicographic
    safe_actions: dict[int, tuple[JointAction, ...]]
    profile: StrategyProfile


@dataclass(frozen=True)
class SynthesisOutput:
    profile: StrategyProfile
    info_sets: list[InfoSet]
    records: list[PartialStrategyRecord]


def solve_region(m: Model, coalition: Coalition, targets) -> tuple[dict[int, int], dict[int, tuple]]:
    """Rank every state from which the coalition can force reaching ``targets``."""
    table = m.coalition_moves(coalition)
    rank = {q: 0 for q in targets}
    safe: dict[int, tuple] = {}
    level = 0
    while True:
        level += 1
        added = {}
        for q in m.states:
            if q in rank:
                continue
            good = tuple(
                ca for ca in m.coalition_actions(coalition, q) if all(s in rank for s in table[q][ca])
            )
            if good:
                added[q] = good
        if not added:
            return rank, safe
        for q, good in added.items():
            rank[q] = level
            safe[q] = good


def attractor(m: Model, goal: ReachabilityGoal) -> AttractorResult | None:
    """Least-fixpoint attractor; ``None`` when the initial state is outside the region."""
    goal.check(m)
    coalition = goal.coalition
    rank, safe = solve_region(m, coalition, m.states_with(goal.target))
    if goal.initial_state not in rank:
        return None
    choices = []
    for q in m.states:
        if q in safe:
            choices.append(safe[q][0])
        else:
            choices.append(tuple(m.protocol[a][q][0] for a in coalition))
    return AttractorResult(
        coalition=coalition,
        winning_region=frozenset(rank),
        rank=rank,
        safe_actions=safe,
        profile=StrategyProfile(coalition, tuple(choices)),
    )


def randomize_profile(att: AttractorResult, seed) -> StrategyProfile:
    """Pick uniformly among the safe actions at each region state."""
    rng = random.Random(seed)
    choices = list(att.profile.choices)
    for q in sorted(att.safe_actions):
        options = att.safe_actions[q]
        choices[q] = options[rng.randrange(len(options))]
    return StrategyProfile(att.coalition, tuple(choices))


def synthesize_profile(m: Model, goal: ReachabilityGoal, seed=None) -> StrategyProfile | None:
    att = attractor(m, goal)
    if att is None:
        return None
    return att.profile if seed is None else randomize_profile(att, seed)


def discovery_order(m: Model, goal: ReachabilityGoal, profile: StrategyProfile) -> list[int]:
    """Depth-first discovery order of the profile-pruned model, from the initial state."""
    targets = m.states_with(goal.target)
    starts = [goal.initial_state] + sorted(initial_states(m, goal) - {goal.initial_state})
    order: list[int] = []
    seen: set[int] = set()
    for root in starts:
        stack = [root]
        while stack:
            q = stack.pop()
            if q in seen:
                continue
            seen.add(q)
            order.append(q)
            if q in targets:
                continue
            ca = profile.choices[q]
            nexts = []
            for joint, nxt in m.moves[q]:
                if tuple(joint[a] for a in profile.coalition) == ca and nxt not in seen and nxt not in nexts:
                    nexts.append(nxt)
            stack.extend(reversed(nexts))
    return order


def info_sets(m: Model, goal: ReachabilityGoal, profile: StrategyProfile, agent: int) -> list[InfoSet]:
    """The agent's classes restricted to the decision states, in discovery order."""
    decision = decision_states(m, goal, profile)
    listed: dict[int, InfoSet] = {}
    for q in discovery_order(m, goal, profile):
        if q not in decision:
            continue
        c = m.class_index[agent][q]
        if c not in listed:
            listed[c] = InfoSet(len(listed), m.epistemic[agent][c] & decision, agent)
    return list(listed.values())


def build_records(
    m: Model, goal: ReachabilityGoal, profile: StrategyProfile, sets: list[InfoSet]
) -> list[PartialStrategyRecord]:
    blocks = [s.members for s in sets]
    ins = input_states(m, goal, profile, blocks)
    return [
        make_record(m, profile.coalition, s, {q: profile.choices[q] for q in s.members}, inp)
        for s, inp in zip(sets, ins)
    ]


def strat_synth(m: Model, goal: ReachabilityGoal, seed=None) -> SynthesisOutput | None:
    """Perfect-information strategy plus its per-info-set records, or ``None``."""
    if len(goal.coalition) != 1:
        raise PreconditionError("strat_synth handles singleton coalitions; use optimize_coal")
    profile = synthesize_profile(m, goal, seed)
    if profile is None:
        return None
    sets = info_sets(m, goal, profile, goal.coalition[0])
    return SynthesisOutput(profile, sets, build_records(m, goal, profile, sets))
