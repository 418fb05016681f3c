"""Total and partial memoryless strategies and the bookkeeping built on them.

A partial strategy is a plain ``dict`` from state id to coalition action (a
tuple aligned with the sorted coalition).  Its domain is the key set.  A
``StrategyProfile`` is the total version, one coalition action per state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, NamedTuple

from .model import (
    Coalition,
    JointAction,
    Model,
    PreconditionError,
    ReachabilityGoal,
    initial_states,
)

PartialStrategy = Mapping[int, JointAction]
Pair = frozenset  # unordered pair of states


@dataclass(frozen=True)
class StrategyProfile:
    coalition: Coalition
    choices: tuple[JointAction, ...]

    def action(self, agent: int, q: int) -> int:
        return self.choices[q][self.coalition.index(agent)]

    def as_partial(self, exclude: Iterable[int] = ()) -> dict[int, JointAction]:
        skip = set(exclude)
        return {q: ca for q, ca in enumerate(self.choices) if q not in skip}

    def updated(self, sigma: PartialStrategy) -> "StrategyProfile":
        if not sigma:
            return self
        choices = list(self.choices)
        for q, ca in sigma.items():
            choices[q] = ca
        return StrategyProfile(self.coalition, tuple(choices))

    def check(self, m: Model) -> None:
        if len(self.choices) != m.n_states:
            raise PreconditionError("profile is not total")
        for q, ca in enumerate(self.choices):
            for i, a in enumerate(self.coalition):
                if ca[i] not in m.protocol[a][q]:
                    raise PreconditionError(f"profile picks illegal action {ca[i]} for agent {a} at state {q}")

    def to_dict(self) -> dict:
        return {
            "coalition": list(self.coalition),
            "choices": [{"state": q, "action": list(ca)} for q, ca in enumerate(self.choices)],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "StrategyProfile":
        unknown = set(data) - {"coalition", "choices"}
        if unknown:
            raise ValueError(f"unknown strategy fields: {sorted(unknown)}")
        entries = sorted(data["choices"], key=lambda e: e["state"])
        if [e["state"] for e in entries] != list(range(len(entries))):
            raise ValueError("strategy choices must cover states 0..n-1 exactly once")
        return cls(tuple(data["coalition"]), tuple(tuple(e["action"]) for e in entries))


def partial_to_dict(coalition: Coalition, sigma: PartialStrategy) -> dict:
    return {
        "coalition": list(coalition),
        "domain": sorted(sigma),
        "choices": [{"state": q, "action": list(sigma[q])} for q in sorted(sigma)],
    }


def load_profile(path) -> StrategyProfile:
    with open(path) as fh:
        return StrategyProfile.from_dict(json.load(fh))


# -- reachability and conflicts ---------------------------------------------


def reach(m: Model, coalition: Coalition, start: Iterable[int], sigma: PartialStrategy) -> frozenset[int]:
    """States reachable from ``start`` following ``sigma`` against all opponents.

    Steps are only taken from states in the domain of ``sigma``; successors
    outside it are included as frontier states.
    """
    table = m.coalition_moves(tuple(coalition))
    seen = set(start)
    stack = [q for q in seen if q in sigma]
    while stack:
        q = stack.pop()
        for nxt in table[q][sigma[q]]:
            if nxt not in seen:
                seen.add(nxt)
                if nxt in sigma:
                    stack.append(nxt)
    return frozenset(seen)


def conflicts(
    m: Model,
    agent: int,
    states: Iterable[int],
    sigma: PartialStrategy,
    coalition: Coalition | None = None,
) -> frozenset[Pair]:
    """Unordered pairs of ``states`` on which ``agent``'s component of ``sigma`` differs."""
    idx = (coalition or (agent,)).index(agent)
    groups: dict[int, list[int]] = {}
    for q in states:
        if q not in sigma:
            raise PreconditionError(f"state {q} is outside the strategy domain")
        groups.setdefault(sigma[q][idx], []).append(q)
    if len(groups) < 2:
        return frozenset()
    buckets = list(groups.values())
    out = set()
    for i, left in enumerate(buckets):
        for right in buckets[i + 1:]:
            for q in left:
                for r in right:
                    out.add(frozenset((q, r)))
    return frozenset(out)


def is_p_free(m: Model, sigma: PartialStrategy, prop: str) -> bool:
    return not (m.states_with(prop) & set(sigma))


def find_lasso(succ, start: Iterable[int], expand) -> tuple[int, ...] | None:
    """Iterative DFS; returns a lasso (path ending in a repeated state) or None."""
    WHITE, GREY, BLACK = 0, 1, 2
    colour: dict[int, int] = {}
    for root in start:
        if colour.get(root, WHITE) != WHITE:
            continue
        path = [root]
        colour[root] = GREY
        iters = [iter(sorted(succ(root)) if expand(root) else ())]
        while iters:
            advanced = False
            for nxt in iters[-1]:
                c = colour.get(nxt, WHITE)
                if c == GREY:
                    return tuple(path) + (nxt,)
                if c == WHITE:
                    colour[nxt] = GREY
                    path.append(nxt)
                    iters.append(iter(sorted(succ(nxt)) if expand(nxt) else ()))
                    advanced = True
                    break
            if not advanced:
                colour[path.pop()] = BLACK
                iters.pop()
    return None


def is_loopless(
    m: Model,
    coalition: Coalition,
    sigma: PartialStrategy,
    start: Iterable[int],
    treat_as_exit: Iterable[int] = (),
) -> bool:
    """True iff no cycle within dom(sigma) minus exits is reachable from ``start``."""
    table = m.coalition_moves(tuple(coalition))
    exits = frozenset(treat_as_exit)

    def expand(q):
        return q in sigma and q not in exits

    return find_lasso(lambda q: table[q][sigma[q]], sorted(set(start)), expand) is None


# -- whole-profile checks ------------------------------------------------------


class WinningCheck(NamedTuple):
    winning: bool
    counterexample: tuple[int, ...] | None = None


class UniformityCheck(NamedTuple):
    uniform: bool
    violations: list[tuple[int, int, int]]


def start_states(m: Model, goal: ReachabilityGoal, mode: str) -> list[int]:
    if mode in ("perfect", "perfect-info", "ir_perfect"):
        return [goal.initial_state]
    if mode in ("imperfect", "imperfect-info"):
        return sorted(initial_states(m, goal))
    raise ValueError(f"unknown verification mode {mode!r}")


def verify_winning(
    m: Model, goal: ReachabilityGoal, profile: StrategyProfile, mode: str = "imperfect"
) -> WinningCheck:
    """Decide whether every play from the start set reaches the target.

    ``mode="perfect"`` starts from the initial state only; ``"imperfect"``
    starts from every state some coalition member confuses with it.  A
    failure is witnessed by a lasso avoiding the target.
    """
    targets = m.states_with(goal.target)
    table = m.coalition_moves(profile.coalition)
    lasso = find_lasso(
        lambda q: table[q][profile.choices[q]],
        start_states(m, goal, mode),
        lambda q: q not in targets,
    )
    return WinningCheck(lasso is None, lasso)


def verify_uniform(
    m: Model, coalition: Coalition, profile: StrategyProfile, restrict_to: Iterable[int] | None = None
) -> UniformityCheck:
    """Check that indistinguishable states inside ``restrict_to`` get the same action."""
    scope = sorted(set(m.states if restrict_to is None else restrict_to))
    violations = []
    for a in coalition:
        idx = profile.coalition.index(a)
        by_class: dict[int, list[int]] = {}
        for q in scope:
            by_class.setdefault(m.class_index[a][q], []).append(q)
        for members in by_class.values():
            for i, q in enumerate(members):
                for r in members[i + 1:]:
                    if profile.choices[q][idx] != profile.choices[r][idx]:
                        violations.append((a, q, r))
    return UniformityCheck(not violations, violations)


def decision_strategy(m: Model, goal: ReachabilityGoal, profile: StrategyProfile) -> dict[int, JointAction]:
    """The profile with target states removed from its domain (targets end plays)."""
    return profile.as_partial(exclude=m.states_with(goal.target))


def strategy_reach(m: Model, goal: ReachabilityGoal, profile: StrategyProfile) -> frozenset[int]:
    """Reach(Q0, profile), plays stopping at the first target state."""
    return reach(m, profile.coalition, initial_states(m, goal), decision_strategy(m, goal, profile))


def decision_states(m: Model, goal: ReachabilityGoal, profile: StrategyProfile) -> frozenset[int]:
    """Non-target states visited by some play from Q0: the states whose choices matter."""
    return strategy_reach(m, goal, profile) - m.states_with(goal.target)


def broken_states(m: Model, goal: ReachabilityGoal, profile: StrategyProfile) -> frozenset[int]:
    """Decision states whose action disagrees with an indistinguishable decision state."""
    _, violations = verify_uniform(m, goal.coalition, profile, decision_states(m, goal, profile))
    out: set[int] = set()
    for _, q, r in violations:
        out.add(q)
        out.add(r)
    return frozenset(out)


def outcome_paths(m: Model, goal: ReachabilityGoal, profile: StrategyProfile) -> Iterator[tuple[int, ...]]:
    """Stream the plays of out^ir, each cut at the first target or repeated state."""
    targets = m.states_with(goal.target)
    table = m.coalition_moves(profile.coalition)
    for q0 in sorted(initial_states(m, goal)):
        stack = [(q0,)]
        while stack:
            play = stack.pop()
            last = play[-1]
            if last in targets or last in play[:-1]:
                yield play
                continue
            for nxt in sorted(table[last][profile.choices[last]], reverse=True):
                stack.append(play + (nxt,))


# -- partial strategy records ---------------------------------------------------


@dataclass(frozen=True)
class InfoSet:
    id: int
    members: frozenset[int]
    agent: int


@dataclass(frozen=True)
class PartialStrategyRecord:
    id: int
    agent: int
    states: frozenset[int]  # Q_id
    sigma: Mapping[int, JointAction]
    inputs: frozenset[int]  # In
    rdom: frozenset[int]
    conflicts: frozenset[Pair]
    out: frozenset[int]

    @property
    def reach(self) -> frozenset[int]:
        return self.rdom | self.out

    def key(self):
        return (self.id, tuple(sorted(self.sigma.items())), tuple(sorted(self.inputs)))

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "agent": self.agent,
            "states": sorted(self.states),
            "sigma": [{"state": q, "action": list(self.sigma[q])} for q in sorted(self.sigma)],
            "in": sorted(self.inputs),
            "rdom": sorted(self.rdom),
            "conflicts": sorted(sorted(p) for p in self.conflicts),
            "out": sorted(self.out),
        }


def make_record(
    m: Model,
    coalition: Coalition,
    info: InfoSet,
    sigma: Mapping[int, JointAction],
    inputs: Iterable[int],
) -> PartialStrategyRecord:
    """Build a record and derive RDom, Out and Conflicts from ``sigma`` and ``inputs``."""
    inputs = frozenset(inputs)
    reached = reach(m, coalition, inputs, sigma)
    rdom = reached & info.members
    return PartialStrategyRecord(
        id=info.id,
        agent=info.agent,
        states=info.members,
        sigma=dict(sigma),
        inputs=inputs,
        rdom=rdom,
        conflicts=conflicts(m, info.agent, rdom, sigma, coalition),
        out=reached - info.members,
    )


def with_sigma(m: Model, coalition: Coalition, rec: PartialStrategyRecord, sigma=None, inputs=None):
    info = InfoSet(rec.id, rec.states, rec.agent)
    return make_record(
        m,
        coalition,
        info,
        rec.sigma if sigma is None else sigma,
        rec.inputs if inputs is None else inputs,
    )


def input_states(
    m: Model,
    goal: ReachabilityGoal,
    profile: StrategyProfile,
    blocks: list[frozenset[int]],
) -> list[frozenset[int]]:
    """Entry states of each block: Q0 members plus one-step entries from outside.

    Equivalent to ``Q_j & Reach(Reach(Q0, s) - Q_j, s - sigma_j)`` joined with
    ``Q0 & Q_j``, computed for all blocks in a single pass.
    """
    q0 = initial_states(m, goal)
    targets = m.states_with(goal.target)
    owner: dict[int, int] = {}
    for j, block in enumerate(blocks):
        for q in block:
            owner[q] = j
    result = [set(q0 & block) for block in blocks]
    table = m.coalition_moves(profile.coalition)
    for q in strategy_reach(m, goal, profile):
        if q in targets:
            continue
        here = owner.get(q)
        for nxt in table[q][profile.choices[q]]:
            j = owner.get(nxt)
            if j is not None and j != here:
                result[j].add(nxt)
    return [frozenset(s) for s in result]
