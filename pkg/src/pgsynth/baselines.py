"""Reference procedures: an exact uniform-strategy search and a bound pair.

These are deliberately simple stand-ins for heavier published methods; they
serve as ground truth on small models and as a conclusiveness baseline.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .model import Model, ReachabilityGoal, initial_states
from .strategy import StrategyProfile, find_lasso, verify_uniform, verify_winning
from .synthesis import solve_region


@dataclass
class BaselineVerdict:
    method: str  # brute | lower_approx | upper_approx
    answer: str  # true | false | inconclusive
    witness: StrategyProfile | None = None
    elapsed: float = 0.0
    timed_out: bool = False
    explored: int = 0

    def to_dict(self, timing: bool = True) -> dict:
        return {
            "method": self.method,
            "answer": self.answer,
            "witness": self.witness.to_dict() if self.witness else None,
            "elapsed": self.elapsed if timing else 0.0,
            "timed_out": self.timed_out,
            "explored": self.explored,
        }


class _Timeout(Exception):
    pass


def brute_force_uniform(
    m: Model, goal: ReachabilityGoal, deadline: float | None = None, node_budget: int | None = None
) -> BaselineVerdict:
    """Exact search over uniform memoryless coalition strategies.

    Classes are assigned lazily, in the order in which plays from Q0 first
    reach an unassigned decision, actions ascending.  A branch is cut as
    soon as its assigned part already contains a target-free cycle, which no
    extension can remove.  Unassigned classes in a witness take their first
    legal action.  ``deadline`` is an absolute ``time.monotonic`` value;
    ``node_budget`` caps the number of search nodes, which unlike a deadline
    gives the same verdict on every run.
    """
    started = time.monotonic()
    coalition = goal.coalition
    targets = m.states_with(goal.target)
    starts = sorted(initial_states(m, goal))
    moves = m.coalition_moves(coalition)
    assigned: dict[tuple[int, int], int] = {}
    explored = 0

    def action_at(q):
        acts = []
        for a in coalition:
            act = assigned.get((a, m.class_index[a][q]))
            if act is None:
                return None
            acts.append(act)
        return tuple(acts)

    def examine():
        """Classify the current partial assignment.

        Returns ``"lose"`` if its assigned part already holds a target-free
        cycle reachable from Q0, ``"win"`` if no reachable decision is left
        open, and otherwise ``"open"`` with the first open (agent, class, state).
        """
        pending = None

        def succ(q):
            nonlocal pending
            ca = action_at(q)
            if ca is None:
                if pending is None:
                    a = next(a for a in coalition if (a, m.class_index[a][q]) not in assigned)
                    pending = (a, m.class_index[a][q], q)
                return ()
            return moves[q][ca]

        if find_lasso(succ, starts, lambda q: q not in targets) is not None:
            return "lose", None
        return ("open", pending) if pending else ("win", None)

    def search():
        nonlocal explored
        if deadline is not None and time.monotonic() >= deadline:
            raise _Timeout
        if node_budget is not None and explored >= node_budget:
            raise _Timeout
        explored += 1
        status, pending = examine()
        if status == "lose":
            return False
        if status == "win":
            return True
        a, c, q = pending
        for act in m.protocol[a][q]:
            assigned[(a, c)] = act
            if search():
                return True
            del assigned[(a, c)]
        return False

    try:
        found = search()
    except _Timeout:
        return BaselineVerdict("brute", "inconclusive", None, time.monotonic() - started, True, explored)
    witness = None
    if found:
        choices = []
        for q in m.states:
            choices.append(
                tuple(assigned.get((a, m.class_index[a][q]), m.protocol[a][q][0]) for a in coalition)
            )
        witness = StrategyProfile(coalition, tuple(choices))
        assert verify_winning(m, goal, witness, "imperfect").winning
        assert verify_uniform(m, coalition, witness).uniform
    return BaselineVerdict("brute", "true" if found else "false", witness, time.monotonic() - started, False, explored)


def uniform_components(m: Model, coalition) -> list[frozenset[int]]:
    """Blocks on which a coalition strategy must be constant to be uniform for everyone.

    For one agent these are its classes; for larger coalitions the connected
    components of the union of the members' indistinguishability relations.
    """
    parent = list(m.states)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a in coalition:
        for cls in m.epistemic[a]:
            members = sorted(cls)
            for q in members[1:]:
                ra, rb = find(members[0]), find(q)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    blocks: dict[int, set[int]] = {}
    for q in m.states:
        blocks.setdefault(find(q), set()).add(q)
    return [frozenset(b) for _, b in sorted(blocks.items())]


def lower_approx(m: Model, goal: ReachabilityGoal) -> BaselineVerdict:
    """Sound under-approximation: a uniform attractor over whole blocks."""
    started = time.monotonic()
    coalition = goal.coalition
    targets = m.states_with(goal.target)
    moves = m.coalition_moves(coalition)
    won = set(targets)
    chosen: dict[frozenset[int], tuple] = {}
    blocks = uniform_components(m, coalition)
    changed = True
    while changed:
        changed = False
        layer = {}
        for block in blocks:
            if block in chosen:
                continue
            pending = sorted(block - targets)
            if not pending:
                continue
            common = None
            for q in block:
                acts = set(m.coalition_actions(coalition, q))
                common = acts if common is None else common & acts
            for ca in sorted(common):
                if all(moves[q][ca] <= won for q in pending):
                    layer[block] = ca
                    break
        for block, ca in layer.items():
            chosen[block] = ca
            won |= block
            changed = True
    q0 = initial_states(m, goal)
    ok = q0 <= won
    witness = None
    if ok:
        choices = [None] * m.n_states
        for block in blocks:
            ca = chosen.get(block)
            if ca is None:
                common = None
                for q in block:
                    acts = set(m.coalition_actions(coalition, q))
                    common = acts if common is None else common & acts
                ca = min(common) if common else None
            for q in block:
                choices[q] = ca if ca is not None else m.coalition_actions(coalition, q)[0]
        witness = StrategyProfile(coalition, tuple(choices))
    return BaselineVerdict("lower_approx", "true" if ok else "false", witness, time.monotonic() - started)


def upper_approx(m: Model, goal: ReachabilityGoal) -> BaselineVerdict:
    """Complete over-approximation: perfect-information attractor on all of Q0."""
    started = time.monotonic()
    rank, _ = solve_region(m, goal.coalition, m.states_with(goal.target))
    ok = initial_states(m, goal) <= set(rank)
    return BaselineVerdict("upper_approx", "true" if ok else "false", None, time.monotonic() - started)


def approx_bounds(m: Model, goal: ReachabilityGoal) -> tuple[BaselineVerdict, BaselineVerdict]:
    return lower_approx(m, goal), upper_approx(m, goal)


def conclusive(lower: BaselineVerdict, upper: BaselineVerdict) -> bool:
    return lower.answer == "true" or upper.answer == "false"
