"""Model builders and independent oracles shared by the test modules.

The oracles deliberately avoid the package's own graph routines: winning is
decided by bounded set iteration instead of lasso search, reachability by
explicit path enumeration, conflicts by quadratic scans.
"""

from __future__ import annotations

import itertools

from pgsynth.model import Model, ReachabilityGoal


def game(table, classes=None, win=(), n_actions=None, extra_props=None):
    """Agent 0 against an environment (agent 1).

    ``table[q][a]`` lists the states the environment may send the agent to
    when it plays ``a`` at ``q``.  ``classes`` partitions the states for the
    agent (identity by default).  Environment actions are numbered after the
    agent's.
    """
    n = len(table)
    n_actions = n_actions or 1 + max(a for row in table for a in row)
    width = max(len(t) for row in table for t in row.values())
    protocol_agent, protocol_env, transitions = [], [], {}
    for q, row in enumerate(table):
        protocol_agent.append(tuple(sorted(row)))
        env = tuple(n_actions + j for j in range(width))
        protocol_env.append(env)
        for a, targets in row.items():
            for j, e in enumerate(env):
                transitions[(q, (a, e))] = targets[j % len(targets)]
    classes = classes or [[q] for q in range(n)]
    valuation = {"win": frozenset(win)}
    valuation.update({k: frozenset(v) for k, v in (extra_props or {}).items()})
    return Model(
        n_agents=2,
        n_states=n,
        protocol=(tuple(protocol_agent), tuple(protocol_env)),
        transitions=transitions,
        epistemic=(tuple(frozenset(c) for c in classes), tuple(frozenset([q]) for q in range(n))),
        valuation=valuation,
    )


def goal(initial=0, target="win", coalition=(0,)):
    return ReachabilityGoal(tuple(coalition), target, initial)


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------


_INDEX: dict[tuple[int, tuple], tuple[Model, dict]] = {}


def step_set(m: Model, coalition, q, ca) -> set[int]:
    """All successors of ``q`` when the coalition plays ``ca``, from one scan of the transition table."""
    key = (id(m), tuple(coalition))
    if key not in _INDEX or _INDEX[key][0] is not m:
        if len(_INDEX) > 64:
            _INDEX.clear()
        table: dict = {}
        for (src, joint), dst in m.transitions.items():
            table.setdefault((src, tuple(joint[a] for a in coalition)), set()).add(dst)
        _INDEX[key] = (m, table)
    return set(_INDEX[key][1].get((q, tuple(ca)), ()))


def wins_by_iteration(m: Model, coalition, starts, choice, targets) -> bool:
    """Every play from ``starts`` under ``choice`` hits ``targets`` within n steps.

    A play that avoids the targets for n steps must repeat a state, and with
    a memoryless strategy it can then loop forever, so this is exact.
    """
    frontier = set(starts) - set(targets)
    for _ in range(m.n_states):
        if not frontier:
            return True
        frontier = {s for q in frontier for s in step_set(m, coalition, q, choice(q))} - set(targets)
    return not frontier


def coalition_options(m: Model, coalition, q):
    return list(itertools.product(*(m.protocol[a][q] for a in coalition)))


def exists_profile(m: Model, g: ReachabilityGoal, uniform: bool) -> bool:
    """Exhaustive memoryless-profile search, assigning lazily in order of need.

    With ``uniform`` the unit of assignment is the epistemic class of each
    coalition agent and plays start from every state of Q0; otherwise each
    state is assigned separately and plays start from the initial state.
    """
    coalition = g.coalition
    targets = m.valuation[g.target]
    if uniform:
        starts = set()
        for a in coalition:
            starts |= next(c for c in m.epistemic[a] if g.initial_state in c)
    else:
        starts = {g.initial_state}

    def unit(a, q):
        if uniform:
            return (a, next(i for i, c in enumerate(m.epistemic[a]) if q in c))
        return (a, q)

    units = {(a, q): unit(a, q) for a in coalition for q in m.states}
    assigned: dict = {}

    # states with no path at all to a target; an action that may lead there is useless
    alive = set(targets)
    grew = True
    while grew:
        grew = False
        for (src, _), dst in m.transitions.items():
            if dst in alive and src not in alive:
                alive.add(src)
                grew = True

    def useful(q, a, act):
        if q in targets:
            return True
        k = coalition.index(a)
        return any(
            ca[k] == act and step_set(m, coalition, q, ca) <= alive
            for ca in coalition_options(m, coalition, q)
        )

    def choice(q):
        return tuple(assigned[units[(a, q)]] for a in coalition)

    def open_state():
        seen, todo = set(starts), sorted(starts)
        while todo:
            q = todo.pop(0)
            if q in targets:
                continue
            if any(units[(a, q)] not in assigned for a in coalition):
                return q
            for s in sorted(step_set(m, coalition, q, choice(q))):
                if s not in seen:
                    seen.add(s)
                    todo.append(s)
        return None

    def assigned_part_loops():
        """A target-free cycle through assigned states, found by colouring DFS."""
        colour: dict[int, int] = {}

        def visit(q):
            if q in targets or any(units[(a, q)] not in assigned for a in coalition):
                return False
            colour[q] = 1
            for s in step_set(m, coalition, q, choice(q)):
                if colour.get(s) == 1 or (s not in colour and visit(s)):
                    return True
            colour[q] = 2
            return False

        return any(q not in colour and visit(q) for q in starts)

    def search():
        if assigned_part_loops():
            return False
        q = open_state()
        if q is None:
            return wins_by_iteration(m, coalition, starts, choice, targets)
        a = next(a for a in coalition if units[(a, q)] not in assigned)
        key = units[(a, q)]
        for act in m.protocol[a][q]:
            if not uniform and not useful(q, a, act):
                continue
            assigned[key] = act
            if search():
                return True
            del assigned[key]
        return False

    return search()


def reach_by_paths(m: Model, coalition, start, sigma) -> set[int]:
    """States on some path from ``start`` that only steps from domain states."""
    found = set(start)
    paths = [(q,) for q in start]
    for _ in range(m.n_states):
        longer = []
        for p in paths:
            q = p[-1]
            if q not in sigma:
                continue
            for s in step_set(m, coalition, q, sigma[q]):
                if s not in p:
                    longer.append(p + (s,))
                found.add(s)
        paths = longer
    return found


def conflict_pairs(states, sigma) -> set[frozenset]:
    states = sorted(states)
    return {
        frozenset((q, r))
        for i, q in enumerate(states)
        for r in states[i + 1:]
        if sigma[q] != sigma[r]
    }


def broken_by_scan(m: Model, coalition, reached, profile) -> set[int]:
    out = set()
    for a in coalition:
        k = coalition.index(a)
        for q in reached:
            for r in reached:
                if q != r and any(q in c and r in c for c in m.epistemic[a]):
                    if profile.choices[q][k] != profile.choices[r][k]:
                        out.add(q)
    return out
