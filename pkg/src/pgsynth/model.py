"""Explicit imperfect-information concurrent game structures.

States, agents and actions are dense integer ids.  A model is immutable once
built; derived lookup tables (legal joint moves, class membership, coalition
projections) are computed lazily and cached on the instance.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

JointAction = tuple[int, ...]
Coalition = tuple[int, ...]


class PreconditionError(ValueError):
    """Raised when an operation is called outside its documented domain."""


class ModelError(ValueError):
    """Raised when a model file is malformed or fails validation."""


@dataclass(frozen=True, eq=False)
class Model:
    n_agents: int
    n_states: int
    # protocol[agent][state] -> ordered tuple of legal action ids
    protocol: tuple[tuple[tuple[int, ...], ...], ...]
    transitions: Mapping[tuple[int, JointAction], int]
    # epistemic[agent] -> partition of the state set
    epistemic: tuple[tuple[frozenset[int], ...], ...]
    valuation: Mapping[str, frozenset[int]] = field(default_factory=dict)
    action_names: tuple[str, ...] | None = None

    @property
    def propositions(self) -> tuple[str, ...]:
        return tuple(self.valuation)

    @property
    def states(self) -> range:
        return range(self.n_states)

    @property
    def agents(self) -> range:
        return range(self.n_agents)

    def legal_joint_actions(self, q: int) -> Iterable[JointAction]:
        return itertools.product(*(self.protocol[a][q] for a in self.agents))

    @cached_property
    def moves(self) -> tuple[tuple[tuple[JointAction, int], ...], ...]:
        """Per state, the enumerated legal joint actions with their successor."""
        table = []
        for q in self.states:
            row = []
            for joint in self.legal_joint_actions(q):
                target = self.transitions.get((q, joint))
                if target is not None:
                    row.append((joint, target))
            table.append(tuple(row))
        return tuple(table)

    @cached_property
    def class_index(self) -> tuple[tuple[int, ...], ...]:
        """class_index[agent][state] -> index of the state's class in epistemic[agent]."""
        result = []
        for a in self.agents:
            idx = [-1] * self.n_states
            for c, members in enumerate(self.epistemic[a]):
                for q in members:
                    if 0 <= q < self.n_states:
                        idx[q] = c
            result.append(tuple(idx))
        return tuple(result)

    @cached_property
    def _coalition_cache(self) -> dict:
        return {}

    def coalition_moves(self, coalition: Coalition) -> tuple[dict[JointAction, frozenset[int]], ...]:
        """For each state, map each legal coalition action to its successor set.

        The successor set ranges over every completion by the agents outside
        the coalition.  Coalition actions are tuples aligned with ``coalition``.
        """
        coalition = tuple(coalition)
        cached = self._coalition_cache.get(coalition)
        if cached is not None:
            return cached
        table = []
        for q in self.states:
            acc: dict[JointAction, set[int]] = {}
            for joint, target in self.moves[q]:
                key = tuple(joint[a] for a in coalition)
                acc.setdefault(key, set()).add(target)
            table.append({k: frozenset(v) for k, v in acc.items()})
        cached = tuple(table)
        self._coalition_cache[coalition] = cached
        return cached

    def coalition_actions(self, coalition: Coalition, q: int) -> list[JointAction]:
        """Legal coalition actions at ``q`` in lexicographic order."""
        return list(itertools.product(*(self.protocol[a][q] for a in coalition)))

    def states_with(self, prop: str) -> frozenset[int]:
        try:
            return self.valuation[prop]
        except KeyError:
            raise PreconditionError(f"unknown proposition {prop!r}") from None


@dataclass(frozen=True)
class ReachabilityGoal:
    """Goal <<coalition>> F target, evaluated at ``initial_state``."""

    coalition: Coalition
    target: str
    initial_state: int

    def __post_init__(self):
        object.__setattr__(self, "coalition", tuple(sorted(set(self.coalition))))
        if not self.coalition:
            raise PreconditionError("coalition must be nonempty")

    def check(self, m: Model) -> None:
        if self.target not in m.valuation:
            raise PreconditionError(f"target {self.target!r} is not a proposition of the model")
        if not 0 <= self.initial_state < m.n_states:
            raise PreconditionError(f"initial state {self.initial_state} out of range")
        for a in self.coalition:
            if not 0 <= a < m.n_agents:
                raise PreconditionError(f"coalition agent {a} out of range")


def validate_model(m: Model) -> list[str]:
    """Return a list of human-readable invariant violations (empty if legal)."""
    problems: list[str] = []
    if m.n_agents < 1:
        problems.append("model has no agents")
    if m.n_states < 1:
        problems.append("model has no states")
    if problems:
        return problems

    if len(m.protocol) != m.n_agents:
        problems.append(f"protocol lists {len(m.protocol)} agents, expected {m.n_agents}")
        return problems
    for a in m.agents:
        if len(m.protocol[a]) != m.n_states:
            problems.append(f"protocol of agent {a} lists {len(m.protocol[a])} states, expected {m.n_states}")
            return problems
        for q in m.states:
            acts = m.protocol[a][q]
            if not acts:
                problems.append(f"empty protocol for agent {a} at state {q}")
            elif len(set(acts)) != len(acts):
                problems.append(f"duplicate actions in protocol of agent {a} at state {q}")
            elif any(not isinstance(x, int) or x < 0 for x in acts):
                problems.append(f"invalid action id in protocol of agent {a} at state {q}")

    for (q, joint), target in m.transitions.items():
        if not 0 <= q < m.n_states:
            problems.append(f"transition from unknown state {q}")
            continue
        if len(joint) != m.n_agents or any(joint[a] not in m.protocol[a][q] for a in m.agents):
            problems.append(f"transition at state {q} uses illegal joint action {list(joint)}")
        if not 0 <= target < m.n_states:
            problems.append(f"transition at state {q} on {list(joint)} leads to unknown state {target}")
    for q in m.states:
        for joint in m.legal_joint_actions(q):
            if (q, joint) not in m.transitions:
                problems.append(f"missing transition at state {q} for joint action {list(joint)}")

    if len(m.epistemic) != m.n_agents:
        problems.append(f"epistemic lists {len(m.epistemic)} agents, expected {m.n_agents}")
        return problems
    for a in m.agents:
        seen: dict[int, int] = {}
        for c, members in enumerate(m.epistemic[a]):
            if not members:
                problems.append(f"empty epistemic class {c} for agent {a}")
            for q in members:
                if not 0 <= q < m.n_states:
                    problems.append(f"epistemic class {c} of agent {a} names unknown state {q}")
                elif q in seen:
                    problems.append(f"state {q} lies in classes {seen[q]} and {c} of agent {a}")
                else:
                    seen[q] = c
        missing = [q for q in m.states if q not in seen]
        if missing:
            problems.append(f"states {missing} are in no epistemic class of agent {a}")
        for c, members in enumerate(m.epistemic[a]):
            ordered = sorted(q for q in members if 0 <= q < m.n_states)
            for q in ordered[1:]:
                if set(m.protocol[a][q]) != set(m.protocol[a][ordered[0]]):
                    problems.append(
                        f"uniformity violated for agent {a}: states {ordered[0]} and {q} "
                        f"are indistinguishable but have different protocols"
                    )

    for prop, members in m.valuation.items():
        bad = sorted(q for q in members if not 0 <= q < m.n_states)
        if bad:
            problems.append(f"proposition {prop!r} holds in unknown states {bad}")
    return problems


def successors(m: Model, q: int, fixed: Mapping[int, int]) -> frozenset[int]:
    """One-step image of ``q`` when the agents in ``fixed`` play the given actions.

    Every completion by the remaining agents is considered.
    """
    for a, act in fixed.items():
        if act not in m.protocol[a][q]:
            raise PreconditionError(f"action {act} is not legal for agent {a} at state {q}")
    return frozenset(
        target for joint, target in m.moves[q] if all(joint[a] == act for a, act in fixed.items())
    )


def epistemic_class(m: Model, a: int, q: int) -> frozenset[int]:
    return m.epistemic[a][m.class_index[a][q]]


def initial_states(m: Model, goal: ReachabilityGoal) -> frozenset[int]:
    """Union of the coalition members' classes at the initial state."""
    out: set[int] = set()
    for a in goal.coalition:
        out |= epistemic_class(m, a, goal.initial_state)
    return frozenset(out)


# -- JSON --------------------------------------------------------------------

_REQUIRED = ("agents", "states", "propositions", "valuation", "protocol", "transitions", "epistemic")
_OPTIONAL = ("action_names",)


def model_from_dict(data: Mapping, *, validate: bool = True) -> Model:
    unknown = set(data) - set(_REQUIRED) - set(_OPTIONAL)
    if unknown:
        raise ModelError(f"unknown model fields: {sorted(unknown)}")
    missing = [k for k in _REQUIRED if k not in data]
    if missing:
        raise ModelError(f"missing model fields: {missing}")
    props = list(data["propositions"])
    if set(props) != set(data["valuation"]):
        raise ModelError("propositions and valuation keys differ")
    transitions: dict[tuple[int, JointAction], int] = {}
    for t in data["transitions"]:
        if set(t) != {"from", "actions", "to"}:
            raise ModelError(f"malformed transition entry {t}")
        key = (int(t["from"]), tuple(int(x) for x in t["actions"]))
        if key in transitions:
            raise ModelError(f"duplicate transition for state {key[0]} on {list(key[1])}")
        transitions[key] = int(t["to"])
    names = data.get("action_names")
    m = Model(
        n_agents=int(data["agents"]),
        n_states=int(data["states"]),
        protocol=tuple(tuple(tuple(int(x) for x in acts) for acts in per) for per in data["protocol"]),
        transitions=transitions,
        epistemic=tuple(tuple(frozenset(int(q) for q in c) for c in per) for per in data["epistemic"]),
        valuation={p: frozenset(int(q) for q in data["valuation"][p]) for p in props},
        action_names=tuple(names) if names is not None else None,
    )
    if validate:
        problems = validate_model(m)
        if problems:
            raise ModelError("invalid model: " + "; ".join(problems[:10]))
    return m


def model_to_dict(m: Model) -> dict:
    data = {
        "agents": m.n_agents,
        "states": m.n_states,
        "propositions": list(m.valuation),
        "valuation": {p: sorted(m.valuation[p]) for p in m.valuation},
        "protocol": [[list(acts) for acts in per] for per in m.protocol],
        "transitions": [
            {"from": q, "actions": list(joint), "to": t}
            for (q, joint), t in sorted(m.transitions.items())
        ],
        "epistemic": [sorted(sorted(c) for c in per) for per in m.epistemic],
    }
    if m.action_names is not None:
        data["action_names"] = list(m.action_names)
    return data


def dumps_model(m: Model) -> str:
    return json.dumps(model_to_dict(m), separators=(",", ":"))


def load_model(path: str | Path) -> Model:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def save_model(m: Model, path: str | Path) -> None:
    Path(path).write_text(dumps_model(m))
