"""Outcome- and uniformity-dominance between partial strategies on one info set.

Both criteria compare subsets, so each is a preorder and two strategies may
be incomparable.  Incomparable pairs never dominate one another.
"""

from __future__ import annotations

import enum
import itertools
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping

from .model import Coalition, JointAction, Model, PreconditionError
from .strategy import PartialStrategy, PartialStrategyRecord, conflicts, is_loopless, reach


class Criterion(enum.Enum):
    OUTCOME = "outcome"
    UNIFORMITY = "uniformity"


UNIFORM_FIRST = (Criterion.UNIFORMITY, Criterion.OUTCOME)
OUTCOME_FIRST = (Criterion.OUTCOME, Criterion.UNIFORMITY)


@dataclass(frozen=True)
class DominanceVerdict:
    comparable: bool
    dominates: bool  # sigma1 <= sigma2
    strictly: bool  # sigma1 < sigma2


@dataclass(frozen=True)
class Scores:
    """The two sets the criteria compare: Reach(In, s) and Conflicts(RDom(In, s), s)."""

    reach: frozenset[int]
    conflicts: frozenset

    def of(self, criterion: Criterion):
        return self.reach if criterion is Criterion.OUTCOME else self.conflicts


def score(m: Model, agent: int, inputs, sigma: PartialStrategy, coalition: Coalition | None = None) -> Scores:
    coalition = coalition or (agent,)
    reached = reach(m, coalition, inputs, sigma)
    rdom = frozenset(q for q in reached if q in sigma)
    return Scores(reached, conflicts(m, agent, rdom, sigma, coalition))


def _verdict(first: frozenset, second: frozenset) -> DominanceVerdict:
    # sigma1 <= sigma2 iff second's set is contained in first's set
    forward = second <= first
    backward = first <= second
    return DominanceVerdict(forward or backward, forward, forward and not backward)


def compare(
    m: Model,
    agent: int,
    inputs,
    sigma1: PartialStrategy,
    sigma2: PartialStrategy,
    criterion: Criterion,
    coalition: Coalition | None = None,
) -> DominanceVerdict:
    inputs = frozenset(inputs)
    if not (inputs <= set(sigma1) and inputs <= set(sigma2)):
        raise PreconditionError("input states must lie in the domain of both strategies")
    s1 = score(m, agent, inputs, sigma1, coalition)
    s2 = score(m, agent, inputs, sigma2, coalition)
    return _verdict(s1.of(criterion), s2.of(criterion))


def _dominates(base: Scores, cand: Scores, primary: Criterion, secondary: Criterion) -> bool:
    p_base, p_cand = base.of(primary), cand.of(primary)
    return p_cand < p_base and cand.of(secondary) <= base.of(secondary)


def dominated_by(
    m: Model,
    agent: int,
    inputs,
    sigma1: PartialStrategy,
    sigma2: PartialStrategy,
    primary: Criterion,
    secondary: Criterion,
    coalition: Coalition | None = None,
) -> bool:
    """True iff sigma2 strictly improves on ``primary`` without losing on ``secondary``."""
    p = compare(m, agent, inputs, sigma1, sigma2, primary, coalition)
    s = compare(m, agent, inputs, sigma1, sigma2, secondary, coalition)
    return p.strictly and s.dominates


@dataclass(frozen=True)
class SearchResult:
    sigma: dict[int, JointAction]
    scores: Scores
    exhaustive: bool
    evaluated: int


def candidate_count(m: Model, rec: PartialStrategyRecord) -> int:
    n = 1
    for q in _free_states(rec):
        n *= len(m.protocol[rec.agent][q])
    return n


def _free_states(rec: PartialStrategyRecord) -> list[int]:
    return sorted((rec.rdom | rec.inputs) & set(rec.sigma))


def _assign(sigma, states, actions, idx) -> dict[int, JointAction]:
    new = dict(sigma)
    for q, act in zip(states, actions):
        ca = new[q]
        new[q] = ca[:idx] + (act,) + ca[idx + 1:]
    return new


def find_best_dominating(
    m: Model,
    agent: int,
    rec: PartialStrategyRecord,
    primary: Criterion,
    secondary: Criterion,
    budget: int,
    targets: Iterable[int],
    *,
    coalition: Coalition | None = None,
    exhaustive_threshold: int = 4096,
    accept: Callable[[dict[int, JointAction]], bool] | None = None,
    deadline: float | None = None,
) -> SearchResult | None:
    """Search the record's info set for a best (primary, secondary)-dominating strategy.

    Candidates reassign the agent's action on RDom and In, keeping the other
    domain states and teammates' components.  Small spaces are enumerated in
    full; larger ones are explored by hill climbing.  A candidate must be
    loopless from In (targets count as exits) and pass ``accept`` if given.
    Among best candidates the one with the smallest primary set wins, then
    the earliest in enumeration order.
    """
    coalition = coalition or (agent,)
    idx = coalition.index(agent)
    targets = frozenset(targets)
    free = _free_states(rec)
    if not free:
        return None
    base = score(m, agent, rec.inputs, rec.sigma, coalition)
    choices = [m.protocol[agent][q] for q in free]
    total = 1
    for c in choices:
        total *= len(c)

    def evaluate(cand):
        return score(m, agent, rec.inputs, cand, coalition)

    def safe(cand):
        if not is_loopless(m, coalition, cand, rec.inputs, targets):
            return False
        return accept is None or accept(cand)

    def expired():
        return deadline is not None and time.monotonic() >= deadline

    if total <= exhaustive_threshold:
        found = []
        evaluated = 0
        for order, actions in enumerate(itertools.product(*choices)):
            if evaluated >= budget or expired():
                break
            evaluated += 1
            cand = _assign(rec.sigma, free, actions, idx)
            sc = evaluate(cand)
            if _dominates(base, sc, primary, secondary):
                found.append((len(sc.of(primary)), order, cand, sc))
        found.sort(key=lambda t: (t[0], t[1]))
        for _, _, cand, sc in found:
            if safe(cand):
                return SearchResult(cand, sc, evaluated == total, evaluated)
        return None

    # hill climbing: each accepted move dominates the previous, hence the original
    current, cur_scores = dict(rec.sigma), base
    evaluated = 0
    moved = False
    while evaluated < budget and not expired():
        found = []
        for order, cand in enumerate(_neighbours(m, agent, current, free, idx)):
            if evaluated >= budget or expired():
                break
            evaluated += 1
            sc = evaluate(cand)
            if _dominates(cur_scores, sc, primary, secondary):
                found.append((len(sc.of(primary)), order, cand, sc))
        found.sort(key=lambda t: (t[0], t[1]))
        step = next(((cand, sc) for _, _, cand, sc in found if safe(cand)), None)
        if step is None:
            break
        current, cur_scores = step
        moved = True
    if not moved:
        return None
    return SearchResult(current, cur_scores, False, evaluated)


def _neighbours(m: Model, agent: int, sigma, free: list[int], idx: int) -> Iterator[dict[int, JointAction]]:
    """Single-state changes in (state, action) order, then whole-set collapses."""
    for q in free:
        for act in m.protocol[agent][q]:
            if act != sigma[q][idx]:
                yield _assign(sigma, [q], [act], idx)
    common = set(m.protocol[agent][free[0]])
    for q in free[1:]:
        common &= set(m.protocol[agent][q])
    for act in sorted(common):
        if any(sigma[q][idx] != act for q in free):
            yield _assign(sigma, free, [act] * len(free), idx)
