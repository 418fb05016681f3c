import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import exists_profile, game, goal, wins_by_iteration
from pgsynth.baselines import (
    approx_bounds,
    brute_force_uniform,
    conclusive,
    lower_approx,
    upper_approx,
    uniform_components,
)
from pgsynth.benchgen import RandomModelSpec, gen_random
from pgsynth.model import Model
from test_synthesis import two_classes


def split_class():
    # 0 and 1 look alike; 0 needs action 0, 1 needs action 1; 3 is a trap
    table = [{0: [2], 1: [3]}, {0: [3], 1: [2]}, {0: [2], 1: [2]}, {0: [3], 1: [3]}]
    return game(table, classes=[[0, 1], [2], [3]], win=[2])


def identity(m):
    return Model(m.n_agents, m.n_states, m.protocol, m.transitions,
                 tuple(tuple(frozenset([q]) for q in m.states) for _ in m.agents), m.valuation)


def assert_uniform_winner(m, g, profile):
    starts = set().union(*(c for a in g.coalition for c in m.epistemic[a] if g.initial_state in c))
    assert wins_by_iteration(m, g.coalition, starts, profile.choices.__getitem__, m.valuation[g.target])
    for a in g.coalition:
        k = g.coalition.index(a)
        for c in m.epistemic[a]:
            assert len({profile.choices[q][k] for q in c}) == 1


def test_class_needing_two_actions_is_false():
    m = split_class()
    v = brute_force_uniform(m, goal())
    assert v.answer == "false" and v.witness is None
    lower, upper = approx_bounds(m, goal())
    assert lower.answer == "false" and upper.answer == "true"
    assert not conclusive(lower, upper)


def test_brute_witness_on_hand_model():
    m = two_classes()
    v = brute_force_uniform(m, goal())
    assert v.answer == "true"
    assert_uniform_winner(m, goal(), v.witness)
    assert v.witness.choices[1] == v.witness.choices[2] == (0,)


@pytest.mark.parametrize("seed", range(10))
def test_identity_partitions_reduce_to_perfect_information(seed):
    m, g = gen_random(RandomModelSpec(12, seed=seed, n_actions=3))
    m = identity(m)
    assert (brute_force_uniform(m, g).answer == "true") == exists_profile(m, g, uniform=False)


@pytest.mark.parametrize("seed", range(60))
def test_brute_agrees_with_exhaustive_search(seed):
    m, g = gen_random(RandomModelSpec(8 + seed % 5, seed=seed, n_actions=3))
    v = brute_force_uniform(m, g)
    assert v.answer == ("true" if exists_profile(m, g, uniform=True) else "false")
    if v.witness is not None:
        assert_uniform_winner(m, g, v.witness)


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 12), mode=st.sampled_from(["logarithmic", "linear"]))
def test_bounds_sandwich_the_exact_answer(seed, n, mode):
    m, g = gen_random(RandomModelSpec(n, mode, seed, n_actions=3))
    lower, upper = approx_bounds(m, g)
    exact = brute_force_uniform(m, g).answer == "true"
    if lower.answer == "true":
        assert exact
        assert_uniform_winner(m, g, lower.witness)
    if exact:
        assert upper.answer == "true"


def test_node_budget_gives_inconclusive():
    m = split_class()
    v = brute_force_uniform(m, goal(), node_budget=1)
    assert v.answer == "inconclusive" and v.timed_out and v.explored == 1
    assert brute_force_uniform(m, goal(), deadline=time.monotonic() - 1).answer == "inconclusive"
    assert brute_force_uniform(m, goal(), node_budget=100).answer == "false"


def test_coalition_components_join_member_classes():
    m = Model(
        2, 4, (((0,),) * 4, ((0,),) * 4),
        {(q, (0, 0)): q for q in range(4)},
        ((frozenset([0, 1]), frozenset([2]), frozenset([3])),
         (frozenset([0]), frozenset([1, 2]), frozenset([3]))),
        {"win": frozenset()},
    )
    assert uniform_components(m, (0,)) == [{0, 1}, {2}, {3}]
    assert uniform_components(m, (0, 1)) == [{0, 1, 2}, {3}]


def test_upper_bound_false_when_perfect_information_loses():
    m = game([{0: [1, 2]}, {0: [1]}, {0: [2]}], win=[1])
    assert upper_approx(m, goal()).answer == "false"
    assert lower_approx(m, goal()).answer == "false"
    assert brute_force_uniform(m, goal()).answer == "false"


def test_verdict_json_without_timing():
    v = brute_force_uniform(two_classes(), goal())
    d = v.to_dict(timing=False)
    assert d["elapsed"] == 0.0 and d["answer"] == "true" and d["witness"]["coalition"] == [0]
