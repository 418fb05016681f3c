import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import broken_by_scan, conflict_pairs, game, goal, reach_by_paths, step_set, wins_by_iteration
from pgsynth.benchgen import RandomModelSpec, gen_random
from pgsynth.model import Model, PreconditionError
from pgsynth.strategy import (
    InfoSet,
    StrategyProfile,
    broken_states,
    conflicts,
    is_loopless,
    is_p_free,
    load_profile,
    make_record,
    outcome_paths,
    partial_to_dict,
    reach,
    strategy_reach,
    verify_uniform,
    verify_winning,
    with_sigma,
)

SETTINGS = settings(max_examples=60, deadline=None)


def random_instance(seed, n):
    """A generated model plus an arbitrary (usually non-winning) total profile."""
    m, g = gen_random(RandomModelSpec(n, seed=seed, n_actions=3))
    rng = random.Random(seed)
    profile = StrategyProfile((0,), tuple((rng.choice(m.protocol[0][q]),) for q in m.states))
    return m, g, profile


def chain():
    # 0 -> 1 -> 2 -> 2
    return game([{0: [1]}, {0: [2]}, {0: [2]}], win=[2])


# -- reach ----------------------------------------------------------------------


def test_reach_from_outside_domain_is_start():
    m = chain()
    assert reach(m, (0,), {1}, {0: (0,)}) == {1}


def test_reach_includes_frontier():
    m = chain()
    assert reach(m, (0,), {0}, {0: (0,), 1: (0,)}) == {0, 1, 2}


@SETTINGS
@given(seed=st.integers(0, 5000), n=st.integers(2, 10), cut=st.integers(0, 10))
def test_reach_matches_path_enumeration(seed, n, cut):
    m, g, profile = random_instance(seed, n)
    sigma = {q: profile.choices[q] for q in m.states if q >= cut}
    assert reach(m, (0,), {0}, sigma) == reach_by_paths(m, (0,), {0}, sigma)


@SETTINGS
@given(seed=st.integers(0, 5000), n=st.integers(2, 12), data=st.data())
def test_reach_monotone_in_start(seed, n, data):
    m, g, profile = random_instance(seed, n)
    sigma = profile.as_partial()
    small = data.draw(st.sets(st.integers(0, n - 1), max_size=3))
    extra = data.draw(st.sets(st.integers(0, n - 1), max_size=3))
    assert reach(m, (0,), small, sigma) <= reach(m, (0,), small | extra, sigma)


@SETTINGS
@given(seed=st.integers(0, 5000), n=st.integers(2, 12), data=st.data())
def test_shrinking_domain_stays_inside_original_reach(seed, n, data):
    m, g, profile = random_instance(seed, n)
    full = profile.as_partial()
    keep = data.draw(st.sets(st.integers(0, n - 1)))
    part = {q: a for q, a in full.items() if q in keep}
    assert reach(m, (0,), {0}, part) <= reach(m, (0,), {0}, full)


# -- conflicts --------------------------------------------------------------------


def test_conflicts_examples():
    m = game([{0: [0], 1: [0]}] * 4)
    assert conflicts(m, 0, {0, 1}, {0: (1,), 1: (1,)}) == set()
    assert conflicts(m, 0, {0, 1}, {0: (0,), 1: (1,)}) == {frozenset((0, 1))}
    # a, a, b, b: every a-state disagrees with every b-state
    sigma = {0: (0,), 1: (0,), 2: (1,), 3: (1,)}
    expected = {frozenset(p) for p in [(0, 2), (0, 3), (1, 2), (1, 3)]}
    assert conflicts(m, 0, range(4), sigma) == expected


def test_conflicts_outside_domain_is_precondition_error():
    m = game([{0: [0]}])
    with pytest.raises(PreconditionError):
        conflicts(m, 0, {0}, {})


@SETTINGS
@given(choices=st.lists(st.integers(0, 2), min_size=1, max_size=8))
def test_conflicts_match_pair_scan(choices):
    m = game([{0: [0], 1: [0], 2: [0]}] * len(choices))
    sigma = {q: (a,) for q, a in enumerate(choices)}
    got = conflicts(m, 0, range(len(choices)), sigma)
    assert got == conflict_pairs(range(len(choices)), sigma)
    assert (got == frozenset()) == (len(set(choices)) == 1)


def test_coalition_conflicts_use_agent_component():
    m = game([{0: [0]}] * 2)
    sigma = {0: (0, 1), 1: (0, 2)}
    assert conflicts(m, 0, {0, 1}, sigma, coalition=(0, 1)) == set()
    assert conflicts(m, 1, {0, 1}, sigma, coalition=(0, 1)) == {frozenset((0, 1))}


# -- outcome paths and winning ----------------------------------------------------


def test_single_play_without_branching():
    m = chain()
    plays = list(outcome_paths(m, goal(), StrategyProfile((0,), ((0,),) * 3)))
    assert plays == [(0, 1, 2)]


def test_play_tree_from_two_start_states():
    # Q0 = {0, 1}; at 0 the environment chooses between 2 and 3; all end at 4
    m = game([{0: [2, 3]}, {0: [4]}, {0: [4]}, {0: [4]}, {0: [4]}], classes=[[0, 1], [2], [3], [4]], win=[4])
    plays = list(outcome_paths(m, goal(), StrategyProfile((0,), ((0,),) * 5)))
    assert sorted(plays) == [(0, 2, 4), (0, 3, 4), (1, 4)]


@SETTINGS
@given(seed=st.integers(0, 5000), n=st.integers(2, 10))
def test_plays_follow_the_transition_function(seed, n):
    m, g, profile = random_instance(seed, n)
    for play in outcome_paths(m, g, profile):
        for q, nxt in zip(play, play[1:]):
            assert nxt in step_set(m, (0,), q, profile.choices[q])


def test_direct_reach_wins():
    m = chain()
    assert verify_winning(m, goal(), StrategyProfile((0,), ((0,),) * 3), "perfect").winning


def test_target_free_self_loop_loses_with_lasso():
    m = game([{0: [1], 1: [2]}, {0: [1]}, {0: [2]}], win=[2])
    check = verify_winning(m, goal(), StrategyProfile((0,), ((0,), (0,), (0,))), "perfect")
    assert not check.winning
    assert check.counterexample == (0, 1, 1)
    assert verify_winning(m, goal(), StrategyProfile((0,), ((1,), (0,), (0,))), "perfect").winning


@pytest.mark.parametrize("seed", range(50))
def test_winning_agrees_with_bounded_iteration(seed):
    m, g, profile = random_instance(seed, 10)
    targets = m.valuation["win"]
    choice = profile.choices.__getitem__
    for mode, starts in (("perfect", [0]), ("imperfect", sorted(next(c for c in m.epistemic[0] if 0 in c)))):
        expected = wins_by_iteration(m, (0,), starts, choice, targets)
        assert verify_winning(m, g, profile, mode).winning == expected


# -- uniformity ---------------------------------------------------------------------


def test_identity_partition_always_uniform():
    m, g, profile = random_instance(3, 8)
    perfect = Model(m.n_agents, m.n_states, m.protocol, m.transitions,
                    tuple(tuple(frozenset([q]) for q in m.states) for _ in m.agents), m.valuation)
    assert verify_uniform(perfect, (0,), profile).uniform


def test_two_state_class_with_different_choices():
    m = game([{0: [1], 1: [1]}, {0: [1], 1: [1]}], classes=[[0, 1]], win=[1])
    check = verify_uniform(m, (0,), StrategyProfile((0,), ((0,), (1,))))
    assert not check.uniform and check.violations == [(0, 0, 1)]
    assert verify_uniform(m, (0,), StrategyProfile((0,), ((0,), (1,))), restrict_to={0}).uniform


@SETTINGS
@given(seed=st.integers(0, 5000), n=st.integers(2, 14))
def test_broken_states_match_scan(seed, n):
    m, g, profile = random_instance(seed, n)
    decision = strategy_reach(m, g, profile) - m.valuation["win"]
    assert broken_states(m, g, profile) == broken_by_scan(m, (0,), decision, profile)


# -- looplessness ---------------------------------------------------------------------


def test_loopless_examples():
    m = chain()
    assert is_loopless(m, (0,), {0: (0,), 1: (0,)}, {0})
    assert not is_loopless(m, (0,), {0: (0,), 1: (0,), 2: (0,)}, {0})
    # the only loop sits on the target, which is an exit
    assert is_loopless(m, (0,), {0: (0,), 1: (0,), 2: (0,)}, {0}, treat_as_exit={2})


def test_p_free():
    m = chain()
    assert is_p_free(m, {0: (0,), 1: (0,)}, "win")
    assert not is_p_free(m, {2: (0,)}, "win")


# -- records and JSON -------------------------------------------------------------------


def test_record_caches_are_consistent():
    # class {1, 2}; entering at 1, which moves to 2 or exits to 3
    m = game([{0: [1]}, {0: [2], 1: [3]}, {0: [3], 1: [4]}, {0: [3]}, {0: [4]}], classes=[[0], [1, 2], [3], [4]], win=[3])
    rec = make_record(m, (0,), InfoSet(0, frozenset({1, 2}), 0), {1: (0,), 2: (1,)}, {1})
    assert rec.rdom == {1, 2}
    assert rec.out == {4}
    assert rec.conflicts == {frozenset((1, 2))}
    assert rec.reach == reach(m, (0,), {1}, rec.sigma)
    fixed = with_sigma(m, (0,), rec, sigma={1: (1,), 2: (1,)})
    assert fixed.rdom == {1} and fixed.out == {3} and fixed.conflicts == set()


def test_profile_json_round_trip(tmp_path):
    p = StrategyProfile((0, 1), ((0, 1), (1, 1), (0, 0)))
    path = tmp_path / "s.json"
    path.write_text(json.dumps(p.to_dict()))
    assert load_profile(path) == p
    assert p.to_dict()["choices"][1] == {"state": 1, "action": [1, 1]}


def test_profile_json_rejects_gaps():
    with pytest.raises(ValueError):
        StrategyProfile.from_dict({"coalition": [0], "choices": [{"state": 1, "action": [0]}]})


def test_partial_strategy_json_has_domain():
    d = partial_to_dict((0,), {4: (1,), 2: (0,)})
    assert d["domain"] == [2, 4]
    assert d["choices"] == [{"state": 2, "action": [0]}, {"state": 4, "action": [1]}]


def test_profile_check_rejects_illegal_choice():
    m = chain()
    with pytest.raises(PreconditionError):
        StrategyProfile((0,), ((0,), (3,), (0,))).check(m)
