"""Trimming, weights, and cured-flag rules."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msrsim import (
    AgentState,
    Protocol,
    advance_cured_flag,
    assign_weights,
    should_send,
    trim,
    trimmed_mean,
    update_value,
    valid_thetas,
)


def _agent(value, theta=0):
    return AgentState(id=99, value=value, theta=theta)


class TestTrimExamples:
    """Hand-executed trims pinned to fixed inputs."""

    def test_p1_cuts_one_each_side(self):
        res = trim(Protocol.P1, 1, _agent(3.0), {0: 1.0, 1: -1.0, 2: 5.0, 3: 2.0})
        assert sorted(res.retained.values()) == [1.0, 2.0, 3.0]
        assert [v for _, v in res.removed_high] == [5.0]
        assert [v for _, v in res.removed_low] == [-1.0]
        assert not res.starved

    def test_p2a_conditional_keeps_own(self):
        res = trim(Protocol.P2A, 1, _agent(3.0), {0: 1.0, 1: -1.0})
        assert res.retained[99] == 3.0
        assert sorted(res.retained.values()) == [1.0, 3.0]
        assert res.removed_high == []
        assert [v for _, v in res.removed_low] == [-1.0]

    def test_p3_starves_on_small_pool(self):
        res = trim(Protocol.P3, 1, _agent(0.0), {0: 1.0, 1: 2.0, 2: 3.0})
        assert res.starved
        assert res.retained == {}

    def test_p2_recovering_drops_own(self):
        res = trim(Protocol.P2, 1, _agent(-1.0, theta=1), {0: 4.0, 1: 1.0, 2: 2.0})
        assert 99 not in res.retained
        assert list(res.retained.values()) == [2.0]
        assert [v for _, v in res.removed_high] == [4.0]
        assert [v for _, v in res.removed_low] == [1.0]

    def test_msr_conditional_is_capped_by_extreme_count(self):
        # only one value above own: remove it; three below: remove just f
        res = trim(Protocol.MSR, 2, _agent(5.0), {0: 9.0, 1: 1.0, 2: 2.0, 3: 3.0})
        assert res.retained[99] == 5.0
        assert [v for _, v in res.removed_high] == [9.0]
        assert sorted(v for _, v in res.removed_low) == [1.0, 2.0]
        assert 3.0 in res.retained.values()

    def test_msr_values_equal_to_own_survive(self):
        res = trim(Protocol.MSR, 3, _agent(2.0), {0: 2.0, 1: 2.0, 2: 2.0})
        assert len(res.retained) == 4
        assert res.removed_high == [] and res.removed_low == []

    def test_p2_theta_zero_pools_own_and_it_is_deletable(self):
        res = trim(Protocol.P2, 1, _agent(10.0), {0: 1.0, 1: 2.0, 2: 3.0})
        assert 99 not in res.retained  # own is the largest, cut
        assert sorted(res.retained.values()) == [2.0, 3.0]

    def test_every_input_lands_somewhere(self):
        received = {0: 4.0, 1: -2.0, 2: 0.5, 3: 0.5}
        res = trim(Protocol.P1, 1, _agent(1.0), received)
        seen = set(res.retained) | {i for i, _ in res.removed_high} | {i for i, _ in res.removed_low}
        assert seen == set(received) | {99}

    def test_tie_break_is_deterministic(self):
        received = {3: 7.0, 1: 7.0, 2: 7.0}
        a = trim(Protocol.P1, 1, _agent(7.0), received)
        b = trim(Protocol.P1, 1, _agent(7.0), dict(reversed(received.items())))
        assert a == b
        # ascending id wins among equal values on the high side
        assert a.removed_high[0][0] == 1


class TestSendAndFlags:
    def test_should_send_table(self):
        assert should_send(Protocol.P1, 0)
        assert not should_send(Protocol.P2, 1)
        assert not should_send(Protocol.P2A, 1)
        assert not should_send(Protocol.P2A, 2)
        assert should_send(Protocol.P2A, 0)
        assert should_send(Protocol.MSR, 0)

    def test_flag_advance_p2(self):
        assert advance_cured_flag(Protocol.P2, 0, just_cured=True) == 1
        assert advance_cured_flag(Protocol.P2, 1, just_cured=False) == 0
        assert advance_cured_flag(Protocol.P2, 0, just_cured=False) == 0

    def test_flag_advance_p2a_walks_two_rounds(self):
        assert advance_cured_flag(Protocol.P2A, 0, just_cured=True) == 1
        assert advance_cured_flag(Protocol.P2A, 1, just_cured=False) == 2
        assert advance_cured_flag(Protocol.P2A, 2, just_cured=False) == 0

    def test_flag_is_inert_elsewhere(self):
        for proto in (Protocol.MSR, Protocol.P1, Protocol.P3):
            assert advance_cured_flag(proto, 0, just_cured=True) == 0

    def test_valid_thetas(self):
        assert valid_thetas(Protocol.P2) == (0, 1)
        assert valid_thetas(Protocol.P2A) == (0, 1, 2)
        assert valid_thetas(Protocol.P3) == (0,)

    def test_bad_theta_rejected(self):
        with pytest.raises(ValueError):
            trim(Protocol.P1, 1, _agent(0.0, theta=1), {0: 1.0})
        with pytest.raises(ValueError):
            should_send(Protocol.P2, 2)


class TestWeightsAndUpdate:
    def test_single_id_gets_unit_weight(self):
        w = assign_weights({4}, gamma=0.3)
        assert w.weights == {4: 1.0}

    def test_equal_split(self):
        w = assign_weights({1, 99}, gamma=0.1)
        assert w.weights == {1: 0.5, 99: 0.5}

    def test_boundary_gamma_accepted(self):
        n = 8
        w = assign_weights(set(range(n)), gamma=1.0 / n)
        assert all(v == 1.0 / n for v in w.weights.values())
        assert math.isclose(sum(w.weights.values()), 1.0, abs_tol=1e-15)

    def test_gamma_too_large_for_pool(self):
        with pytest.raises(ValueError):
            assign_weights({0, 1, 2}, gamma=0.4)

    def test_update_averages_retained(self):
        res = trim(Protocol.P2A, 1, _agent(3.0), {0: 1.0, 1: -1.0})
        w = assign_weights(set(res.retained), gamma=1.0 / 6)
        assert update_value(_agent(3.0), res, w) == 2.0

    def test_update_holds_when_starved(self):
        res = trim(Protocol.P3, 1, _agent(7.0), {0: 1.0, 1: 2.0, 2: 3.0})
        w = assign_weights(set(), gamma=0.1) if res.retained else None
        assert update_value(_agent(7.0), res, w) == 7.0

    def test_identical_values_are_a_fixed_point(self):
        res = trim(Protocol.P1, 1, _agent(4.0), {i: 4.0 for i in range(5)})
        w = assign_weights(set(res.retained), gamma=0.05)
        assert update_value(_agent(4.0), res, w) == 4.0


finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


@st.composite
def trim_case(draw):
    proto = draw(st.sampled_from(list(Protocol)))
    theta = draw(st.sampled_from(valid_thetas(proto)))
    f = draw(st.integers(min_value=0, max_value=3))
    own = draw(finite)
    n_recv = draw(st.integers(min_value=0, max_value=12))
    received = {i: draw(finite) for i in range(n_recv)}
    return proto, f, AgentState(id=50, value=own, theta=theta), received


@given(trim_case())
@settings(max_examples=300, deadline=None)
def test_trim_partition_and_bounds(case):
    proto, f, agent, received = case
    res = trim(proto, f, agent, received)
    retained_ids = set(res.retained)
    removed_ids = {i for i, _ in res.removed_high} | {i for i, _ in res.removed_low}
    assert retained_ids.isdisjoint(removed_ids)
    pool = set(received)
    if proto in (Protocol.MSR, Protocol.P1, Protocol.P3) or agent.theta == 0 or (
        proto is Protocol.P2A and agent.theta == 2
    ):
        pool = pool | {agent.id}
    assert retained_ids | removed_ids == pool
    assert res.starved == (not res.retained)
    cap = 2 * f if proto is Protocol.P3 else f
    assert len(res.removed_high) <= cap
    assert len(res.removed_low) <= cap


@given(trim_case())
@settings(max_examples=300, deadline=None)
def test_trim_own_value_rules(case):
    proto, f, agent, received = case
    res = trim(proto, f, agent, received)
    conditional = proto is Protocol.MSR or (proto is Protocol.P2A and agent.theta in (0, 2))
    if conditional:
        assert agent.id in res.retained
    if agent.theta == 1:  # P2/P2A recovering: own value never considered
        assert agent.id not in res.retained
        assert all(i != agent.id for i, _ in res.removed_high + res.removed_low)


@given(trim_case())
@settings(max_examples=200, deadline=None)
def test_update_is_convex(case):
    proto, f, agent, received = case
    res = trim(proto, f, agent, received)
    if res.starved:
        return
    w = assign_weights(set(res.retained), gamma=1e-9)
    out = update_value(agent, res, w)
    vals = list(res.retained.values())
    assert min(vals) - 1e-9 <= out <= max(vals) + 1e-9


# half-integer values with power-of-two scales keep the affine map exact in
# binary floating point, so strict order comparisons survive the transform
half_int = st.integers(min_value=-200, max_value=200).map(lambda k: k / 2.0)


@st.composite
def lattice_trim_case(draw):
    proto = draw(st.sampled_from(list(Protocol)))
    theta = draw(st.sampled_from(valid_thetas(proto)))
    f = draw(st.integers(min_value=0, max_value=3))
    own = draw(half_int)
    n_recv = draw(st.integers(min_value=0, max_value=12))
    received = {i: draw(half_int) for i in range(n_recv)}
    return proto, f, AgentState(id=50, value=own, theta=theta), received


@given(
    lattice_trim_case(),
    st.sampled_from([0.5, 1.0, 2.0, 4.0]),
    half_int,
)
@settings(max_examples=200, deadline=None)
def test_trim_partition_is_affine_invariant(case, alpha, beta):
    proto, f, agent, received = case
    res = trim(proto, f, agent, received)
    mapped_agent = AgentState(id=agent.id, value=alpha * agent.value + beta, theta=agent.theta)
    mapped = trim(proto, f, mapped_agent, {i: alpha * v + beta for i, v in received.items()})
    assert set(mapped.retained) == set(res.retained)
    assert [i for i, _ in mapped.removed_high] == [i for i, _ in res.removed_high]
    assert [i for i, _ in mapped.removed_low] == [i for i, _ in res.removed_low]


@given(trim_case())
@settings(max_examples=300, deadline=None)
def test_fused_path_matches_composed_ops(case):
    proto, f, agent, received = case
    value, starved, kept = trimmed_mean(proto, f, agent.theta, agent.value, list(received.values()))
    res = trim(proto, f, agent, received)
    assert starved == res.starved
    assert kept == len(res.retained)
    if starved:
        assert value == agent.value
    else:
        w = assign_weights(set(res.retained), gamma=1e-12)
        expected = update_value(agent, res, w)
        tol = 1e-12 * max(1.0, abs(expected))
        assert abs(value - expected) <= tol
