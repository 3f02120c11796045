import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infex.environment import BanditInstance, generate_instance, make_rng
from infex.errors import InvalidArgumentError
from infex.linalg import RidgeState
from infex.policies import (
    OLSBanditPolicy,
    PolicyConfig,
    eps_greedy_select,
    greedy_select,
    lints_select,
    linucb_select,
    make_policy,
)
from infex.schedules import Schedule
from infex.simulator import run_single


def trained_state(instance, n, seed):
    rng = np.random.default_rng(seed)
    state = RidgeState(instance.dim)
    for _ in range(n):
        state.update(instance.arms[rng.integers(instance.n_arms)], rng.standard_normal())
    return state


class TestGreedy:
    def test_zero_estimate_ties_to_first(self):
        inst = generate_instance(4, 6, 0)
        assert greedy_select(RidgeState(4), inst) == 0

    def test_basis(self):
        inst = BanditInstance(np.eye(2), np.array([0.3, 0.1]))
        state = RidgeState(2)
        state.theta_hat = np.array([1.0, 0.0])
        assert greedy_select(state, inst) == 0
        state.theta_hat = np.array([0.0, 1.0])
        assert greedy_select(state, inst) == 1

    def test_full_scan(self):
        inst = generate_instance(4, 8, 3)
        state = trained_state(inst, 50, 1)
        scores = [float(a @ state.theta_hat) for a in inst.arms]
        assert greedy_select(state, inst) == scores.index(max(scores))

    @settings(deadline=None, max_examples=50)
    @given(scale=st.floats(1e-3, 1e3), seed=st.integers(0, 1000))
    def test_scale_invariance(self, scale, seed):
        inst = generate_instance(4, 8, seed)
        state = trained_state(inst, 20, seed)
        before = greedy_select(state, inst)
        state.theta_hat = state.theta_hat * scale
        assert greedy_select(state, inst) == before


class TestLinUCB:
    def test_zero_radius_is_greedy(self):
        inst = generate_instance(5, 30, 2)
        state = trained_state(inst, 40, 2)
        assert linucb_select(state, 0.0, inst) == greedy_select(state, inst)

    def test_fresh_unit_arms_tie(self):
        arms = np.array([[0.6, 0.8], [1.0, 0.0], [0.0, -1.0]])
        inst = BanditInstance(arms, np.array([0.1, 0.5]))
        assert linucb_select(RidgeState(2), 2.5, inst) == 0

    def test_score_table(self):
        inst = generate_instance(3, 3, 9)
        state = trained_state(inst, 15, 4)
        beta = 1.7
        scores = [
            float(a @ state.theta_hat) + beta * math.sqrt(a @ np.linalg.inv(state.gram) @ a)
            for a in inst.arms
        ]
        assert linucb_select(state, beta, inst) == int(np.argmax(scores))


class TestLinTS:
    def test_zero_perturbation_is_greedy(self):
        inst = generate_instance(5, 30, 5)
        state = trained_state(inst, 40, 5)
        idx, _ = lints_select(state, 3.0, None, inst, eta=np.zeros(5))
        assert idx == greedy_select(state, inst)

    def test_zero_radius_is_greedy(self):
        inst = generate_instance(5, 30, 6)
        state = trained_state(inst, 40, 6)
        rng = make_rng(1)
        for _ in range(20):
            idx, _ = lints_select(state, 0.0, rng, inst)
            assert idx == greedy_select(state, inst)

    def test_hand_computed(self):
        arms = np.array([[0.0, 1.0], [1.0, 0.0], [-1.0, 0.0]])
        inst = BanditInstance(arms, np.array([0.2, 0.1]))
        idx, eta = lints_select(RidgeState(2), 1.0, None, inst, eta=np.array([1.0, 0.0]))
        assert idx == 1
        np.testing.assert_array_equal(eta, [1.0, 0.0])

    def test_replayable(self):
        inst = generate_instance(4, 10, 8)
        state = trained_state(inst, 30, 8)
        a = [lints_select(state, 2.0, make_rng(3, 1), inst) for _ in range(1)]
        b = [lints_select(state, 2.0, make_rng(3, 1), inst) for _ in range(1)]
        assert a[0][0] == b[0][0]
        np.testing.assert_array_equal(a[0][1], b[0][1])

    def test_returned_perturbation_reproduces_choice(self):
        inst = generate_instance(4, 10, 12)
        state = trained_state(inst, 30, 12)
        rng = make_rng(2, 1)
        for _ in range(10):
            idx, eta = lints_select(state, 2.0, rng, inst)
            assert lints_select(state, 2.0, None, inst, eta=eta)[0] == idx


class TestEpsGreedy:
    def test_first_step_always_explores(self):
        inst = generate_instance(3, 5, 0)
        rng = make_rng(0, 1)
        assert all(eps_greedy_select(RidgeState(3), 1, rng, inst)[1] for _ in range(200))

    def test_rate_at_eight(self):
        inst = generate_instance(3, 5, 0)
        rng = make_rng(21, 1)
        n = 100_000
        rate = sum(eps_greedy_select(RidgeState(3), 8, rng, inst)[1] for _ in range(n)) / n
        assert abs(rate - 0.5) <= 0.01

    def test_probability_decreasing(self):
        probs = [t ** (-1 / 3) for t in range(1, 1000)]
        assert all(a > b for a, b in zip(probs, probs[1:]))


class TestOLSBandit:
    def test_first_step_forced(self):
        inst = generate_instance(3, 4, 0)
        pol = make_policy(PolicyConfig("OLSBandit", ols_q=1), inst, 100, make_rng(0))
        assert pol.select(1) == (0, True)

    def test_zero_rate_is_greedy(self):
        inst = generate_instance(3, 6, 1)
        ols = run_single(inst, PolicyConfig("OLSBandit", ols_q=0), 300, 5, keep_steps=True)
        greedy = run_single(inst, PolicyConfig("Greedy"), 300, 5, keep_steps=True)
        np.testing.assert_array_equal(ols.actions, greedy.actions)
        assert ols.n_explore == 0

    def test_forced_steps_match_budget_replay(self):
        inst = generate_instance(2, 2, 3)
        trace = run_single(inst, PolicyConfig("OLSBandit", ols_q=1), 100, 9, keep_steps=True)
        forced, expected_flags, expected_arms = 0, [], []
        for t in range(1, 101):
            if forced < 1 * 2 * math.ceil(math.log(t + 1)):
                expected_flags.append(True)
                expected_arms.append(forced % 2)
                forced += 1
            else:
                expected_flags.append(False)
        np.testing.assert_array_equal(trace.explored, expected_flags)
        np.testing.assert_array_equal(trace.actions[trace.explored], expected_arms)

    def test_default_rate_is_dimension(self):
        inst = generate_instance(7, 3, 0)
        pol = make_policy(PolicyConfig("OLSBandit"), inst, 10, make_rng(0))
        assert isinstance(pol, OLSBanditPolicy) and pol.q == 7.0


class TestInfex:
    @pytest.mark.parametrize("base", ["LinUCB", "LinTS"])
    def test_always_equals_base(self, base):
        inst = generate_instance(5, 10, 4)
        a = run_single(inst, PolicyConfig(base), 400, 4, keep_steps=True)
        b = run_single(inst, PolicyConfig.infex(base, Schedule.always()), 400, 4, keep_steps=True)
        np.testing.assert_array_equal(a.actions, b.actions)

    @pytest.mark.parametrize("base", ["LinUCB", "LinTS"])
    def test_never_equals_greedy(self, base):
        inst = generate_instance(5, 10, 4)
        a = run_single(inst, PolicyConfig("Greedy"), 400, 4, keep_steps=True)
        b = run_single(inst, PolicyConfig.infex(base, Schedule.never()), 400, 4, keep_steps=True)
        np.testing.assert_array_equal(a.actions, b.actions)

    def test_periodic_five_flags(self):
        inst = generate_instance(5, 10, 4)
        tr = run_single(inst, PolicyConfig.infex("LinUCB", Schedule.periodic(5)), 100, 1, keep_steps=True)
        assert tr.n_explore == 20
        np.testing.assert_array_equal(np.flatnonzero(tr.explored) + 1, np.arange(5, 101, 5))

    @pytest.mark.parametrize("m", [3, 7, 20])
    def test_explored_count_is_floor(self, m):
        inst = generate_instance(3, 5, 2)
        tr = run_single(inst, PolicyConfig.infex("LinTS", Schedule.periodic(m)), 503, 2)
        assert tr.n_explore == 503 // m

    def test_ridge_updated_on_every_branch(self):
        inst = generate_instance(3, 5, 2)
        pol = make_policy(PolicyConfig.infex("LinUCB", Schedule.periodic(2)), inst, 10, make_rng(0))
        for t in range(1, 11):
            idx, _ = pol.select(t)
            pol.observe(idx, 1.0)
        assert pol.ridge.step_count == 10


class TestConfig:
    def test_no_nesting(self):
        inner = PolicyConfig.infex("LinUCB", Schedule.periodic(5))
        with pytest.raises(InvalidArgumentError):
            PolicyConfig.infex(inner, Schedule.periodic(5))

    @pytest.mark.parametrize("delta", [0.0, 1.5])
    def test_delta_range(self, delta):
        with pytest.raises(InvalidArgumentError):
            PolicyConfig("LinUCB", delta=delta)

    def test_default_delta_is_inverse_horizon(self):
        inst = generate_instance(3, 5, 0)
        assert make_policy(PolicyConfig("LinUCB"), inst, 250, make_rng(0)).delta == 1 / 250

    def test_dict_round_trip(self):
        cfg = PolicyConfig.infex("LinTS", Schedule.log_linear(2.0), delta=0.01)
        assert PolicyConfig.from_dict(cfg.to_dict()) == cfg
        assert cfg.label == "INFEX(LinTS, LogLinear(C=2))"

    def test_unknown_kind(self):
        with pytest.raises(InvalidArgumentError):
            PolicyConfig.from_dict({"kind": "UCB1"})


@pytest.mark.parametrize(
    "config",
    [
        PolicyConfig("Greedy"),
        PolicyConfig("LinUCB"),
        PolicyConfig("LinTS"),
        PolicyConfig("EpsGreedy"),
        PolicyConfig("OLSBandit"),
        PolicyConfig.infex("LinTS", Schedule.power(0.5)),
    ],
    ids=lambda c: c.label,
)
def test_indices_in_range_and_replayable(config):
    inst = generate_instance(4, 7, 13)
    a = run_single(inst, config, 300, 13, keep_steps=True)
    b = run_single(inst, config, 300, 13, keep_steps=True)
    assert a.actions.min() >= 0 and a.actions.max() < 7
    np.testing.assert_array_equal(a.actions, b.actions)
