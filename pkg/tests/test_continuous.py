import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from chinese_auction import (
    AuctionInstance,
    DynamicsConfig,
    best_response_costly,
    best_response_dynamics,
    best_response_given,
    expected_utility,
    symmetric_equilibrium_costly,
    symmetric_equilibrium_given,
)
from chinese_auction.continuous import opposing_totals, water_fill
from chinese_auction.errors import (
    AllZeroValuations,
    AsymmetricValuations,
    BestResponseNotAttained,
    NegativeInput,
)
from chinese_auction.verify import epsilon_nash_check_continuous

from .conftest import grid_max_separable, random_symmetric


def one_player(v, w=1.0, mode="given"):
    return AuctionInstance.continuous([v], [w], mode=mode)


class TestClosedForms:
    def test_proportional_unequal_budgets(self):
        inst = AuctionInstance.continuous([[1, 3], [1, 3]], [2, 1])
        np.testing.assert_allclose(symmetric_equilibrium_given(inst), [[0.5, 1.5], [0.25, 0.75]], rtol=0, atol=1e-15)

    def test_three_players_two_equal_items(self):
        inst = AuctionInstance.continuous([[1, 1]] * 3, [1, 1, 1])
        np.testing.assert_array_equal(symmetric_equilibrium_given(inst), np.full((3, 2), 0.5))

    def test_proportional_certificate(self):
        inst = AuctionInstance.continuous([[1, 3], [1, 3]], [1, 1])
        assert epsilon_nash_check_continuous(inst, symmetric_equilibrium_given(inst)).epsilon <= 1e-9

    def test_costly_two_players(self):
        inst = AuctionInstance.continuous([[4, 8], [4, 8]], [0, 0], mode="costly")
        np.testing.assert_array_equal(symmetric_equilibrium_costly(inst), [[1, 2], [1, 2]])

    def test_costly_single_player_bids_nothing(self):
        inst = AuctionInstance.continuous([[3, 5]], [0], mode="costly")
        np.testing.assert_array_equal(symmetric_equilibrium_costly(inst), [[0, 0]])
        # Alone with no auctioneer the player's best response is only a supremum.
        br = best_response_costly(inst, 0, np.zeros(2))
        assert not br.attained and br.value == 8

    def test_costly_three_players(self):
        inst = AuctionInstance.continuous([[9]] * 3, [0, 0, 0], mode="costly")
        np.testing.assert_allclose(symmetric_equilibrium_costly(inst), [[2], [2], [2]], rtol=1e-15)

    def test_errors(self):
        with pytest.raises(AsymmetricValuations):
            symmetric_equilibrium_given(AuctionInstance.continuous([[1, 3], [3, 1]], [1, 1]))
        with pytest.raises(AllZeroValuations):
            symmetric_equilibrium_given(AuctionInstance.continuous([[0, 0], [0, 0]], [1, 1]))
        with pytest.raises(AsymmetricValuations):
            symmetric_equilibrium_costly(AuctionInstance.continuous([[1, 3], [3, 1]], [0, 0], mode="costly"))

    def test_certificates_on_random_symmetric(self, rng):
        for _ in range(100):
            for mode, build in (("given", symmetric_equilibrium_given), ("costly", symmetric_equilibrium_costly)):
                inst = random_symmetric(rng, mode)
                cert = epsilon_nash_check_continuous(inst, build(inst))
                assert cert.epsilon <= 1e-9
                if inst.n > 1:
                    assert all(cert.attained)


class TestBestResponseGiven:
    def test_against_simplex_grid(self):
        inst = one_player([1, 3])
        br = best_response_given(inst, 0, np.array([1.0, 1.0]))
        # Grid oracle at step 1e-4: max 1.5119661276132503 at (0.0981, 0.9019).
        assert br.attained
        np.testing.assert_allclose(br.allocation, [0.0981, 0.9019], atol=1e-4)
        assert br.value >= 1.5119661276132503
        assert br.value == pytest.approx(1.5119661276132503, abs=1e-6)
        assert br.allocation.sum() == pytest.approx(1.0, abs=1e-12)

    def test_zero_value_item_gets_nothing(self):
        br = best_response_given(one_player([0, 5], 2.0), 0, np.array([0.0, 3.0]))
        np.testing.assert_array_equal(br.allocation, [0, 2])
        assert br.attained

    def test_reproduces_proportional_row(self, rng):
        for _ in range(20):
            inst = random_symmetric(rng, "given", n_min=2)
            x = symmetric_equilibrium_given(inst)
            for i in range(inst.n):
                br = best_response_given(inst, i, opposing_totals(inst, x, i))
                np.testing.assert_allclose(br.allocation, x[i], rtol=1e-9, atol=1e-12)

    def test_not_attained_when_item_unopposed(self):
        inst = AuctionInstance.continuous([[0, 1], [1, 3]], [1, 1])
        x = np.array([[0.0, 1.0], [0.0, 1.0]])
        br = best_response_given(inst, 1, opposing_totals(inst, x, 1))
        assert not br.attained and br.unopposed == (0,)
        # Supremum: item 0 for free plus the whole budget against weight 1 on item 1.
        assert br.value == pytest.approx(1 + 3 * 1 / 2, abs=1e-15)
        assert br.allocation[0] == pytest.approx(1e-6)
        assert br.allocation.sum() == pytest.approx(1.0, abs=1e-15)
        assert br.witness_value < br.value
        assert br.witness_value == pytest.approx(expected_utility(inst, np.array([x[0], br.allocation]))[1], abs=1e-12)

    def test_unopposed_only_is_attained(self):
        br = best_response_given(one_player([2, 3, 0], 1.0), 0, np.zeros(3))
        assert br.attained and br.value == 5
        np.testing.assert_array_equal(br.allocation, [0.5, 0.5, 0])

    def test_zero_budget(self):
        br = best_response_given(one_player([2, 3], 0.0), 0, np.ones(2))
        assert br.attained and br.value == 0 and not br.allocation.any()

    def test_negative_input(self):
        with pytest.raises(NegativeInput):
            best_response_given(one_player([1, 1]), 0, np.array([-1.0, 1.0]))

    @given(
        st.lists(st.floats(0.01, 10), min_size=1, max_size=4),
        st.lists(st.floats(0.01, 10), min_size=4, max_size=4),
        st.floats(0.01, 10),
    )
    @settings(max_examples=200, deadline=None)
    def test_kkt_residuals(self, v, a, w):
        m = len(v)
        a = np.array(a[:m])
        v = np.array(v)
        br = best_response_given(one_player(v, w), 0, a)
        y, lam = br.allocation, br.lam
        assert br.attained and lam > 0
        assert y.sum() == pytest.approx(w, abs=1e-12 * max(1, w))
        marginal = v * a / (a + y) ** 2
        pos = y > 0
        np.testing.assert_allclose(marginal[pos], lam, rtol=0, atol=1e-8 * max(1, lam))
        assert np.all(v[~pos] / a[~pos] <= lam + 1e-8)

    @given(
        st.lists(st.floats(0.05, 10), min_size=1, max_size=4),
        st.lists(st.floats(0.2, 5), min_size=4, max_size=4),
        st.floats(0.1, 3),
    )
    @settings(max_examples=30, deadline=None)
    def test_beats_simplex_grid(self, v, a, w):
        m = len(v)
        v, a = np.array(v), np.array(a[:m])
        h = 1e-3
        K = int(round(w / h))
        step = w / K
        k = np.arange(K + 1) * step
        tables = [vj * k / (aj + k) for vj, aj in zip(v, a)]
        oracle = grid_max_separable(tables)
        br = best_response_given(one_player(v, w), 0, a)
        lipschitz = float(np.sum(v / a)) * step
        assert br.value >= oracle - 1e-12
        assert br.value <= oracle + lipschitz


class TestConvexity:
    @given(
        st.integers(1, 5).flatmap(lambda m: st.tuples(
            st.lists(st.floats(0.01, 10), min_size=m, max_size=m),
            st.lists(st.floats(0.01, 10), min_size=m, max_size=m),
            st.lists(st.floats(0, 1), min_size=m, max_size=m),
            st.lists(st.floats(0, 1), min_size=m, max_size=m),
        )),
        st.floats(0.1, 10),
    )
    @settings(max_examples=200, deadline=None)
    def test_midpoint_strictly_below_chord(self, data, total):
        a, b, ry, rz = map(np.array, data)
        assume(ry.sum() > 0 and rz.sum() > 0)
        y, z = ry / ry.sum() * total, rz / rz.sum() * total
        assume(np.abs(y - z).max() > 1e-3)

        def f(p):
            return float(np.sum(b / (a + p)))

        assert f((y + z) / 2) < (f(y) + f(z)) / 2


class TestBestResponseCostly:
    def test_break_even(self):
        br = best_response_costly(one_player([1], mode="costly"), 0, np.array([1.0]))
        assert br.allocation[0] == 0 and br.value == 0

    def test_against_line_grid(self):
        br = best_response_costly(one_player([4], mode="costly"), 0, np.array([1.0]))
        # 1-D grid at step 1e-5 peaks at y = 1 with payoff 4 * 1/2 - 1 = 1.
        assert br.allocation[0] == pytest.approx(1.0, abs=1e-5)
        assert br.value == pytest.approx(1.0, abs=1e-9)

    def test_reproduces_symmetric_profile(self, rng):
        for _ in range(20):
            inst = random_symmetric(rng, "costly")
            x = symmetric_equilibrium_costly(inst)
            for i in range(inst.n):
                br = best_response_costly(inst, i, opposing_totals(inst, x, i))
                np.testing.assert_allclose(br.allocation, x[i], rtol=1e-9, atol=1e-12)

    @given(st.lists(st.tuples(st.floats(0, 10), st.floats(0.001, 10)), min_size=1, max_size=5))
    @settings(max_examples=200, deadline=None)
    def test_half_gap_bound(self, pairs):
        v = np.array([p[0] for p in pairs])
        a = np.array([p[1] for p in pairs])
        br = best_response_costly(one_player(v, mode="costly"), 0, a)
        pos = br.allocation > 0
        assert np.all(br.allocation[pos] <= (v[pos] - a[pos]) / 2 + 1e-12)
        assert np.all(br.allocation <= v)


class TestDynamics:
    def test_converges_to_closed_form(self, rng):
        for _ in range(10):
            inst = random_symmetric(rng, "given", n_min=2)
            start = np.array([w * rng.dirichlet(np.ones(inst.m)) for w in inst.weights])
            res = best_response_dynamics(inst, start, DynamicsConfig(epsilon=1e-14))
            assert res.converged
            np.testing.assert_allclose(res.profile, symmetric_equilibrium_given(inst), rtol=0, atol=1e-6)

    def test_auctioneer_counterexample(self):
        inst = AuctionInstance.continuous([[0, 1], [1, 3]], [1, 1], delta=[0.01, 0.01])
        res = best_response_dynamics(inst, None, DynamicsConfig(epsilon=1e-6))
        assert res.converged and res.final_gap <= 1e-6
        assert epsilon_nash_check_continuous(inst, res.profile).epsilon <= 1e-6

    def test_costly_with_auctioneer(self):
        inst = AuctionInstance.continuous([[1, 0], [1, 1]], [0, 0], mode="costly", delta=[0.01, 0.01])
        res = best_response_dynamics(inst)
        assert res.converged
        assert epsilon_nash_check_continuous(inst, res.profile).epsilon <= 1e-8

    def test_max_rounds_must_be_positive(self):
        with pytest.raises(ValueError):
            DynamicsConfig(max_rounds=0)
        with pytest.raises(ValueError):
            DynamicsConfig(theta=0)

    def test_non_convergence_is_reported(self):
        inst = AuctionInstance.continuous([[1, 2], [3, 1]], [1, 2])
        res = best_response_dynamics(inst, None, DynamicsConfig(max_rounds=1, epsilon=1e-14))
        assert not res.converged and res.rounds == 1 and res.final_gap > 1e-14

    def test_unattained_best_response_raises(self):
        inst = AuctionInstance.continuous([[0, 1], [1, 3]], [1, 1])
        start = np.array([[0.0, 1.0], [0.0, 1.0]])
        with pytest.raises(BestResponseNotAttained) as info:
            best_response_dynamics(inst, start)
        assert info.value.player == 1 and info.value.items == (0,)

    def test_zero_value_player_is_skipped(self):
        inst = AuctionInstance.continuous([[0, 0], [1, 3], [2, 1]], [1, 1, 1], delta=[0.1, 0.1])
        start = np.array([[0.3, 0.7], [0.5, 0.5], [0.5, 0.5]])
        res = best_response_dynamics(inst, start)
        assert res.converged
        np.testing.assert_array_equal(res.profile[0], [0.3, 0.7])

    def test_infeasible_start(self):
        inst = AuctionInstance.continuous([[1, 2]], [1])
        with pytest.raises(ValueError):
            best_response_dynamics(inst, np.array([[0.2, 0.2]]))


def test_water_fill_zero_budget():
    y, lam = water_fill(np.array([1.0, 4.0]), np.array([1.0, 2.0]), 0.0)
    assert not y.any() and lam == 2.0
