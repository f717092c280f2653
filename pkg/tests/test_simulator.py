import math

import numpy as np
import pytest

from specdist.errors import ConfigurationError
from specdist.simulator import (
    AgentParams,
    MarketState,
    SimConfig,
    decide,
    init_population,
    load_sim_config,
    parameter_entropy,
    perceive,
    run_simulation,
    step_market,
)


def manual_params(theta_buy, theta_sell, sensitivity):
    tb = np.atleast_2d(np.asarray(theta_buy, dtype=float))
    ts = np.atleast_2d(np.asarray(theta_sell, dtype=float))
    a = np.atleast_2d(np.asarray(sensitivity, dtype=float))
    return AgentParams(tb, ts, a, 1.0 / (ts**2 + tb**2))


class TestParameterEntropy:
    def test_unit_width(self):
        assert parameter_entropy((0.0, 1.0)) == 0.0

    def test_e_width(self):
        assert parameter_entropy((0.0, math.e)) == pytest.approx(1.0, abs=1e-15)

    def test_half_width(self):
        assert parameter_entropy((1.0, 1.5)) == pytest.approx(math.log(0.5))

    def test_rejects_empty_range(self):
        with pytest.raises(ConfigurationError):
            parameter_entropy((1.0, 1.0))


class TestInitPopulation:
    def test_support_bounds(self):
        cfg = SimConfig(n_agents=200, n_commodities=5, seed=1)
        params = init_population(cfg)
        assert params.theta_buy.min() >= 0.01 and params.theta_buy.max() <= 0.02
        assert params.theta_sell.min() >= -0.02 and params.theta_sell.max() <= -0.01
        a1, a2 = cfg.a_range
        assert params.sensitivity.min() >= a1 and params.sensitivity.max() <= a2

    def test_degenerate_width_collapses_sensitivity(self):
        cfg = SimConfig(n_agents=50, n_commodities=2, a_range=(1.0, 1.0 + 1e-9), seed=0)
        params = init_population(cfg)
        assert np.allclose(params.sensitivity, 1.0, atol=2e-9)
        assert parameter_entropy(cfg.a_range) == pytest.approx(math.log(1e-9), rel=1e-6)

    def test_same_seed_bit_identical(self):
        cfg = SimConfig(n_agents=100, n_commodities=4, seed=77)
        one, two = init_population(cfg), init_population(cfg)
        assert np.array_equal(one.theta_buy, two.theta_buy)
        assert np.array_equal(one.theta_sell, two.theta_sell)
        assert np.array_equal(one.sensitivity, two.sensitivity)

    def test_invalid_range_rejected(self):
        with pytest.raises(ConfigurationError):
            SimConfig(a_range=(2.0, 1.0))


class TestPerceive:
    def test_zero_history_zero_noise(self):
        cfg = SimConfig(n_agents=3, n_commodities=2)
        state = MarketState.initial(cfg)
        params = init_population(cfg)
        x = perceive(state, params, np.zeros(3))
        assert np.all(x == 0.0)

    def test_single_commodity_analytic(self):
        params = manual_params([[0.01]], [[-0.01]], [[1.0]])
        state = MarketState(
            rates=np.ones(1),
            attitudes=np.zeros((1, 1), dtype=np.int8),
            returns_history=np.array([[1e-4]]),
        )
        x = perceive(state, params, np.zeros(1))
        assert x[0] == pytest.approx(0.5, rel=1e-12)

    def test_matches_scalar_loop(self):
        rng = np.random.default_rng(5)
        cfg = SimConfig(n_agents=7, n_commodities=3, ma_span=4, seed=5)
        params = init_population(cfg, rng)
        history = rng.normal(scale=1e-4, size=(4, 3))
        state = MarketState(
            rates=np.ones(3),
            attitudes=np.zeros((7, 3), dtype=np.int8),
            returns_history=history,
        )
        s = rng.normal(size=7)
        x = perceive(state, params, s)
        for i in range(7):
            expected = s[i]
            for k in range(3):
                c = 1.0 / (params.theta_sell[i, k] ** 2 + params.theta_buy[i, k] ** 2)
                expected += c * sum(history[tau, k] for tau in range(4)) / 4
            assert x[i] == pytest.approx(expected, rel=1e-12)


class TestDecide:
    def test_zero_signal_waits(self):
        params = manual_params([[0.01]], [[-0.01]], [[2.0]])
        assert decide(np.zeros(1), params, np.zeros(1)).tolist() == [[0]]

    def test_buy_boundary_inclusive(self):
        params = manual_params([[0.01]], [[-0.01]], [[1.0]])
        y = decide(np.array([0.01]), params, np.zeros(1))
        assert y.tolist() == [[1]]

    def test_sell_threshold_crossed(self):
        params = manual_params([[0.02]], [[-0.02]], [[2.0]])
        y = decide(np.array([-0.011]), params, np.zeros(1))
        assert y.tolist() == [[-1]]


class TestStepMarket:
    def quiet_cfg(self, **kwargs):
        return SimConfig(
            n_agents=40, n_commodities=3, sigma_xi=0.0, sigma_s=0.0, seed=3, **kwargs
        )

    def test_all_waiting_fixed_point(self):
        cfg = self.quiet_cfg()
        rng = np.random.default_rng(0)
        params = init_population(cfg, rng)
        state = step_market(MarketState.initial(cfg), params, cfg, rng)
        assert np.all(state.attitudes == 0)
        assert np.all(state.rates == 1.0)
        assert np.all(state.activity(cfg.dt) == 0.0)
        assert np.all(state.returns_history == 0.0)

    def test_unanimous_buying_saturates(self):
        cfg = self.quiet_cfg()
        rng = np.random.default_rng(0)
        params = init_population(cfg, rng)
        base = MarketState.initial(cfg)
        state = MarketState(
            rates=base.rates,
            attitudes=base.attitudes,
            returns_history=np.full((1, 3), 1.0),  # huge shared return signal
        )
        nxt = step_market(state, params, cfg, rng)
        assert np.all(nxt.attitudes == 1)
        assert np.all(nxt.returns_history[0] == pytest.approx(cfg.gamma, rel=1e-12))
        assert np.all(nxt.rates == pytest.approx(math.exp(cfg.gamma), rel=1e-12))
        assert np.all(nxt.activity(cfg.dt) == cfg.n_agents)

    def test_returns_bounded_by_gamma(self):
        cfg = SimConfig(n_agents=60, n_commodities=4, seed=9)
        rng = np.random.default_rng(9)
        params = init_population(cfg, rng)
        state = MarketState.initial(cfg)
        for _ in range(200):
            state = step_market(state, params, cfg, rng)
            assert np.all(np.abs(state.returns_history[0]) <= cfg.gamma * (1 + 1e-12))
            counts = state.activity(cfg.dt) * cfg.dt
            assert np.all(counts == np.round(counts))
            assert np.all(counts <= cfg.n_agents)

    def test_rates_telescope_from_returns(self):
        cfg = SimConfig(n_agents=50, n_commodities=4, gamma=1e-3, a_range=(2.0, 4.0), seed=21)
        rng = np.random.default_rng(21)
        params = init_population(cfg, rng)
        state = MarketState.initial(cfg)
        total = np.zeros(4)
        for _ in range(10_000):
            state = step_market(state, params, cfg, rng)
            total += state.returns_history[0]
        assert np.allclose(state.rates, np.exp(total), rtol=1e-9)

    def test_matches_scalar_reference_implementation(self):
        """Step the default-size market 10 times against a pure-Python rebuild."""
        cfg = SimConfig(seed=12)
        n, m = cfg.n_agents, cfg.n_commodities

        rng = np.random.default_rng(cfg.seed)
        params = init_population(cfg, rng)
        state = MarketState.initial(cfg)

        # Reference consumes an identical stream: same draw order, same shapes.
        ref_rng = np.random.default_rng(cfg.seed)
        tb = ref_rng.uniform(*cfg.theta_buy_range, (n, m))
        ts = ref_rng.uniform(*cfg.theta_sell_range, (n, m))
        aa = ref_rng.uniform(*cfg.a_range, (n, m))
        ref_rates = [1.0] * m
        ref_prev_returns = [0.0] * m

        for _ in range(10):
            state = step_market(state, params, cfg, rng)

            s = ref_rng.normal(0.0, cfg.sigma_s, n)
            xi = ref_rng.normal(0.0, cfg.sigma_xi, n)
            ref_y = [[0] * m for _ in range(n)]
            for i in range(n):
                x_i = s[i]
                for k in range(m):
                    c = 1.0 / (ts[i][k] * ts[i][k] + tb[i][k] * tb[i][k])
                    x_i += c * ref_prev_returns[k]
                for j in range(m):
                    phi = aa[i][j] * (x_i + xi[i])
                    if phi >= tb[i][j]:
                        ref_y[i][j] = 1
                    elif phi <= ts[i][j]:
                        ref_y[i][j] = -1
            ref_returns = []
            for j in range(m):
                net = sum(ref_y[i][j] for i in range(n))
                ref_returns.append(cfg.gamma / n * net)
            ref_rates = [r * math.exp(dr) for r, dr in zip(ref_rates, ref_returns)]
            ref_prev_returns = ref_returns

            assert np.array_equal(state.attitudes, np.array(ref_y, dtype=np.int8))
            assert np.allclose(state.returns_history[0], ref_returns, rtol=1e-12, atol=1e-18)
            assert np.allclose(state.rates, ref_rates, rtol=1e-12)

    def test_resample_mode_draws_fresh_parameters(self):
        cfg = SimConfig(n_agents=30, n_commodities=2, resample_params=True, seed=4)
        rates1, act1 = run_simulation(cfg)
        rates2, act2 = run_simulation(cfg)
        assert np.array_equal(rates1.values, rates2.values)
        fixed = run_simulation(SimConfig(n_agents=30, n_commodities=2, seed=4))[0]
        assert not np.array_equal(rates1.values, fixed.values)


class TestRunSimulation:
    def test_zero_horizon_empty_panels(self):
        rates, activity = run_simulation(SimConfig(n_agents=5, n_commodities=2, horizon=0, warmup=2))
        assert rates.length == 0 and activity.length == 0

    def test_silent_market_stays_at_rest(self):
        cfg = SimConfig(n_agents=10, n_commodities=2, sigma_xi=0.0, sigma_s=0.0, horizon=20, warmup=5)
        rates, activity = run_simulation(cfg)
        assert np.all(rates.values == 1.0)
        assert np.all(activity.values == 0.0)

    def test_same_seed_bit_identical_panels(self):
        cfg = SimConfig(n_agents=80, n_commodities=3, horizon=50, warmup=10, seed=123)
        one = run_simulation(cfg)
        two = run_simulation(cfg)
        for a, b in zip(one, two):
            assert np.array_equal(a.values, b.values)

    def test_panel_metadata(self):
        cfg = SimConfig(n_agents=10, n_commodities=12, horizon=8, warmup=0, dt=2.0)
        rates, activity = run_simulation(cfg)
        assert rates.labels == activity.labels
        assert rates.labels[0] == "c01" and rates.labels[-1] == "c12"
        assert rates.dt == 2.0 and rates.length == 8


class TestConfigFile:
    def test_load_values_and_ranges(self, tmp_path):
        path = tmp_path / "sim.cfg"
        path.write_text(
            "# comment\n"
            "seed = 7\n"
            "horizon = 100\n"
            "gamma = 3e-7\n"
            "a_range = 0.5 3.5\n"
            "theta_sell_range = -0.03, -0.02\n"
            "resample_params = true\n"
        )
        cfg = load_sim_config(path)
        assert cfg.seed == 7
        assert cfg.horizon == 100
        assert cfg.gamma == 3e-7
        assert cfg.a_range == (0.5, 3.5)
        assert cfg.theta_sell_range == (-0.03, -0.02)
        assert cfg.resample_params is True

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "sim.cfg"
        path.write_text("volatility = 3\n")
        with pytest.raises(ConfigurationError, match="unknown key"):
            load_sim_config(path)

    def test_bad_value_rejected(self, tmp_path):
        path = tmp_path / "sim.cfg"
        path.write_text("seed = seven\n")
        with pytest.raises(ConfigurationError, match="bad value"):
            load_sim_config(path)

    def test_config_invariants(self):
        with pytest.raises(ConfigurationError):
            SimConfig(theta_buy_range=(-0.01, 0.02))
        with pytest.raises(ConfigurationError):
            SimConfig(theta_sell_range=(-0.02, 0.01))
        with pytest.raises(ConfigurationError):
            SimConfig(ma_span=0)
        with pytest.raises(ConfigurationError):
            SimConfig(gamma=0.0)
