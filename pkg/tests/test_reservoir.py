import math

import numpy as np
import pytest
import scipy.linalg

from symrc import reservoir
from symrc.errors import DivergenceError, ParameterError, ShapeError
from symrc.reservoir import HyperParams, activation, euler_step, instantiate, run


def make_params(**kwargs):
    base = dict(gamma=2.0, rho_r=0.9, rho_in=0.5, sigma=0.8, k=5)
    base.update(kwargs)
    return HyperParams(**base)


class TestHyperParams:
    def test_validation(self):
        with pytest.raises(ParameterError):
            make_params(gamma=0.0)
        with pytest.raises(ParameterError):
            make_params(rho_r=-1.0)
        with pytest.raises(ParameterError):
            make_params(sigma=1.5)
        with pytest.raises(ParameterError):
            make_params(eta_r=-0.1)
        with pytest.raises(ParameterError):
            make_params(alpha=-1e-9)
        with pytest.raises(ParameterError):
            make_params(t0=0.8, delta_t=0.4)

    def test_with_updates(self):
        p = make_params().with_updates(eta_r=1.0)
        assert p.eta_r == 1.0 and p.gamma == 2.0


class TestSpectralRadius:
    def test_identity(self):
        assert reservoir.spectral_radius(np.eye(3)) == 1.0

    def test_diagonal(self):
        assert reservoir.spectral_radius(np.diag([2.0, -5.0, 0.1])) == 5.0

    def test_non_square(self):
        with pytest.raises(ShapeError):
            reservoir.spectral_radius(np.ones((2, 3)))

    def test_matches_independent_eigensolver(self, rng):
        m = rng.normal(size=(20, 20))
        expected = np.max(np.abs(scipy.linalg.eigvals(m)))
        assert reservoir.spectral_radius(m) == pytest.approx(expected, abs=1e-9)


class TestInstantiate:
    def test_single_node_degenerate(self):
        m = instantiate(1, 1, make_params(k=0), seed=3)
        assert m.w_r.shape == (1, 1) and m.w_r[0, 0] == 0.0

    def test_sigma_one_full_input_connectivity(self):
        m = instantiate(100, 2, make_params(sigma=1.0), seed=9)
        assert np.all(m.w_in != 0)

    def test_spectral_radius_hits_target(self):
        m = instantiate(50, 1, make_params(rho_r=0.87), seed=11)
        assert reservoir.spectral_radius(m.w_r) == pytest.approx(0.87, rel=1e-6)

    def test_row_degree(self):
        m = instantiate(30, 1, make_params(k=7), seed=2)
        counts = np.sum(m.w_r != 0, axis=1)
        assert np.all(counts == 7)
        assert np.all(np.diag(m.w_r) == 0)

    def test_k_too_large(self):
        with pytest.raises(ParameterError):
            instantiate(5, 1, make_params(k=5), seed=0)

    def test_determinism(self):
        a = instantiate(40, 2, make_params(), seed=8)
        b = instantiate(40, 2, make_params(), seed=8)
        assert np.array_equal(a.w_in, b.w_in)
        assert np.array_equal(a.w_r, b.w_r)

    def test_spectral_radius_contract_across_sizes(self):
        # 200 instantiations over N in {10, 50, 100}
        params = make_params(rho_r=1.3)
        i = 0
        for n_nodes in (10, 50, 100):
            for _ in range(67 if n_nodes == 10 else 66):
                m = instantiate(n_nodes, 1, params, seed=1000 + i)
                radius = reservoir.spectral_radius(m.w_r)
                assert abs(radius - 1.3) / 1.3 < 1e-6
                i += 1
        assert i >= 199

    def test_input_sparsity_binomial(self):
        # nonzero counts over many draws follow Binomial(N*d, sigma)
        from scipy import stats

        n_nodes, d, sigma, draws = 5, 2, 0.6, 10_000
        counts = np.array([
            np.sum(instantiate(n_nodes, d, make_params(sigma=sigma, k=2),
                               seed=50_000 + i).w_in != 0)
            for i in range(draws)
        ])
        cells = n_nodes * d + 1
        observed = np.bincount(counts, minlength=cells)
        expected = stats.binom.pmf(np.arange(cells), n_nodes * d, sigma) * draws
        # merge sparse tail bins to keep the chi-squared approximation valid
        keep = expected >= 5
        observed = np.append(observed[keep], observed[~keep].sum())
        expected = np.append(expected[keep], expected[~keep].sum())
        _, p = stats.chisquare(observed, expected)
        assert p > 0.01


class TestActivation:
    def test_plain_tanh(self):
        x = np.array([0.5, -0.5])
        assert np.array_equal(activation(x, 0.0, 0.0), np.tanh(x))

    def test_all_squared_is_even(self):
        x = np.array([0.5, -0.5])
        out = activation(x, 1.0, 0.0)
        assert out[0] == out[1] == np.tanh(0.5) ** 2

    def test_half_squared_with_bias(self):
        out = activation(np.array([1.0, 1.0]), 0.5, 0.3)
        assert out[0] == pytest.approx(np.tanh(1.3) ** 2, rel=1e-15)
        assert out[1] == pytest.approx(np.tanh(1.3), rel=1e-15)

    def test_split_index_edges(self):
        assert reservoir.split_index(0.0, 10) == 0
        assert reservoir.split_index(1.0, 7) == 7
        assert reservoir.split_index(1e-9, 100) == 1
        assert reservoir.split_index(0.2, 5) == 1  # 0.2 * 5 is exactly 1.0
        assert reservoir.split_index(0.3, 10) == 3


class TestEulerStep:
    def test_pure_decay(self):
        m = instantiate(1, 1, make_params(gamma=1.0, k=0), seed=0)
        m.w_in[:] = 0.0
        m.state[:] = 1.0
        out = euler_step(m, np.array([0.0]), dt=0.1)
        assert out[0] == pytest.approx(0.9, abs=1e-15)

    def test_zero_fixed_point(self):
        m = instantiate(10, 1, make_params(), seed=1)
        euler_step(m, np.array([0.0]), dt=0.05)
        assert np.all(m.state == 0.0)

    def test_odd_symmetry_exact(self):
        params = make_params(eta_f=0.0, bias=0.0)
        rng = np.random.default_rng(5)
        u = rng.normal(size=(300, 2))
        m_pos = instantiate(30, 2, params, seed=4)
        m_neg = instantiate(30, 2, params, seed=4)
        t_pos = run(m_pos, u, dt=0.02, save_every=1)
        t_neg = run(m_neg, -u, dt=0.02, save_every=1)
        assert np.array_equal(t_neg.states, -t_pos.states)

    def test_divergence_detected(self):
        # gamma * dt > 2 makes the explicit Euler update unstable
        m = instantiate(5, 1, make_params(gamma=1.0, k=3), seed=6)
        m.state[:] = 1.0
        with pytest.raises(DivergenceError) as err:
            run(m, np.ones((5000, 1)), dt=2.5, save_every=1)
        assert err.value.step_index >= 1


class TestRun:
    def test_save_every_counts(self):
        m = instantiate(4, 1, make_params(k=2), seed=7)
        traj = run(m, np.zeros((10, 1)), dt=0.01, save_every=5)
        assert traj.states.shape == (2, 4)
        assert list(traj.step_indices) == [5, 10]

    def test_save_every_one(self):
        m = instantiate(4, 1, make_params(k=2), seed=7)
        traj = run(m, np.zeros((13, 1)), dt=0.01, save_every=1)
        assert traj.states.shape[0] == 13

    def test_zero_input_norm_decay(self):
        m = instantiate(20, 1, make_params(gamma=3.0), seed=8)
        m.state[:] = np.random.default_rng(0).normal(size=20)
        traj = run(m, np.zeros((1000, 1)), dt=0.01, save_every=1)
        norms = np.linalg.norm(traj.states, axis=1)
        assert np.all(np.diff(norms) <= 1e-15)
        assert norms[-1] < norms[0]

    def test_matches_single_steps(self):
        params = make_params()
        u = np.random.default_rng(3).normal(size=(20, 1))
        m_run = instantiate(8, 1, params, seed=9)
        m_step = instantiate(8, 1, params, seed=9)
        traj = run(m_run, u, dt=0.05, save_every=1)
        for row, sample in zip(traj.states, u):
            stepped = euler_step(m_step, sample, dt=0.05)
            assert np.array_equal(row, stepped)

    def test_trajectory_determinism(self):
        params = make_params()
        u = np.random.default_rng(1).normal(size=(50, 1))
        t1 = run(instantiate(15, 1, params, seed=2), u, dt=0.01, save_every=5)
        t2 = run(instantiate(15, 1, params, seed=2), u, dt=0.01, save_every=5)
        assert np.array_equal(t1.states, t2.states)

    def test_empty_inputs_rejected(self):
        m = instantiate(3, 1, make_params(k=2), seed=0)
        with pytest.raises(ParameterError):
            run(m, np.zeros((0, 1)), dt=0.01)


class TestReset:
    def test_zeroes_state(self):
        m = instantiate(6, 1, make_params(), seed=1)
        m.state[:] = 2.0
        reservoir.reset(m)
        assert np.all(m.state == 0.0)

    def test_zero_is_invariant_without_bias(self):
        m = instantiate(6, 1, make_params(), seed=1)
        reservoir.reset(m)
        run(m, np.zeros((100, 1)), dt=0.01)
        assert np.all(m.state == 0.0)

    def test_idempotent(self):
        m = instantiate(6, 1, make_params(), seed=1)
        reservoir.reset(reservoir.reset(m))
        assert np.all(m.state == 0.0)
