import numpy as np
import pytest

from symrc import hyperopt
from symrc.errors import ParameterError, SymrcError
from symrc.hyperopt import SearchSpace, optimize

BOWL_SPACE = SearchSpace(bounds=(
    ("a", 0.0, 1.0), ("b", -2.0, 2.0), ("c", 10.0, 30.0), ("d", 0.0, 0.5),
))
BOWL_CENTER = {"a": 0.3, "b": 0.8, "c": 22.0, "d": 0.35}


def bowl(point: dict) -> float:
    """Convex bowl; distance measured in the unit cube."""
    total = 0.0
    for (name, lo, hi) in BOWL_SPACE.bounds:
        total += ((point[name] - BOWL_CENTER[name]) / (hi - lo)) ** 2
    return total


def unit_distance_to_center(params: dict) -> float:
    return np.sqrt(bowl(params))


class TestSearchSpace:
    def test_presets_match_scanned_ranges(self):
        serial = dict(zip(SearchSpace.parity_serial().names,
                          SearchSpace.parity_serial().bounds))
        assert SearchSpace.parity_serial().bounds == (
            ("t0", 0.0, 0.5), ("delta_t", 0.05, 0.5), ("gamma", 0.1, 5.0),
            ("rho_r", 0.1, 2.0), ("rho_in", 0.1, 1.0), ("sigma", 0.1, 1.0),
        )
        assert SearchSpace.parity_parallel().bounds == (
            ("t0", 0.0, 1.0), ("delta_t", 0.05, 1.0), ("gamma", 0.1, 10.0),
            ("rho_r", 0.1, 10.0), ("rho_in", 0.1, 1.0), ("sigma", 0.1, 1.0),
        )
        assert SearchSpace.inference().bounds == (
            ("gamma", 0.01, 20.0), ("rho_r", 0.001, 5.0),
            ("rho_in", 0.001, 1.0), ("sigma", 0.01, 1.0),
        )

    def test_invalid_bounds(self):
        with pytest.raises(ParameterError):
            SearchSpace(bounds=(("x", 1.0, 1.0),))
        with pytest.raises(ParameterError):
            SearchSpace(bounds=(("x", 0.0, np.inf),))

    def test_window_constraint_flag(self):
        assert SearchSpace.parity_parallel().window_constrained
        assert not SearchSpace.inference().window_constrained


class TestOptimize:
    def test_convex_bowl_three_seeds(self):
        for seed in (0, 1, 2):
            best, trace = optimize(bowl, BOWL_SPACE, budget=60, seed=seed)
            assert unit_distance_to_center(best) < 0.05
            assert trace.budget_used == 60

    def test_budget_equals_initial_is_pure_random(self):
        best, trace = optimize(bowl, BOWL_SPACE, budget=10, seed=3, n_initial=10)
        assert trace.budget_used == 10
        assert trace.values[trace.best_index] == min(trace.values)

    def test_constant_objective(self):
        best, trace = optimize(lambda p: 5.0, BOWL_SPACE, budget=12, seed=4)
        assert np.all(trace.values == 5.0)
        assert np.all(trace.best_so_far == 5.0)

    def test_budget_below_initial_points(self):
        with pytest.raises(ParameterError):
            optimize(bowl, BOWL_SPACE, budget=5, seed=0, n_initial=10)

    def test_monotone_best_so_far(self):
        _, trace = optimize(bowl, BOWL_SPACE, budget=25, seed=5)
        assert np.all(np.diff(trace.best_so_far) <= 0)

    def test_points_inside_box(self):
        _, trace = optimize(bowl, BOWL_SPACE, budget=30, seed=6)
        lo, hi = BOWL_SPACE.lower, BOWL_SPACE.upper
        assert np.all(trace.points >= lo) and np.all(trace.points <= hi)

    def test_window_constraint_respected(self):
        space = SearchSpace.parity_parallel()

        def objective(p):
            return (p["gamma"] - 5.0) ** 2

        _, trace = optimize(objective, space, budget=30, seed=7)
        i0 = space.names.index("t0")
        i1 = space.names.index("delta_t")
        assert np.all(trace.points[:, i0] + trace.points[:, i1] <= 1.0 + 1e-9)

    def test_deterministic_trace(self):
        a = optimize(bowl, BOWL_SPACE, budget=20, seed=8)[1]
        b = optimize(bowl, BOWL_SPACE, budget=20, seed=8)[1]
        assert np.array_equal(a.points, b.points)
        assert np.array_equal(a.values, b.values)

    def test_nonfinite_objective_penalized(self):
        calls = []

        def sometimes_nan(p):
            calls.append(p)
            return np.nan if len(calls) % 3 == 0 else bowl(p)

        best, trace = optimize(
            sometimes_nan, BOWL_SPACE, budget=15, seed=9, penalty=123.0
        )
        assert trace.budget_used == 15
        assert np.any(trace.values == 123.0)
        assert trace.values[trace.best_index] < 123.0

    def test_objective_errors_penalized(self):
        def sometimes_raises(p):
            if p["a"] > 0.5:
                raise SymrcError("boom")
            return bowl(p)

        _, trace = optimize(
            sometimes_raises, BOWL_SPACE, budget=15, seed=10, penalty=9.0
        )
        assert trace.budget_used == 15
        assert np.any(trace.values == 9.0)

    def test_early_stop(self):
        best, trace = optimize(
            lambda p: 0.0, BOWL_SPACE, budget=40, seed=11, stop_at=0.0
        )
        assert trace.budget_used == 1


class TestSurrogate:
    def test_posterior_interpolates_observations(self, rng):
        x = rng.random((25, 3))
        y = np.sin(3 * x[:, 0]) + x[:, 1] ** 2 - 0.5 * x[:, 2]
        gp = hyperopt._fit_surrogate(x, y, np.random.default_rng(0))
        mu = gp.predict(x)
        assert np.max(np.abs(mu - y)) < 1e-4
