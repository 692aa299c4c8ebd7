"""Sequential Gaussian-process Bayesian optimization over hyperparameter boxes.

Points are scaled to the unit cube internally. The first ``n_initial`` points
come from a seeded Latin hypercube; afterwards each proposal maximizes
expected improvement under a Matern-5/2 GP surrogate with per-dimension
length scales, evaluated on a seeded candidate cloud plus a local refinement
around the best candidate. When both t0 and delta_t are searched, proposals
respect t0 + delta_t <= T by rejection.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import norm, qmc
from sklearn.gaussian_process import GaussianProcessRegressor
from sklearn.gaussian_process.kernels import ConstantKernel, Matern

from .errors import ParameterError, SymrcError

DEFAULT_BUDGET = 60
DEFAULT_INITIAL_POINTS = 10
_NUGGET = 1e-6
_N_CANDIDATES = 1000
_REFINE_RADII = (0.1, 0.03, 0.01)
_REFINE_SAMPLES = 100


@dataclass(frozen=True)
class SearchSpace:
    """Named box bounds over a subset of the tunable hyperparameters."""

    bounds: tuple  # of (name, lower, upper)

    def __post_init__(self):
        seen = set()
        for name, lo, hi in self.bounds:
            if name in seen:
                raise ParameterError(f"duplicate parameter {name!r}")
            seen.add(name)
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ParameterError(f"bounds for {name!r} must be finite")
            if not lo < hi:
                raise ParameterError(f"need lower < upper for {name!r}")

    @property
    def names(self) -> tuple:
        return tuple(b[0] for b in self.bounds)

    @property
    def lower(self) -> np.ndarray:
        return np.array([b[1] for b in self.bounds])

    @property
    def upper(self) -> np.ndarray:
        return np.array([b[2] for b in self.bounds])

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def window_constrained(self) -> bool:
        """Whether the t0 + delta_t <= T constraint is active."""
        return "t0" in self.names and "delta_t" in self.names

    def to_params(self, point: np.ndarray) -> dict:
        return {name: float(v) for name, v in zip(self.names, point)}

    def feasible(self, unit_points: np.ndarray) -> np.ndarray:
        """Constraint mask for an array of unit-cube points."""
        if not self.window_constrained:
            return np.ones(unit_points.shape[0], dtype=bool)
        scaled = self.lower + unit_points * (self.upper - self.lower)
        i0 = self.names.index("t0")
        i1 = self.names.index("delta_t")
        return scaled[:, i0] + scaled[:, i1] <= 1.0 + 1e-12

    @classmethod
    def parity_serial(cls) -> "SearchSpace":
        return cls(
            bounds=(
                ("t0", 0.0, 0.5),
                ("delta_t", 0.05, 0.5),
                ("gamma", 0.1, 5.0),
                ("rho_r", 0.1, 2.0),
                ("rho_in", 0.1, 1.0),
                ("sigma", 0.1, 1.0),
            )
        )

    @classmethod
    def parity_parallel(cls) -> "SearchSpace":
        return cls(
            bounds=(
                ("t0", 0.0, 1.0),
                ("delta_t", 0.05, 1.0),
                ("gamma", 0.1, 10.0),
                ("rho_r", 0.1, 10.0),
                ("rho_in", 0.1, 1.0),
                ("sigma", 0.1, 1.0),
            )
        )

    @classmethod
    def inference(cls) -> "SearchSpace":
        return cls(
            bounds=(
                ("gamma", 0.01, 20.0),
                ("rho_r", 0.001, 5.0),
                ("rho_in", 0.001, 1.0),
                ("sigma", 0.01, 1.0),
            )
        )

    @classmethod
    def preset(cls, task: str) -> "SearchSpace":
        presets = {
            "parity-serial": cls.parity_serial,
            "parity-parallel": cls.parity_parallel,
            "inference": cls.inference,
        }
        if task not in presets:
            raise ParameterError(f"unknown search-space preset {task!r}")
        return presets[task]()


@dataclass
class OptimizationTrace:
    """Everything evaluated during one optimization run."""

    points: np.ndarray  # (B, D), original scale
    values: np.ndarray  # (B,)
    best_index: int
    seed: Optional[int]
    budget: int
    budget_used: int

    @property
    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate(self.values)


def optimize(
    objective: Callable[[dict], float],
    space: SearchSpace,
    budget: int = DEFAULT_BUDGET,
    seed: Optional[int] = None,
    n_initial: int = DEFAULT_INITIAL_POINTS,
    stop_at: Optional[float] = None,
    penalty: Optional[float] = None,
) -> tuple[dict, OptimizationTrace]:
    """Minimize ``objective`` over ``space`` within ``budget`` evaluations.

    ``objective`` receives a dict keyed by the space's parameter names. A
    non-finite return value (or a SymrcError raised by the objective) is
    recorded as ``penalty`` — 10x the running worst finite value when penalty
    is None — and optimization continues. With ``stop_at`` set, the run ends
    early once a value <= stop_at is observed; the trace reports the budget
    actually used.
    """
    if budget < n_initial:
        raise ParameterError(
            f"budget {budget} is smaller than the initial design size {n_initial}"
        )
    if n_initial < 1:
        raise ParameterError("n_initial must be >= 1")

    rng = np.random.default_rng(seed)
    unit_points = _initial_design(space, n_initial, rng)

    xs: list[np.ndarray] = []
    ys: list[float] = []

    def evaluate(unit_x: np.ndarray) -> float:
        point = space.lower + unit_x * (space.upper - space.lower)
        try:
            value = float(objective(space.to_params(point)))
        except SymrcError:
            value = math.nan
        if not math.isfinite(value):
            value = _penalty_value(ys, penalty)
        xs.append(unit_x)
        ys.append(value)
        return value

    stopped = False
    for unit_x in unit_points:
        value = evaluate(unit_x)
        if stop_at is not None and value <= stop_at:
            stopped = True
            break

    while not stopped and len(ys) < budget:
        unit_x = _propose(np.array(xs), np.array(ys), space, rng)
        value = evaluate(unit_x)
        if stop_at is not None and value <= stop_at:
            break

    points = space.lower + np.array(xs) * (space.upper - space.lower)
    values = np.array(ys)
    best = int(np.argmin(values))
    trace = OptimizationTrace(
        points=points,
        values=values,
        best_index=best,
        seed=seed,
        budget=budget,
        budget_used=len(values),
    )
    return space.to_params(points[best]), trace


def _penalty_value(ys: Sequence[float], penalty: Optional[float]) -> float:
    if penalty is not None:
        return float(penalty)
    finite = [y for y in ys if math.isfinite(y)]
    return 10.0 * max(finite) if finite else 1e6


def _initial_design(space: SearchSpace, n: int, rng) -> np.ndarray:
    """Seeded Latin hypercube, constraint-filtered and refilled as needed."""
    sampler = qmc.LatinHypercube(d=space.dim, seed=rng)
    points = sampler.random(n)
    points = points[space.feasible(points)]
    while len(points) < n:
        extra = sampler.random(n)
        extra = extra[space.feasible(extra)]
        points = np.vstack([points, extra])
    return points[:n]


def _fit_surrogate(x: np.ndarray, y: np.ndarray, rng) -> GaussianProcessRegressor:
    """Matern-5/2 GP with per-dimension length scales and a small nugget."""
    dim = x.shape[1]
    kernel = ConstantKernel(1.0, (1e-3, 1e3)) * Matern(
        length_scale=np.ones(dim), length_scale_bounds=(1e-2, 1e2), nu=2.5
    )
    gp = GaussianProcessRegressor(
        kernel=kernel,
        alpha=_NUGGET,
        normalize_y=True,
        n_restarts_optimizer=2,
        random_state=int(rng.integers(2**31 - 1)),
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        gp.fit(x, y)
    return gp


def _expected_improvement(
    gp: GaussianProcessRegressor, candidates: np.ndarray, y_best: float
) -> np.ndarray:
    mu, sd = gp.predict(candidates, return_std=True)
    sd = np.maximum(sd, 1e-12)
    z = (y_best - mu) / sd
    return (y_best - mu) * norm.cdf(z) + sd * norm.pdf(z)


def _propose(
    x: np.ndarray, y: np.ndarray, space: SearchSpace, rng
) -> np.ndarray:
    gp = _fit_surrogate(x, y, rng)
    y_best = float(np.min(y))

    candidates = _feasible_uniform(space, _N_CANDIDATES, rng)
    ei = _expected_improvement(gp, candidates, y_best)
    best = candidates[int(np.argmax(ei))]
    best_ei = float(np.max(ei))

    for radius in _REFINE_RADII:
        local = best + rng.normal(0.0, radius, size=(_REFINE_SAMPLES, space.dim))
        np.clip(local, 0.0, 1.0, out=local)
        local = local[space.feasible(local)]
        if local.size == 0:
            continue
        ei_local = _expected_improvement(gp, local, y_best)
        i = int(np.argmax(ei_local))
        if ei_local[i] > best_ei:
            best_ei = float(ei_local[i])
            best = local[i]
    return best


def _feasible_uniform(space: SearchSpace, n: int, rng) -> np.ndarray:
    points = rng.random((n, space.dim))
    points = points[space.feasible(points)]
    while len(points) < n:
        extra = rng.random((n, space.dim))
        points = np.vstack([points, extra[space.feasible(extra)]])
    return points[:n]
