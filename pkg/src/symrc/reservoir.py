"""Random reservoir instantiation and continuous-time node dynamics.

The node vector r follows the leaky-tanh ODE

    dr/dt = -gamma * r + gamma * f(W_r r + W_in u + b),

integrated with forward Euler. A fraction ``eta_f`` of the nodes (the lowest
indices) uses the even activation tanh^2 instead of tanh; with ``eta_f = 0``
and ``b = 0`` the map (r, u) -> next r commutes exactly with global negation,
which is the symmetry the rest of the package builds on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix

from . import _kernels
from .errors import (
    DivergenceError,
    InstantiationError,
    ParameterError,
    ShapeError,
)

_REDRAW_LIMIT = 8


def split_index(eta: float, n: int) -> int:
    """Number of leading nodes selected by a fraction ``eta`` of ``n``.

    Uses ceil so that eta = 1 selects every node and any eta > 0 selects at
    least one. A small downward nudge guards against float noise in eta * n
    promoting an exact integer product to the next integer.
    """
    if eta <= 0.0:
        return 0
    return max(1, math.ceil(eta * n - 1e-9))


@dataclass(frozen=True)
class HyperParams:
    """Tunable scalars governing one reservoir instance.

    Attributes:
        gamma: node decay rate (1/time).
        rho_r: target spectral radius of the recurrent matrix.
        rho_in: variance of the normal distribution for input weights.
        sigma: probability that an input weight is nonzero.
        k: incoming recurrent connections per node.
        bias: scalar added inside the activation.
        eta_f: fraction of nodes with squared (tanh^2) activation.
        eta_r: fraction of nodes squared in the readout feature map.
        alpha: ridge regularization for readout training.
        t0: measurement-window start, in units of the bit period T.
        delta_t: measurement-window length, in units of T.
    """

    gamma: float
    rho_r: float
    rho_in: float
    sigma: float
    k: int
    bias: float = 0.0
    eta_f: float = 0.0
    eta_r: float = 0.0
    alpha: float = 1e-6
    t0: float = 0.0
    delta_t: float = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ParameterError(f"gamma must be positive, got {self.gamma}")
        if not self.rho_r > 0:
            raise ParameterError(f"rho_r must be positive, got {self.rho_r}")
        if not self.rho_in > 0:
            raise ParameterError(f"rho_in must be positive, got {self.rho_in}")
        if not 0.0 <= self.sigma <= 1.0:
            raise ParameterError(f"sigma must be in [0, 1], got {self.sigma}")
        if not 0.0 <= self.eta_f <= 1.0:
            raise ParameterError(f"eta_f must be in [0, 1], got {self.eta_f}")
        if not 0.0 <= self.eta_r <= 1.0:
            raise ParameterError(f"eta_r must be in [0, 1], got {self.eta_r}")
        if self.alpha < 0:
            raise ParameterError(f"alpha must be nonnegative, got {self.alpha}")
        if self.k < 0:
            raise ParameterError(f"k must be nonnegative, got {self.k}")
        if self.t0 < 0 or self.delta_t < 0:
            raise ParameterError("t0 and delta_t must be nonnegative")
        if self.t0 + self.delta_t > 1.0 + 1e-12:
            raise ParameterError(
                f"measurement window t0 + delta_t = {self.t0 + self.delta_t} "
                "exceeds the bit period"
            )

    def with_updates(self, **kwargs) -> "HyperParams":
        return replace(self, **kwargs)


@dataclass
class Trajectory:
    """States saved during a run, with their 1-based Euler step indices."""

    states: np.ndarray  # (S, N)
    step_indices: np.ndarray  # (S,)


@dataclass
class ReservoirMachine:
    """An instantiated reservoir: fixed weights plus a mutable state vector."""

    n_nodes: int
    w_in: np.ndarray  # (N, d)
    w_r: np.ndarray  # (N, N)
    state: np.ndarray  # (N,)
    params: HyperParams
    seed: int
    _csr: Optional[tuple] = field(default=None, repr=False, compare=False)

    @property
    def input_dim(self) -> int:
        return self.w_in.shape[1]

    def csr_parts(self) -> tuple:
        """CSR arrays of w_r, cached: weights never change after instantiation."""
        if self._csr is None:
            c = csr_matrix(self.w_r)
            self._csr = (
                np.ascontiguousarray(c.data, dtype=np.float64),
                np.ascontiguousarray(c.indices, dtype=np.int64),
                np.ascontiguousarray(c.indptr, dtype=np.int64),
            )
        return self._csr


def spectral_radius(matrix: np.ndarray) -> float:
    """Largest eigenvalue magnitude, from a dense eigensolver."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"spectral_radius needs a square matrix, got shape {m.shape}")
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(m))))


def instantiate(
    n_nodes: int, input_dim: int, params: HyperParams, seed: int
) -> ReservoirMachine:
    """Draw random input and recurrent weights for a new reservoir.

    Input weights are i.i.d. zero-mean normal with variance rho_in, each
    zeroed independently with probability 1 - sigma. Each node receives k
    incoming connections from distinct other nodes (uniform values before a
    global rescale to spectral radius rho_r). A single-node reservoir has no
    other nodes, so w_r is the 1x1 zero matrix and the rescale is skipped.
    """
    if n_nodes < 1:
        raise ParameterError(f"n_nodes must be >= 1, got {n_nodes}")
    if input_dim < 1:
        raise ParameterError(f"input_dim must be >= 1, got {input_dim}")
    if n_nodes > 1 and params.k >= n_nodes:
        raise ParameterError(
            f"k = {params.k} must be < n_nodes = {n_nodes} "
            "(self-connections are excluded)"
        )
    if n_nodes > 1 and params.k < 1:
        raise ParameterError("k must be >= 1 for multi-node reservoirs")

    rng = np.random.default_rng(seed)

    w_in = rng.normal(0.0, math.sqrt(params.rho_in), size=(n_nodes, input_dim))
    keep = rng.random(size=(n_nodes, input_dim)) < params.sigma
    w_in = np.where(keep, w_in, 0.0)

    if n_nodes == 1:
        w_r = np.zeros((1, 1))
    else:
        w_r = _draw_recurrent(rng, n_nodes, params.k, params.rho_r)

    return ReservoirMachine(
        n_nodes=n_nodes,
        w_in=w_in,
        w_r=w_r,
        state=np.zeros(n_nodes),
        params=params,
        seed=seed,
    )


def _draw_recurrent(rng, n_nodes: int, k: int, rho_r: float) -> np.ndarray:
    for _ in range(_REDRAW_LIMIT):
        w_r = np.zeros((n_nodes, n_nodes))
        for i in range(n_nodes):
            # k distinct sources from the other n-1 nodes
            src = rng.choice(n_nodes - 1, size=k, replace=False)
            src = np.where(src >= i, src + 1, src)
            w_r[i, src] = rng.uniform(-1.0, 1.0, size=k)
        radius = spectral_radius(w_r)
        if radius > 0.0:
            w_r *= rho_r / radius
            return w_r
    raise InstantiationError(
        f"recurrent matrix had zero spectral radius after {_REDRAW_LIMIT} draws"
    )


def activation(pre_activation: np.ndarray, eta_f: float, bias: float) -> np.ndarray:
    """tanh(x + bias), squared for the leading ceil(eta_f * N) nodes."""
    pre = np.asarray(pre_activation, dtype=np.float64)
    out = np.tanh(pre + bias)
    n_sq = split_index(eta_f, pre.shape[-1])
    if n_sq:
        out[..., :n_sq] **= 2
    return out


def euler_step(machine: ReservoirMachine, u: np.ndarray, dt: float) -> np.ndarray:
    """One forward Euler step of the node ODE; mutates and returns the state."""
    if dt <= 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    vec = np.atleast_1d(np.asarray(u, dtype=np.float64))
    if vec.size != machine.input_dim:
        raise ShapeError(
            f"input must have {machine.input_dim} components, got {vec.size}"
        )
    _drive(machine, vec.reshape(1, -1), dt, save_every=1, step_offset=0)
    return machine.state


def run(
    machine: ReservoirMachine,
    inputs: np.ndarray,
    dt: float,
    save_every: int = 1,
) -> Trajectory:
    """Drive the reservoir with one Euler step per input sample.

    The state is saved after every ``save_every`` steps; saved step indices
    are 1-based, so 10 steps at save_every=5 record steps 5 and 10.
    """
    if dt <= 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    if save_every < 1:
        raise ParameterError(f"save_every must be >= 1, got {save_every}")
    arr = np.asarray(inputs, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[1] != machine.input_dim:
        raise ShapeError(
            f"inputs must be (n_steps, {machine.input_dim}), got {arr.shape}"
        )
    if arr.shape[0] == 0:
        raise ParameterError("inputs must be nonempty")
    return _drive(machine, np.ascontiguousarray(arr), dt, save_every, step_offset=0)


def _drive(
    machine: ReservoirMachine,
    inputs: np.ndarray,
    dt: float,
    save_every: int,
    step_offset: int,
) -> Trajectory:
    n_steps = inputs.shape[0]
    n_saved = n_steps // save_every
    out_states = np.empty((n_saved, machine.n_nodes))
    out_steps = np.empty(n_saved, dtype=np.int64)
    data, idx, indptr = machine.csr_parts()
    p = machine.params
    bad = _kernels.drive(
        machine.state,
        data,
        idx,
        indptr,
        machine.w_in,
        inputs,
        p.gamma,
        dt,
        p.bias,
        split_index(p.eta_f, machine.n_nodes),
        save_every,
        out_states,
        out_steps,
    )
    if bad >= 0:
        raise DivergenceError(
            f"non-finite reservoir state at step {bad + step_offset}",
            step_index=bad + step_offset,
        )
    return Trajectory(states=out_states, step_indices=out_steps + step_offset)


def reset(machine: ReservoirMachine) -> ReservoirMachine:
    """Zero the node state in place; weights are untouched."""
    machine.state[:] = 0.0
    return machine
