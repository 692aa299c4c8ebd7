"""Numba-compiled inner loops for reservoir and Lorenz integration.

The drive loop is the only place node states are advanced, so every public
path (single step or full run) produces bit-identical trajectories. Loops are
compiled without fastmath: summation order is fixed, which keeps the exact
odd-symmetry guarantees of the dynamics intact.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def drive(
    state,
    wr_data,
    wr_indices,
    wr_indptr,
    w_in,
    inputs,
    gamma,
    dt,
    bias,
    n_squared_nodes,
    save_every,
    out_states,
    out_steps,
):
    """Advance the node ODE with forward Euler steps, saving periodically.

    state is mutated in place. The recurrent matrix is given in CSR form.
    Nodes with index < n_squared_nodes use the squared (even) activation.
    Returns the 1-based step index at which a non-finite value appeared,
    or -1 on success. Saved rows are written to out_states/out_steps.
    """
    n = state.shape[0]
    d = w_in.shape[1]
    n_steps = inputs.shape[0]
    pre = np.empty(n)
    s = 0
    for t in range(n_steps):
        for i in range(n):
            acc = bias
            for j in range(wr_indptr[i], wr_indptr[i + 1]):
                acc += wr_data[j] * state[wr_indices[j]]
            for j in range(d):
                acc += w_in[i, j] * inputs[t, j]
            pre[i] = acc
        for i in range(n):
            a = np.tanh(pre[i])
            if i < n_squared_nodes:
                a = a * a
            state[i] = state[i] + dt * (-gamma * state[i] + gamma * a)
        for i in range(n):
            if not np.isfinite(state[i]):
                return t + 1
        if (t + 1) % save_every == 0:
            for i in range(n):
                out_states[s, i] = state[i]
            out_steps[s] = t + 1
            s += 1
    return -1


@njit(cache=True)
def lorenz_rk4(x0, dt, n_steps, out):
    """Classic fourth-order Runge-Kutta for the Lorenz '63 vector field.

    out must have shape (n_steps + 1, 3); row 0 receives x0. Returns the
    1-based step index of the first non-finite state, or -1 on success.
    """
    x = x0[0]
    y = x0[1]
    z = x0[2]
    out[0, 0] = x
    out[0, 1] = y
    out[0, 2] = z
    for t in range(n_steps):
        k1x = 10.0 * (y - x)
        k1y = x * (28.0 - z) - y
        k1z = x * y - (8.0 / 3.0) * z

        x2 = x + 0.5 * dt * k1x
        y2 = y + 0.5 * dt * k1y
        z2 = z + 0.5 * dt * k1z
        k2x = 10.0 * (y2 - x2)
        k2y = x2 * (28.0 - z2) - y2
        k2z = x2 * y2 - (8.0 / 3.0) * z2

        x3 = x + 0.5 * dt * k2x
        y3 = y + 0.5 * dt * k2y
        z3 = z + 0.5 * dt * k2z
        k3x = 10.0 * (y3 - x3)
        k3y = x3 * (28.0 - z3) - y3
        k3z = x3 * y3 - (8.0 / 3.0) * z3

        x4 = x + dt * k3x
        y4 = y + dt * k3y
        z4 = z + dt * k3z
        k4x = 10.0 * (y4 - x4)
        k4y = x4 * (28.0 - z4) - y4
        k4z = x4 * y4 - (8.0 / 3.0) * z4

        x = x + dt * (k1x + 2.0 * k2x + 2.0 * k3x + k4x) / 6.0
        y = y + dt * (k1y + 2.0 * k2y + 2.0 * k3y + k4y) / 6.0
        z = z + dt * (k1z + 2.0 * k2z + 2.0 * k3z + k4z) / 6.0
        if not (np.isfinite(x) and np.isfinite(y) and np.isfinite(z)):
            return t + 1
        out[t + 1, 0] = x
        out[t + 1, 1] = y
        out[t + 1, 2] = z
    return -1
