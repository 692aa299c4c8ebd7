"""Benchmark data generators: parity bit streams and Lorenz '63 trajectories.

Parity of an n-bit window is the product of its bits, so it depends only on
the count of +1 entries (the equivalence class l); flipping every bit flips
the parity exactly when n is odd. The helpers here exploit both facts to
build minimal training sequences and compact full-coverage test sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    DivergenceError,
    DomainError,
    InsufficientHistoryError,
    ParameterError,
)

LORENZ_INTERNAL_DT = 1e-4
LORENZ_TRANSIENT = 10.0

# Direct harmonic summation is exact enough up to this many coupons; beyond
# it the asymptotic expansion of H_M is already below float precision.
_HARMONIC_DIRECT_LIMIT = 1 << 22
_EULER_MASCHERONI = 0.5772156649015328606


@dataclass
class BitSeries:
    """A ±1 bit stream where each bit lasts one period T."""

    bits: np.ndarray
    bit_period: float = 1.0

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.int8)
        _check_pm1(self.bits)
        if self.bit_period <= 0:
            raise ParameterError(f"bit_period must be positive, got {self.bit_period}")

    def __len__(self) -> int:
        return len(self.bits)


@dataclass
class LorenzDataset:
    """Uniformly sampled Lorenz '63 data with reservoir input and target."""

    times: np.ndarray  # (S,)
    xyz: np.ndarray  # (S, 3)
    input: np.ndarray  # (S, 2): [x, y] or [x^2, y^2]
    target: np.ndarray  # (S,): z
    sample_dt: float = 0.0  # 0 derives the step from the time vector

    def __post_init__(self):
        if self.sample_dt == 0.0:
            self.sample_dt = float(self.times[1] - self.times[0])

    @property
    def duration(self) -> float:
        return len(self.times) * self.sample_dt


def _check_pm1(arr: np.ndarray) -> None:
    if arr.size and not np.all(np.abs(arr) == 1):
        raise DomainError("bit values must be exactly +1 or -1")


def parity(window) -> int:
    """Product of the n bits in a window; +1 or -1."""
    w = np.asarray(window)
    if w.size < 1:
        raise ParameterError("parity needs at least one bit")
    _check_pm1(w)
    return int(np.prod(w.astype(np.int64)))


def equivalence_class(window) -> int:
    """Count of +1 entries; windows with equal counts share their parity."""
    w = np.asarray(window)
    _check_pm1(w)
    return int(np.sum(w == 1))


def random_bits(length: int, seed=None) -> BitSeries:
    """Fair i.i.d. ±1 draws from a seeded generator."""
    if length < 1:
        raise ParameterError(f"length must be >= 1, got {length}")
    rng = np.random.default_rng(seed)
    return BitSeries(bits=rng.integers(0, 2, size=length).astype(np.int8) * 2 - 1)


def window_patterns(series: BitSeries, n: int) -> np.ndarray:
    """Pattern id of every length-n window (stride 1), oldest bit = lowest bit."""
    bits = series.bits
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if n > len(bits):
        raise ParameterError(f"n = {n} exceeds series length {len(bits)}")
    ones = (bits.astype(np.int64) + 1) // 2
    windows = np.lib.stride_tricks.sliding_window_view(ones, n)
    weights = 1 << np.arange(n, dtype=np.int64)
    return windows @ weights


def coverage_check(series: BitSeries, n: int) -> tuple[bool, np.ndarray]:
    """Whether all 2^n patterns occur among the sliding windows, plus counts."""
    ids = window_patterns(series, n)
    counts = np.bincount(ids, minlength=1 << n)
    return bool(np.all(counts > 0)), counts


def coupon_expectation(n: int) -> float:
    """Expected draws to see all 2^n patterns: 2^n * H(2^n).

    Summed smallest-terms-first for numerical stability. The caller rounds up
    when sizing training data.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    m = 1 << n
    if m <= _HARMONIC_DIRECT_LIMIT:
        harmonic = math.fsum(1.0 / j for j in range(m, 0, -1))
    else:
        harmonic = math.log(m) + _EULER_MASCHERONI + 1.0 / (2 * m) - 1.0 / (12 * m * m)
    return m * harmonic


def s_max(n: int) -> int:
    """Largest minority-bit count of an n-bit word: n // 2."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    return n // 2


def minimal_training_bits(n: int) -> BitSeries:
    """n bits of -1 followed by s_max bits of +1.

    The sliding n-windows of this series contain exactly one representative
    of each equivalence class l in {0, ..., s_max}.
    """
    s = s_max(n)
    return BitSeries(bits=np.concatenate([np.full(n, -1, np.int8), np.full(s, 1, np.int8)]))


def class_ladder_bits(n: int) -> BitSeries:
    """n bits of -1 followed by n bits of +1: windows cover every class once."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    return BitSeries(bits=np.concatenate([np.full(n, -1, np.int8), np.full(n, 1, np.int8)]))


def exhaustive_test_bits(n: int) -> BitSeries:
    """A series whose sliding n-windows enumerate each of the 2^n patterns once.

    Built from a binary de Bruijn sequence of order n (prefer-one greedy
    construction) with the first n - 1 bits appended for wraparound.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if n > 24:
        raise ParameterError(f"exhaustive test sets are impractical beyond n = 24")
    seen = np.zeros(1 << n, dtype=bool)
    state = 0
    seen[0] = True
    out = [0] * n
    mask = (1 << n) - 1
    for _ in range((1 << n) - n):
        nxt = ((state << 1) | 1) & mask
        if not seen[nxt]:
            seen[nxt] = True
            state = nxt
            out.append(1)
        else:
            nxt = (state << 1) & mask
            seen[nxt] = True
            state = nxt
            out.append(0)
    out.extend(out[: n - 1])
    return BitSeries(bits=np.asarray(out, np.int8) * 2 - 1)


def tapped_delay(series: BitSeries, n: int, word_index: int) -> np.ndarray:
    """The n most recent bits ending at word_index, newest first."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if word_index < n - 1:
        raise InsufficientHistoryError(
            f"word_index {word_index} has fewer than {n} bits of history"
        )
    return series.bits[word_index - n + 1 : word_index + 1][::-1].copy()


def lorenz_derivative(state) -> np.ndarray:
    """Lorenz '63 vector field with the standard parameters (10, 28, 8/3)."""
    x, y, z = np.asarray(state, dtype=np.float64)
    return np.array([10.0 * (y - x), x * (28.0 - z) - y, x * y - (8.0 / 3.0) * z])


def integrate_lorenz(x0, dt: float, n_steps: int) -> np.ndarray:
    """RK4 trajectory from x0, returned as (n_steps + 1, 3) including x0."""
    if dt <= 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    if n_steps < 0:
        raise ParameterError(f"n_steps must be nonnegative, got {n_steps}")
    start = np.asarray(x0, dtype=np.float64).reshape(3)
    out = np.empty((n_steps + 1, 3))
    bad = _kernels.lorenz_rk4(start, dt, n_steps, out)
    if bad >= 0:
        raise DivergenceError(
            f"non-finite Lorenz state at step {bad}", step_index=bad
        )
    return out


def make_inference_dataset(
    duration: float,
    sample_dt: float = 0.005,
    square_input: bool = False,
    seed=None,
) -> LorenzDataset:
    """Generate an on-attractor Lorenz dataset for the inference task.

    Integrates internally at dt = 1e-4 from a seeded uniform initial
    condition in [-10, 10]^3, discards a 10-time-unit transient, then
    resamples every sample_dt. Input columns are [x, y], or their elementwise
    squares with square_input; the target is z.
    """
    if duration <= 0:
        raise ParameterError(f"duration must be positive, got {duration}")
    ratio = round(sample_dt / LORENZ_INTERNAL_DT)
    if ratio < 1 or abs(ratio * LORENZ_INTERNAL_DT - sample_dt) > 1e-12:
        raise ParameterError(
            f"sample_dt must be a multiple of the internal step {LORENZ_INTERNAL_DT}"
        )
    n_samples = round(duration / sample_dt)
    if abs(n_samples * sample_dt - duration) > 1e-9:
        raise ParameterError("duration must be a multiple of sample_dt")

    rng = np.random.default_rng(seed)
    x0 = rng.uniform(-10.0, 10.0, size=3)
    transient_steps = round(LORENZ_TRANSIENT / LORENZ_INTERNAL_DT)
    total_steps = transient_steps + n_samples * ratio
    traj = integrate_lorenz(x0, LORENZ_INTERNAL_DT, total_steps)

    idx = transient_steps + np.arange(n_samples) * ratio
    xyz = traj[idx]
    times = LORENZ_TRANSIENT + np.arange(n_samples) * sample_dt
    inp = xyz[:, :2] ** 2 if square_input else xyz[:, :2].copy()
    return LorenzDataset(
        times=times, xyz=xyz, input=inp, target=xyz[:, 2].copy(),
        sample_dt=sample_dt,
    )
