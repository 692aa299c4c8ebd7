"""End-to-end experiment pipelines: serial parity, parallel parity, inference.

Classification rule for parity: the two readout components are averaged over
the measurement window [t0, t0 + delta_t] of each bit period; the predicted
parity is +1 when the first average is at least the second, else -1.

A constant feature column is appended to the readout features whenever the
configuration already breaks the reservoir's odd input-output symmetry
(eta_r > 0, eta_f > 0, a nonzero bias, or squared inputs). A constant is an
even feature, so it is admissible exactly in those cases; purely odd
configurations omit it so their odd symmetry stays exact. Without it, words
that sum to zero under the parallel broadcast drive a zero trajectory and
would be unclassifiable in principle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import readout, reservoir, tasks
from .errors import ConfigurationError, NormalizationError, ShapeError
from .readout import FeatureTrajectory, ReadoutWeights
from .reservoir import HyperParams, ReservoirMachine
from .tasks import BitSeries, LorenzDataset

SERIAL_DT = 0.01
SERIAL_SAVE_EVERY = 5
SERIAL_K = 10
PARALLEL_DT = 0.001
PARALLEL_SAVE_EVERY = 50
INFERENCE_K = 5
DEFAULT_WASHOUT = 1.0

_WINDOW_EPS = 1e-9


def ber(predicted, truth) -> float:
    """Fraction of mismatched ±1 labels."""
    p = np.asarray(predicted)
    t = np.asarray(truth)
    if p.shape != t.shape:
        raise ShapeError(f"length mismatch: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise ShapeError("empty sequences")
    return float(np.mean(p != t))


def nrmse(predicted, truth) -> float:
    """Root-mean-square error divided by the standard deviation of the truth.

    Under this normalization, predicting the mean of the truth scores 1.0.
    """
    p = np.asarray(predicted, dtype=np.float64)
    t = np.asarray(truth, dtype=np.float64)
    if p.shape != t.shape:
        raise ShapeError(f"length mismatch: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise ShapeError("empty sequences")
    scale = float(np.std(t))
    if scale == 0.0:
        raise NormalizationError("truth series is constant; NRMSE undefined")
    return float(np.sqrt(np.mean((p - t) ** 2)) / scale)


def uses_constant_feature(params: HyperParams, square_input: bool = False) -> bool:
    """True when the configuration is not purely odd under input negation."""
    return (
        params.eta_r > 0.0
        or params.eta_f > 0.0
        or params.bias != 0.0
        or square_input
    )


@dataclass
class ParityPipelineConfig:
    """One parity experiment: task order, scheme, reservoir size, data."""

    n: int
    scheme: str  # "serial" | "parallel"
    n_nodes: int
    params: HyperParams
    train_bits: BitSeries
    test_bits: BitSeries
    seed: int
    dt: float = 0.0  # integration step in units of T; 0 selects the scheme default
    save_every: int = 0

    def __post_init__(self):
        if self.scheme not in ("serial", "parallel"):
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        if self.n < 1:
            raise ConfigurationError(f"n must be >= 1, got {self.n}")
        if self.n_nodes < 1:
            raise ConfigurationError(f"n_nodes must be >= 1, got {self.n_nodes}")
        if self.dt == 0.0:
            self.dt = SERIAL_DT if self.scheme == "serial" else PARALLEL_DT
        if self.save_every == 0:
            self.save_every = (
                SERIAL_SAVE_EVERY if self.scheme == "serial" else PARALLEL_SAVE_EVERY
            )
        expected = (
            (SERIAL_DT, SERIAL_SAVE_EVERY)
            if self.scheme == "serial"
            else (PARALLEL_DT, PARALLEL_SAVE_EVERY)
        )
        if (self.dt, self.save_every) != expected:
            raise ConfigurationError(
                f"{self.scheme} scheme requires dt = {expected[0]}T and "
                f"save_every = {expected[1]}, got ({self.dt}, {self.save_every})"
            )
        if self.params.t0 + self.params.delta_t > 1.0 + 1e-12:
            raise ConfigurationError("measurement window exceeds the bit period")
        if len(self.train_bits) < self.n or len(self.test_bits) < self.n:
            raise ConfigurationError("bit series shorter than the parity order")

    @classmethod
    def serial(cls, n, n_nodes, params, train_bits, test_bits, seed):
        """Serial-input configuration; clamps k to min(10, N - 1)."""
        k = min(SERIAL_K, n_nodes - 1) if n_nodes > 1 else 0
        return cls(
            n=n,
            scheme="serial",
            n_nodes=n_nodes,
            params=params.with_updates(k=k),
            train_bits=train_bits,
            test_bits=test_bits,
            seed=seed,
        )

    @classmethod
    def parallel(cls, n, n_nodes, params, train_bits, test_bits, seed):
        """Tapped-delay parallel configuration; k = 1 (0 for a single node)."""
        k = 1 if n_nodes > 1 else 0
        return cls(
            n=n,
            scheme="parallel",
            n_nodes=n_nodes,
            params=params.with_updates(k=k),
            train_bits=train_bits,
            test_bits=test_bits,
            seed=seed,
        )


@dataclass
class ParityResult:
    ber: float
    predictions: np.ndarray  # per classified word, ±1
    truth: np.ndarray
    word_indices: np.ndarray  # bit index each word ends at
    weights: ReadoutWeights


@dataclass
class InferencePipelineConfig:
    """One Lorenz inference run; the reservoir steps once per data sample."""

    n_nodes: int
    params: HyperParams
    train: LorenzDataset
    test: LorenzDataset
    seed: int
    square_input: bool = False
    washout: float = DEFAULT_WASHOUT  # time units discarded from features
    reservoir_dt: float = 0.0  # 0 adopts the dataset sample time

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ConfigurationError(f"n_nodes must be >= 1, got {self.n_nodes}")
        if self.reservoir_dt == 0.0:
            self.reservoir_dt = self.train.sample_dt
        for name, ds in (("train", self.train), ("test", self.test)):
            if abs(ds.sample_dt - self.reservoir_dt) > 1e-12:
                raise ConfigurationError(
                    f"{name} dataset sample_dt {ds.sample_dt} != reservoir_dt "
                    f"{self.reservoir_dt}"
                )
            if self.washout >= ds.duration:
                raise ConfigurationError(
                    f"washout {self.washout} is not shorter than the {name} "
                    f"duration {ds.duration}"
                )
        if self.washout < 0:
            raise ConfigurationError("washout must be nonnegative")

    @classmethod
    def standard(cls, n_nodes, params, train, test, seed, square_input=False,
                 washout=DEFAULT_WASHOUT):
        """Inference configuration with the fixed topology k = 5."""
        k = min(INFERENCE_K, n_nodes - 1) if n_nodes > 1 else 0
        return cls(
            n_nodes=n_nodes,
            params=params.with_updates(k=k),
            train=train,
            test=test,
            seed=seed,
            square_input=square_input,
            washout=washout,
        )


@dataclass
class InferenceResult:
    nrmse: float
    inferred: np.ndarray  # post-washout test-phase readout
    target: np.ndarray
    weights: ReadoutWeights


def _window_positions(config: ParityPipelineConfig) -> np.ndarray:
    """Saved relative step numbers (within one period) inside the window."""
    steps_per_bit = round(1.0 / config.dt)
    rel = np.arange(config.save_every, steps_per_bit + 1, config.save_every)
    pos = rel * config.dt
    lo = config.params.t0 - _WINDOW_EPS
    hi = config.params.t0 + config.params.delta_t + _WINDOW_EPS
    chosen = rel[(pos >= lo) & (pos <= hi)]
    if chosen.size == 0:
        raise ConfigurationError(
            f"no saved sample falls inside the measurement window "
            f"[{config.params.t0}, {config.params.t0 + config.params.delta_t}]"
        )
    return chosen


def _parity_targets(parities: np.ndarray) -> np.ndarray:
    """Encode ±1 parity labels as (1, 0) / (0, 1) target rows."""
    targets = np.zeros((len(parities), 2))
    targets[parities == 1, 0] = 1.0
    targets[parities == -1, 1] = 1.0
    return targets


def _classify(v_bar: np.ndarray) -> np.ndarray:
    """+1 where the first averaged component is at least the second."""
    return np.where(v_bar[:, 0] >= v_bar[:, 1], 1, -1).astype(np.int8)


def _window_parities(bits: np.ndarray, n: int) -> np.ndarray:
    """Parity of every sliding n-window of a ±1 array."""
    windows = np.lib.stride_tricks.sliding_window_view(bits.astype(np.int64), n)
    return np.prod(windows, axis=1)


def run_parity_serial(config: ParityPipelineConfig) -> ParityResult:
    """Serial scheme: each bit drives the reservoir for one period, no resets.

    The word classified at bit index t is the window of bits t-n+1 .. t, with
    the measurement window inside bit period t. The first n-1 words of both
    series are skipped (insufficient history).
    """
    if config.scheme != "serial":
        raise ConfigurationError("run_parity_serial needs a serial configuration")
    _window_positions(config)  # validates the window is measurable

    machine = reservoir.instantiate(config.n_nodes, 1, config.params, config.seed)
    use_const = uses_constant_feature(config.params)

    train_feats = _serial_features(machine, config, config.train_bits, use_const)
    train_parity = _window_parities(config.train_bits.bits, config.n)

    word_ids = train_feats.word_ids
    keep = word_ids >= config.n - 1
    g = train_feats.features[keep]
    labels = train_parity[word_ids[keep] - (config.n - 1)]
    weights = readout.train_ridge(g, _parity_targets(labels), config.params.alpha)

    test_feats = _serial_features(machine, config, config.test_bits, use_const)
    preds, word_idx = _classify_words(test_feats, weights, first_word=config.n - 1)
    truth = _window_parities(config.test_bits.bits, config.n)
    return ParityResult(
        ber=ber(preds, truth),
        predictions=preds,
        truth=truth,
        word_indices=word_idx,
        weights=weights,
    )


def _serial_features(
    machine: ReservoirMachine,
    config: ParityPipelineConfig,
    series: BitSeries,
    use_const: bool,
) -> FeatureTrajectory:
    """Drive the whole series from a zero state; keep windowed samples only."""
    steps_per_bit = round(1.0 / config.dt)
    drive = np.repeat(series.bits.astype(np.float64), steps_per_bit)[:, None]
    reservoir.reset(machine)
    traj = reservoir.run(machine, drive, dt=config.dt, save_every=config.save_every)

    word = (traj.step_indices - 1) // steps_per_bit
    rel = traj.step_indices - word * steps_per_bit
    in_window = np.isin(rel, _window_positions(config))

    feats = readout.feature_map(traj.states[in_window], config.params.eta_r)
    if use_const:
        feats = np.hstack([feats, np.ones((feats.shape[0], 1))])
    return FeatureTrajectory(
        features=feats,
        step_indices=traj.step_indices[in_window],
        word_ids=word[in_window],
    )


def _classify_words(
    feats: FeatureTrajectory, weights: ReadoutWeights, first_word: int
) -> tuple[np.ndarray, np.ndarray]:
    """Average features per word, apply the readout, threshold."""
    word_ids = feats.word_ids
    n_words = int(word_ids.max()) + 1
    sums = np.zeros((n_words, feats.features.shape[1]))
    counts = np.zeros(n_words)
    np.add.at(sums, word_ids, feats.features)
    np.add.at(counts, word_ids, 1.0)
    if np.any(counts[first_word:] == 0):
        raise ConfigurationError("a word has no saved samples in its window")
    means = sums[first_word:] / counts[first_word:, None]
    v_bar = readout.predict(weights, means)
    return _classify(v_bar), np.arange(first_word, n_words)


def run_parity_parallel(config: ParityPipelineConfig) -> ParityResult:
    """Tapped-delay parallel scheme with per-word node resets.

    All n bits of a word are broadcast simultaneously; node j receives its
    single input weight times the word sum, so permuted words are bit-for-bit
    identical to the reservoir. Trajectories are computed once per distinct
    word sum and reused.
    """
    if config.scheme != "parallel":
        raise ConfigurationError("run_parity_parallel needs a parallel configuration")
    positions = _window_positions(config)
    steps_per_word = round(1.0 / config.dt)

    machine = reservoir.instantiate(config.n_nodes, 1, config.params, config.seed)
    use_const = uses_constant_feature(config.params)

    cache: dict[int, np.ndarray] = {}

    def windowed_features(word_sum: int) -> np.ndarray:
        feats = cache.get(word_sum)
        if feats is None:
            reservoir.reset(machine)
            drive = np.full((steps_per_word, 1), float(word_sum))
            traj = reservoir.run(
                machine, drive, dt=config.dt, save_every=config.save_every
            )
            keep = np.isin(traj.step_indices, positions)
            feats = readout.feature_map(traj.states[keep], config.params.eta_r)
            if use_const:
                feats = np.hstack([feats, np.ones((feats.shape[0], 1))])
            cache[word_sum] = feats
        return feats

    def word_sums(series: BitSeries) -> np.ndarray:
        windows = np.lib.stride_tricks.sliding_window_view(
            series.bits.astype(np.int64), config.n
        )
        return windows.sum(axis=1)

    train_sums = word_sums(config.train_bits)
    train_parity = _window_parities(config.train_bits.bits, config.n)
    rows = []
    labels = []
    for s, p in zip(train_sums, train_parity):
        f = windowed_features(int(s))
        rows.append(f)
        labels.append(np.full(f.shape[0], p))
    g = np.vstack(rows)
    targets = _parity_targets(np.concatenate(labels))
    weights = readout.train_ridge(g, targets, config.params.alpha)

    test_sums = word_sums(config.test_bits)
    truth = _window_parities(config.test_bits.bits, config.n)
    mean_by_sum = {
        int(s): windowed_features(int(s)).mean(axis=0) for s in np.unique(test_sums)
    }
    v_bar = readout.predict(
        weights, np.vstack([mean_by_sum[s] for s in test_sums])
    )
    preds = _classify(v_bar)
    word_idx = np.arange(config.n - 1, config.n - 1 + len(test_sums))
    return ParityResult(
        ber=ber(preds, truth),
        predictions=preds,
        truth=truth,
        word_indices=word_idx,
        weights=weights,
    )


def run_inference(config: InferencePipelineConfig) -> InferenceResult:
    """Train on one Lorenz segment, infer z on another, report NRMSE.

    Both phases start from a zero reservoir state and drop the first
    ``washout`` time units of features.
    """
    machine = reservoir.instantiate(config.n_nodes, 2, config.params, config.seed)
    use_const = uses_constant_feature(config.params, config.square_input)
    skip = round(config.washout / config.reservoir_dt)

    def features_and_target(ds: LorenzDataset) -> tuple[np.ndarray, np.ndarray]:
        reservoir.reset(machine)
        traj = reservoir.run(machine, ds.input, dt=config.reservoir_dt, save_every=1)
        feats = readout.feature_map(traj.states[skip:], config.params.eta_r)
        if use_const:
            feats = np.hstack([feats, np.ones((feats.shape[0], 1))])
        return feats, ds.target[skip:]

    g_train, y_train = features_and_target(config.train)
    weights = readout.train_ridge(g_train, y_train, config.params.alpha)

    g_test, y_test = features_and_target(config.test)
    inferred = readout.predict(weights, g_test)[:, 0]
    return InferenceResult(
        nrmse=nrmse(inferred, y_test),
        inferred=inferred,
        target=y_test,
        weights=weights,
    )
