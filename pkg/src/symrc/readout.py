"""Symmetry-configurable feature map and ridge-trained linear readout.

The feature map squares the leading ceil(eta_r * N) components of the node
state before the output multiplication. Squaring is even, so with eta_r = 1
opposite reservoir states produce the same feature vector; with eta_r = 0 the
features inherit the reservoir's odd symmetry unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from .errors import ParameterError, ShapeError, SolverError
from .reservoir import split_index


@dataclass
class FeatureTrajectory:
    """Feature vectors aligned to saved integration steps.

    word_ids optionally tags each row with the input word it belongs to
    (parity pipelines); inference pipelines leave it None.
    """

    features: np.ndarray  # (S, F)
    step_indices: np.ndarray  # (S,)
    word_ids: Optional[np.ndarray] = None


@dataclass
class ReadoutWeights:
    """Trained output matrix with the ridge setting that produced it."""

    w_out: np.ndarray  # (m, F)
    alpha_used: float
    training_sample_count: int


def feature_map(state: np.ndarray, eta_r: float) -> np.ndarray:
    """Square the leading ceil(eta_r * N) components; copy the rest through.

    Accepts a single state vector or a matrix of row vectors.
    """
    arr = np.asarray(state, dtype=np.float64)
    out = arr.copy()
    n_sq = split_index(eta_r, arr.shape[-1])
    if n_sq:
        out[..., :n_sq] **= 2
    return out


def train_ridge(
    features: np.ndarray, targets: np.ndarray, alpha: float
) -> ReadoutWeights:
    """Solve the ridge problem min |Y - W G^T|^2 + alpha |W|^2 for W.

    Uses the regularized normal equations with a Cholesky factorization; the
    feature dimension is at most a few hundred in this package, and alpha > 0
    keeps the system positive definite. No intercept is fitted.
    """
    g = np.asarray(features, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if g.ndim != 2:
        raise ShapeError(f"features must be 2-D, got shape {g.shape}")
    if y.ndim == 1:
        y = y[:, None]
    if y.ndim != 2:
        raise ShapeError(f"targets must be 1-D or 2-D, got shape {y.shape}")
    if g.shape[0] != y.shape[0]:
        raise ShapeError(
            f"features have {g.shape[0]} rows but targets have {y.shape[0]}"
        )
    if g.shape[0] < 1:
        raise ParameterError("need at least one training sample")
    if alpha < 0:
        raise ParameterError(f"alpha must be nonnegative, got {alpha}")

    gram = g.T @ g
    gram[np.diag_indices_from(gram)] += alpha
    rhs = g.T @ y
    try:
        w_t = linalg.cho_solve(linalg.cho_factor(gram), rhs)
    except linalg.LinAlgError as exc:
        raise SolverError(
            "singular normal equations; use alpha > 0 for rank-deficient features"
        ) from exc
    return ReadoutWeights(
        w_out=np.ascontiguousarray(w_t.T),
        alpha_used=float(alpha),
        training_sample_count=g.shape[0],
    )


def predict(weights: ReadoutWeights, features: np.ndarray) -> np.ndarray:
    """Row-wise readout outputs v = W g(r); no thresholding."""
    g = np.asarray(features, dtype=np.float64)
    if g.ndim != 2:
        raise ShapeError(f"features must be 2-D, got shape {g.shape}")
    if g.shape[1] != weights.w_out.shape[1]:
        raise ShapeError(
            f"features have {g.shape[1]} columns but weights expect "
            f"{weights.w_out.shape[1]}"
        )
    return g @ weights.w_out.T
