"""Observation-noise model.

Every cell of the data is explained as the Boolean product's prediction
passed through a symmetric bit-flip channel: a correct prediction has
probability sigmoid(lam), a wrong one sigmoid(-lam), with a single global
precision lam >= 0.  The full-data log-likelihood therefore depends on the
factors only through the (correct, wrong) tallies, which makes the
maximum-likelihood update for lam a one-liner.
"""

from __future__ import annotations

import math

import numpy as np

from .bitmat import BinaryMatrix, PredictionCounts, prediction_counts

__all__ = [
    "LAMBDA_MAX",
    "sigmoid",
    "log_sigmoid",
    "logit",
    "log_likelihood",
    "log_likelihood_from_counts",
    "lambda_mle",
]


def sigmoid(y):
    """Numerically stable logistic function, scalar or ndarray.

    The scalar path is bit-identical to the jitted kernels' sigmoid, which
    several exact-trajectory tests rely on.
    """
    if isinstance(y, np.ndarray):
        out = np.empty_like(y, dtype=np.float64)
        pos = y >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-y[pos]))
        e = np.exp(y[~pos])
        out[~pos] = e / (1.0 + e)
        return out
    y = float(y)
    if y >= 0.0:
        return 1.0 / (1.0 + math.exp(-y))
    e = math.exp(y)
    return e / (1.0 + e)


def log_sigmoid(y: float) -> float:
    y = float(y)
    if y >= 0.0:
        return -math.log1p(math.exp(-y))
    return y - math.log1p(math.exp(y))


def logit(p: float) -> float:
    """Inverse of sigmoid; p must lie strictly inside (0, 1)."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"logit requires 0 < p < 1, got {p}")
    return math.log(p) - math.log1p(-p)


#: Cap on the noise precision: logit(1 - 1e-8).  A perfectly reconstructed
#: dataset would otherwise push lam to +inf.
LAMBDA_MAX = logit(1.0 - 1e-8)


def log_likelihood_from_counts(counts: PredictionCounts, lam: float) -> float:
    """correct * log sigmoid(lam) + wrong * log sigmoid(-lam)."""
    if lam < 0:
        raise ValueError("lam must be non-negative")
    return counts.correct * log_sigmoid(lam) + counts.wrong * log_sigmoid(-lam)


def log_likelihood(
    X: BinaryMatrix, Z: BinaryMatrix, U: BinaryMatrix, lam: float
) -> float:
    """Log-probability of X under factors (Z, U) and noise precision lam."""
    return log_likelihood_from_counts(prediction_counts(X, Z, U), lam)


def lambda_mle(counts: PredictionCounts, smoothed: bool = True) -> float:
    """Closed-form maximizer of the log-likelihood in lam.

    Stationarity gives sigmoid(lam) = C/(C+W) with C correct and W wrong,
    i.e. lam = logit(C/(C+W)).  By default one pseudo-count is added to
    each side (Laplace smoothing) so noiseless data, where W = 0, yields a
    finite value; the result is clamped to [0, LAMBDA_MAX] either way.
    """
    c, w = counts.correct, counts.wrong
    if smoothed:
        c, w = c + 1, w + 1
    if c + w == 0:
        return 0.0
    if w == 0:
        return LAMBDA_MAX
    if c == 0:
        return 0.0
    lam = math.log(c) - math.log(w)
    return min(max(lam, 0.0), LAMBDA_MAX)
