"""Gibbs sampler for the fixed-width model.

Each entry of Z (and, on the transposed problem, U) has a closed-form
full conditional: sigmoid(lam * score + prior logit), where score counts
the data cells this entry alone explains, signed by the data (+1 for a
one, -1 for a zero).  A cell contributes nothing if this code doesn't
touch it or some other active code already covers it, which is what makes
the word-level bit kernels so effective here.

The pure-python conditional below is the reference implementation; the
sweeps call the jitted kernels, and the two are kept bit-identical (same
float expressions, same uniform-consumption order).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import _kernels
from .bitmat import (
    BinaryMatrix,
    _as_bits,
    _check_factor_shapes,
    _pack,
    prediction_counts,
)
from .likelihood import lambda_mle, logit, sigmoid
from .posterior import Chain, ChainSample

__all__ = [
    "FiniteConfig",
    "ModelState",
    "conditional_prob_one",
    "sweep_z",
    "sweep_u",
    "gibbs_step",
    "run_finite",
]


@dataclass(frozen=True)
class FiniteConfig:
    """Hyperparameters and run length for the fixed-width sampler."""

    L: int
    prior_z: float = 0.5
    prior_u: float = 0.5
    n_samples: int = 200
    burn_in: int = 100
    seed: int = 0
    lambda_init: float = 0.5

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be at least 1")
        if not 0.0 < self.prior_z < 1.0 or not 0.0 < self.prior_u < 1.0:
            raise ValueError("entry priors must lie strictly inside (0, 1)")
        if not 0 <= self.burn_in < self.n_samples:
            raise ValueError("need 0 <= burn_in < n_samples")
        if self.lambda_init < 0:
            raise ValueError("lambda_init must be non-negative")


class ModelState:
    """Mutable sampler state: data, factors, noise precision.

    X is read-only by convention; packed scratch views of X and its
    transpose are cached here because every sweep needs them.
    """

    def __init__(self, X: BinaryMatrix, Z: BinaryMatrix, U: BinaryMatrix, lam, config):
        _check_factor_shapes(X, Z, U)
        self.X = X
        self.Z = Z
        self.U = U
        self.lam = float(lam)
        self.config = config
        self._x_words = None
        self._xt_words = None

    def x_words(self) -> np.ndarray:
        if self._x_words is None:
            self._x_words = np.ascontiguousarray(self.X.words)
        return self._x_words

    def xt_words(self) -> np.ndarray:
        if self._xt_words is None:
            self._xt_words = _pack(self.X.to_dense().T)
        return self._xt_words


def conditional_prob_one(x_row, z_row, U: BinaryMatrix, l: int, lam, prior_logit):
    """P(z = 1 | everything else) for one entry of one row.

    Reference implementation over dense vectors; the score sums the data
    sign over cells where code l is active and no other active code of
    this row covers the cell.
    """
    x = _as_bits(x_row, "x_row")
    z = _as_bits(z_row, "z_row")
    if x.shape != (U.n_rows,) or z.shape != (U.n_cols,):
        raise ValueError("x_row/z_row lengths inconsistent with U")
    if not 0 <= l < U.n_cols:
        raise IndexError(f"code index {l} out of range")
    Ud = U.to_dense().astype(bool)
    others = z.astype(bool).copy()
    others[l] = False
    if others.any():
        covered = Ud[:, others].any(axis=1)
    else:
        covered = np.zeros(U.n_rows, dtype=bool)
    cells = Ud[:, l] & ~covered
    ones = int(np.sum(cells & (x == 1)))
    masked = int(np.sum(cells))
    score = 2.0 * ones - masked
    return sigmoid(lam * score + prior_logit)


def sweep_z(state: ModelState, rng: np.random.Generator) -> None:
    """Resample every entry of Z from its full conditional, in place.

    Uniforms are drawn up front, one per entry, so the draw count is
    fixed and the kernel's row-parallel execution cannot perturb the
    trajectory.
    """
    n, L = state.Z.shape
    u01 = rng.random((n, L))
    rows = state.Z.to_dense()
    _kernels.sweep_rows(
        state.x_words(),
        _pack(state.U.to_dense().T),
        rows,
        state.lam,
        logit(state.config.prior_z),
        u01,
    )
    state.Z = BinaryMatrix.from_dense(rows)


def sweep_u(state: ModelState, rng: np.random.Generator) -> None:
    """Same as sweep_z on the transposed problem (roles of Z and U swap)."""
    d, L = state.U.shape
    u01 = rng.random((d, L))
    rows = state.U.to_dense()
    _kernels.sweep_rows(
        state.xt_words(),
        _pack(state.Z.to_dense().T),
        rows,
        state.lam,
        logit(state.config.prior_u),
        u01,
    )
    state.U = BinaryMatrix.from_dense(rows)


def gibbs_step(state: ModelState, rng: np.random.Generator) -> None:
    """One full sweep of Z then U, then the closed-form noise update."""
    sweep_z(state, rng)
    sweep_u(state, rng)
    state.lam = lambda_mle(prediction_counts(state.X, state.Z, state.U))


def run_finite(
    X: BinaryMatrix, config: FiniteConfig, *, record_factors: bool = True
) -> Chain:
    """Run the fixed-width sampler and record post-burn-in snapshots."""
    if X.n_rows == 0 or X.n_cols == 0:
        raise ValueError("data matrix must be nonempty")
    rng = np.random.default_rng(config.seed)
    n, d, L = X.n_rows, X.n_cols, config.L
    Z = BinaryMatrix.from_dense((rng.random((n, L)) < config.prior_z).astype(np.uint8))
    U = BinaryMatrix.from_dense((rng.random((d, L)) < config.prior_u).astype(np.uint8))
    state = ModelState(X, Z, U, config.lambda_init, config)
    samples: list[ChainSample] = []
    for t in range(config.n_samples):
        gibbs_step(state, rng)
        if t >= config.burn_in:
            samples.append(
                ChainSample(
                    n_latent=L,
                    lam=state.lam,
                    Z=state.Z.copy() if record_factors else None,
                    U=state.U.copy() if record_factors else None,
                )
            )
    echo = {"model": "finite", "n_rows": n, "n_cols": d, **asdict(config)}
    return Chain(samples=samples, burn_in=config.burn_in, config_echo=echo)
