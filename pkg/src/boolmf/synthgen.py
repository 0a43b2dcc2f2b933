"""Seeded synthetic data: random factor pairs, their Boolean product, and
bit-flip noise.

The factor Bernoulli density is calibrated so the *product* hits a target
density (default 0.5, "balanced"): with iid Bernoulli(d) factors a cell is
one with probability 1 - (1 - d^2)^L, so d = sqrt(1 - (1-t)^(1/L)) for
target t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bitmat import BinaryMatrix, boolean_product

__all__ = [
    "SyntheticDataset",
    "balanced_factor_density",
    "factor_density_for_target",
    "generate",
    "add_noise",
]

_MAX_COLUMN_RETRIES = 100


@dataclass(frozen=True)
class SyntheticDataset:
    X: BinaryMatrix
    Z_true: BinaryMatrix
    U_true: BinaryMatrix
    noise_level: float
    seed: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.X.shape

    @property
    def n_latent(self) -> int:
        return self.Z_true.n_cols


def factor_density_for_target(L: int, target_density: float) -> float:
    """Bernoulli rate for the factors such that the expected density of the
    L-column Boolean product equals target_density."""
    if L < 1:
        raise ValueError("L must be at least 1")
    if not 0.0 < target_density < 1.0:
        raise ValueError("target_density must lie in (0, 1)")
    return math.sqrt(1.0 - (1.0 - target_density) ** (1.0 / L))


def balanced_factor_density(L: int) -> float:
    """Factor density giving an expected product density of one half."""
    return factor_density_for_target(L, 0.5)


def _draw_factor(rng: np.random.Generator, n: int, L: int, d: float) -> np.ndarray:
    """iid Bernoulli(d) matrix with no all-zero columns (resampled)."""
    dense = (rng.random((n, L)) < d).astype(np.uint8)
    for l in range(L):
        tries = 0
        while not dense[:, l].any():
            tries += 1
            if tries > _MAX_COLUMN_RETRIES:
                raise RuntimeError(
                    f"could not draw a nonzero factor column (n={n}, density={d})"
                )
            dense[:, l] = (rng.random(n) < d).astype(np.uint8)
    return dense


def _flip(X: BinaryMatrix, p_flip: float, rng: np.random.Generator) -> BinaryMatrix:
    flips = (rng.random((X.n_rows, X.n_cols)) < p_flip).astype(np.uint8)
    return BinaryMatrix.from_dense(X.to_dense() ^ flips)


def generate(
    n_rows: int,
    n_cols: int,
    n_latent: int,
    seed: int,
    *,
    target_density: float = 0.5,
    noise: float = 0.0,
) -> SyntheticDataset:
    """Draw ground-truth factors and their (optionally noisy) product.

    Z_true is drawn first, then U_true, then the flip mask, all from one
    generator seeded with `seed`, so datasets are reproducible.  Columns
    that come out all-zero are redrawn: the nominal latent dimension is
    then also the effective one, which the recovery experiments compare
    against.
    """
    if n_rows < 1 or n_cols < 1:
        raise ValueError("n_rows and n_cols must be at least 1")
    if not 0.0 <= noise <= 0.5:
        raise ValueError("noise must lie in [0, 0.5]")
    d = factor_density_for_target(n_latent, target_density)
    rng = np.random.default_rng(seed)
    Z = BinaryMatrix.from_dense(_draw_factor(rng, n_rows, n_latent, d))
    U = BinaryMatrix.from_dense(_draw_factor(rng, n_cols, n_latent, d))
    X = boolean_product(Z, U)
    if noise > 0.0:
        X = _flip(X, noise, rng)
    return SyntheticDataset(X=X, Z_true=Z, U_true=U, noise_level=noise, seed=seed)


def add_noise(X: BinaryMatrix, p_flip: float, seed: int) -> BinaryMatrix:
    """Flip each entry independently with probability p_flip.

    p_flip above one half is rejected: the channel would no longer be
    identifiable (flipping more than half the bits is the same as flipping
    fewer bits of the complement).
    """
    if not 0.0 <= p_flip <= 0.5:
        raise ValueError("p_flip must lie in [0, 0.5]")
    return _flip(X, p_flip, np.random.default_rng(seed))
