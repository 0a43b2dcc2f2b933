"""Chain recording and posterior summaries.

The samplers emit a Chain of post-burn-in snapshots.  Summaries here deal
with the two awkward features of the posterior: the latent dimension
varies across samples (nonparametric runs), and the model is invariant
under column permutations of (Z, U), so factor averages are only
meaningful after aligning columns to a common reference.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .bitmat import BinaryMatrix, prediction_counts

__all__ = [
    "ChainSample",
    "Chain",
    "LSummary",
    "FactorMatch",
    "l_summary",
    "marginal_mean_z",
    "reconstruction_error",
    "match_factors",
]


@dataclass
class ChainSample:
    """One recorded state: latent width, noise precision, factor snapshots.

    Z and U are None when the run recorded traces only.
    """

    n_latent: int
    lam: float
    Z: BinaryMatrix | None = None
    U: BinaryMatrix | None = None


@dataclass
class Chain:
    samples: list[ChainSample] = field(default_factory=list)
    burn_in: int = 0
    config_echo: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def has_factors(self) -> bool:
        return bool(self.samples) and self.samples[0].Z is not None

    def l_trace(self) -> np.ndarray:
        return np.array([s.n_latent for s in self.samples], dtype=np.int64)

    def lambda_trace(self) -> np.ndarray:
        return np.array([s.lam for s in self.samples], dtype=np.float64)


@dataclass(frozen=True)
class LSummary:
    mode: int
    mean: float
    histogram: dict[int, float]


def l_summary(chain: Chain) -> LSummary:
    """Histogram, mode and mean of the latent-width trace.

    Ties in the histogram break toward the smaller width (parsimony, and
    it keeps tests deterministic).
    """
    if not chain.samples:
        raise ValueError("empty chain")
    trace = chain.l_trace()
    counts = Counter(int(v) for v in trace)
    n = len(trace)
    hist = {k: c / n for k, c in sorted(counts.items())}
    best = max(hist.values())
    mode = min(k for k, v in hist.items() if v == best)
    return LSummary(mode=mode, mean=float(trace.mean()), histogram=hist)


def _columns(m: BinaryMatrix) -> list[np.ndarray]:
    return [m.column(l).astype(bool) for l in range(m.n_cols)]


def marginal_mean_z(chain: Chain) -> np.ndarray:
    """Entrywise posterior mean of Z with column alignment, (N, L_ref).

    Columns of every sample are matched greedily (largest overlap first)
    to the columns of a reference sample whose width equals the posterior
    mode.  Sample columns with no positive overlap left are either
    appended as new reference columns (if nonzero) or dropped (if zero),
    so the output width can exceed the mode when the chain visits extra
    patterns.
    """
    if not chain.samples:
        raise ValueError("empty chain")
    if not chain.has_factors:
        raise ValueError("chain holds traces only, no factor snapshots")
    mode = l_summary(chain).mode
    ref_sample = next(s for s in chain.samples if s.n_latent == mode)
    n_rows = ref_sample.Z.n_rows
    ref_cols = _columns(ref_sample.Z)
    acc = [np.zeros(n_rows) for _ in ref_cols]

    for s in chain.samples:
        cols = _columns(s.Z)
        if not cols:
            continue
        if ref_cols:
            overlap = np.array(
                [[int(np.sum(c & r)) for r in ref_cols] for c in cols],
                dtype=np.float64,
            )
        else:
            overlap = np.zeros((len(cols), 0))
        matched = [False] * len(cols)
        while overlap.size:
            i, j = np.unravel_index(int(np.argmax(overlap)), overlap.shape)
            if overlap[i, j] <= 0:
                break
            acc[j] += cols[i]
            matched[i] = True
            overlap[i, :] = -1.0
            overlap[:, j] = -1.0
        for i, c in enumerate(cols):
            if not matched[i] and c.any():
                ref_cols.append(c.copy())
                acc.append(c.astype(np.float64))

    if not acc:
        return np.zeros((n_rows, 0))
    return np.stack(acc, axis=1) / len(chain.samples)


def reconstruction_error(X: BinaryMatrix, Z: BinaryMatrix, U: BinaryMatrix) -> float:
    """Fraction of cells where the Boolean product disagrees with the data."""
    counts = prediction_counts(X, Z, U)
    if counts.total == 0:
        raise ValueError("empty data matrix")
    return counts.wrong / counts.total


def _jaccard(a: np.ndarray, b: np.ndarray) -> float:
    union = int(np.sum(a | b))
    if union == 0:
        return 1.0  # two all-zero columns are identical
    return int(np.sum(a & b)) / union


@dataclass(frozen=True)
class FactorMatch:
    """Greedy column assignment between two factor matrices.

    pairs holds (inferred_column, true_column, jaccard) triples, one per
    matched pair; min(L_inferred, L_true) pairs are always formed, even at
    similarity zero.
    """

    pairs: tuple[tuple[int, int, float], ...]
    mean_jaccard: float


def match_factors(U_inferred: BinaryMatrix, U_true: BinaryMatrix) -> FactorMatch:
    """Match inferred to true columns, most similar first."""
    if U_inferred.n_cols == 0 or U_true.n_cols == 0:
        raise ValueError("both factor matrices must have at least one column")
    if U_inferred.n_rows != U_true.n_rows:
        raise ValueError("factor matrices must have the same number of rows")
    cols_a = _columns(U_inferred)
    cols_b = _columns(U_true)
    sim = np.array([[_jaccard(a, b) for b in cols_b] for a in cols_a])
    pairs = []
    for _ in range(min(len(cols_a), len(cols_b))):
        i, j = np.unravel_index(int(np.argmax(sim)), sim.shape)
        pairs.append((int(i), int(j), float(sim[i, j])))
        sim[i, :] = -1.0
        sim[:, j] = -1.0
    mean = float(np.mean([p[2] for p in pairs]))
    return FactorMatch(pairs=tuple(pairs), mean_jaccard=mean)
