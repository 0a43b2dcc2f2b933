"""Nonparametric sampler: the latent width is inferred, not fixed.

Z gets an Indian Buffet Process prior.  A sweep walks the rows of Z in
order (the prior couples rows, so this loop is inherently sequential):

  1. columns whose only one sits in the current row are dropped;
  2. each surviving column is resampled with prior odds m/(N-m), where m
     counts the column's ones in the other rows;
  3. a number of brand-new columns is drawn from a truncated posterior
     that only needs the row's true-negative / false-negative tallies --
     cells already predicted one keep emitting one no matter how many
     columns are added, so they contribute a constant that cancels;
  4. each new column of U is filled in with one Gibbs pass.

After all rows, U gets a full sweep and the noise precision is reset to
its closed-form optimum.  The per-width likelihood factors in step 3
depend only on (lam, q), so they are precomputed into a small table and
rebuilt once per sweep when lam moves.

All randomness is pre-drawn in fixed-size blocks from the caller's
generator, in a documented order (per row: one uniform per surviving
column, one for the width draw, one block of D per new column; then one
block for the U sweep).  The granular single-step functions below follow
the same convention, so a sweep assembled from them reproduces
ibp_sweep's trajectory bit for bit.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import poisson

from . import _kernels
from .bitmat import (
    BinaryMatrix,
    PredictionCounts,
    _pack,
    row_negative_counts,
)
from .finite_sampler import ModelState, conditional_prob_one
from .likelihood import lambda_mle, logit, sigmoid
from .posterior import Chain, ChainSample

__all__ = [
    "IbpConfig",
    "BracketTable",
    "column_counts",
    "existing_code_prob_one",
    "prune_singletons",
    "build_bracket_table",
    "new_dish_log_weights",
    "sample_new_dishes",
    "ibp_sweep",
    "run_ibp",
    "sample_ibp_prior",
]


@dataclass(frozen=True)
class IbpConfig:
    """Hyperparameters and run length for the nonparametric sampler."""

    alpha: float = 1.0
    q: float = 0.5
    lprime_max: int = 10
    n_samples: int = 200
    burn_in: int = 100
    seed: int = 0
    lambda_init: float = 0.5

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if not 0.0 < self.q < 1.0:
            raise ValueError("q must lie strictly inside (0, 1)")
        if self.lprime_max < 1:
            raise ValueError("lprime_max must be at least 1")
        if not 0 <= self.burn_in < self.n_samples:
            raise ValueError("need 0 <= burn_in < n_samples")
        if self.lambda_init < 0:
            raise ValueError("lambda_init must be non-negative")


@dataclass(frozen=True)
class BracketTable:
    """Per-width log-likelihood factors for the new-column posterior.

    For a cell the current row predicts zero, adding k new columns keeps
    the prediction zero only if all k new U-entries at that cell are zero,
    which happens with probability p0 = (1-q)^k.  Marginally the cell's
    likelihood is then a two-point mixture, one value per data bit:

        log_fn[k] = log(p0 * sigmoid(-lam) + (1-p0) * sigmoid(lam))
        log_tn[k] = log(p0 * sigmoid(lam) + (1-p0) * sigmoid(-lam))

    log_fn applies to cells with a one in the data (currently false
    negatives), log_tn to cells with a zero (true negatives).  The build
    parameters are kept so callers can tell when the table went stale.
    """

    log_fn: np.ndarray
    log_tn: np.ndarray
    lambda_at_build: float
    q_at_build: float


def build_bracket_table(lam: float, q: float, lprime_max: int) -> BracketTable:
    if lprime_max < 1:
        raise ValueError("lprime_max must be at least 1")
    p0 = (1.0 - q) ** np.arange(lprime_max)
    sp = sigmoid(lam)
    sn = sigmoid(-lam)
    return BracketTable(
        log_fn=np.log(p0 * sn + (1.0 - p0) * sp),
        log_tn=np.log(p0 * sp + (1.0 - p0) * sn),
        lambda_at_build=float(lam),
        q_at_build=float(q),
    )


def column_counts(Z: BinaryMatrix) -> np.ndarray:
    """m[l] = number of ones in column l of Z."""
    return Z.to_dense().sum(axis=0, dtype=np.int64)


def existing_code_prob_one(
    n: int, l: int, state: ModelState, counts: np.ndarray
) -> float:
    """P(z[n, l] = 1 | rest) for a represented column, prior odds m/(N-m).

    m here excludes row n; calling this on a singleton column (m = 0) is
    a bug -- such columns must be pruned instead, the conditional would
    place zero mass on keeping them anyway.
    """
    m_minus = int(counts[l]) - state.Z.get(n, l)
    if m_minus <= 0:
        raise ValueError("column is a singleton of this row; prune it instead")
    n_rows = state.X.n_rows
    prior_logit = np.log(m_minus) - np.log(n_rows - m_minus)
    return conditional_prob_one(
        state.X.row(n), state.Z.row(n), state.U, l, state.lam, prior_logit
    )


def prune_singletons(n: int, state: ModelState, counts: np.ndarray) -> np.ndarray:
    """Drop every column whose ones all sit in row n; returns new counts."""
    z_row = state.Z.row(n).astype(np.int64)
    doomed = np.flatnonzero(counts - z_row == 0)
    if doomed.size:
        state.Z.delete_columns(doomed)
        state.U.delete_columns(doomed)
        counts = np.delete(counts, doomed)
    return counts


def _poisson_log_pmf(lprime_max: int, mu: float) -> np.ndarray:
    return poisson.logpmf(np.arange(lprime_max), mu)


def new_dish_log_weights(
    n: int,
    state: ModelState,
    table: BracketTable,
    alpha: float,
    n_rows: int | None = None,
) -> np.ndarray:
    """Unnormalized log-posterior over the number of new columns, 0..max-1.

    Only the row's negative predictions matter: the positively predicted
    cells contribute the same factor to every width, so the returned
    weights are exact up to one shared additive constant.
    """
    if n_rows is None:
        n_rows = state.X.n_rows
    tn, fn = row_negative_counts(state.X.row(n), state.Z.row(n), state.U)
    prior = _poisson_log_pmf(len(table.log_fn), alpha / n_rows)
    return prior + fn * table.log_fn + tn * table.log_tn


def _sample_from_log_weights(log_w: np.ndarray, u: float) -> int:
    """Inverse-CDF draw from softmax(log_w) using one uniform."""
    p = np.exp(log_w - log_w.max())
    p /= p.sum()
    idx = int(np.searchsorted(np.cumsum(p), u, side="right"))
    return min(idx, len(p) - 1)


def sample_new_dishes(
    n: int,
    state: ModelState,
    rng: np.random.Generator,
    table: BracketTable,
    config: IbpConfig,
) -> int:
    """Draw the number of new columns for row n and fill them in.

    New Z columns get their single one at row n; each new U column is
    sampled cell by cell conditioned on the columns filled so far (score
    +1/-1 on uncovered cells, 0 on covered ones).  Consumes one uniform
    for the width and one block of D uniforms per new column.  Returns
    the number of columns added.
    """
    w = new_dish_log_weights(n, state, table, config.alpha)
    k = _sample_from_log_weights(w, float(rng.random()))
    if k == 0:
        return 0
    old_width = state.Z.n_cols
    state.Z.append_columns(k)
    state.U.append_columns(k)
    for j in range(old_width, old_width + k):
        state.Z.set(n, j, 1)
    x_row = state.X.row(n)
    z_row = state.Z.row(n)
    q_logit = logit(config.q)
    Ud = state.U.to_dense()
    for j in range(old_width, old_width + k):
        active = z_row.astype(bool).copy()
        active[j] = False
        if active.any():
            covered = Ud[:, active].any(axis=1)
        else:
            covered = np.zeros(state.X.n_cols, dtype=bool)
        u01 = rng.random(state.X.n_cols)
        for d in range(state.X.n_cols):
            if covered[d]:
                score = 0.0
            elif x_row[d] == 1:
                score = 1.0
            else:
                score = -1.0
            p = sigmoid(state.lam * score + q_logit)
            Ud[d, j] = 1 if u01[d] < p else 0
    state.U = BinaryMatrix.from_dense(Ud)
    return k


def _fresh_bracket(state: ModelState, config: IbpConfig) -> BracketTable:
    """Bracket table for the state's current lam, rebuilt only on change."""
    table = getattr(state, "_bracket", None)
    if (
        table is None
        or table.lambda_at_build != state.lam
        or table.q_at_build != config.q
        or len(table.log_fn) != config.lprime_max
    ):
        table = build_bracket_table(state.lam, config.q, config.lprime_max)
        state._bracket = table
    return table


def ibp_sweep(state: ModelState, rng: np.random.Generator, config: IbpConfig) -> None:
    """One full sweep: every row of Z, then all of U, then the noise update."""
    X = state.X
    n_rows, n_cols = X.shape
    xw = state.x_words()
    table = _fresh_bracket(state, config)
    log_prior = _poisson_log_pmf(config.lprime_max, config.alpha / n_rows)
    q_logit = logit(config.q)

    Zd = state.Z.to_dense()
    Ud = state.U.to_dense()
    code_words = _pack(Ud.T)
    m = Zd.sum(axis=0, dtype=np.int64)

    for n in range(n_rows):
        z_row = Zd[n]
        m_minus = m - z_row
        doomed = np.flatnonzero(m_minus == 0)
        if doomed.size:
            keep = np.flatnonzero(m_minus != 0)
            Zd = Zd[:, keep].copy()
            Ud = Ud[:, keep].copy()
            code_words = code_words[keep]
            m_minus = m_minus[keep]
            z_row = Zd[n]
        width = Zd.shape[1]

        prior_logits = np.log(m_minus) - np.log(n_rows - m_minus)
        u_exist = rng.random(width)
        covered, fn = _kernels.ibp_row_update(
            xw[n], code_words, z_row, prior_logits, state.lam, u_exist
        )
        tn = n_cols - int(covered) - int(fn)

        log_w = log_prior + fn * table.log_fn + tn * table.log_tn
        k_new = _sample_from_log_weights(log_w, float(rng.random()))
        if k_new:
            active = z_row.astype(bool)
            if active.any():
                cover_words = np.bitwise_or.reduce(code_words[active], axis=0)
            else:
                cover_words = np.zeros(code_words.shape[1], dtype=np.uint64)
            new_words = []
            for _ in range(k_new):
                u01 = rng.random(n_cols)
                wj = _kernels.fill_new_column(
                    xw[n], cover_words, n_cols, state.lam, q_logit, u01
                )
                cover_words = cover_words | wj
                new_words.append(wj)
            m = np.concatenate([m_minus + z_row, np.ones(k_new, dtype=np.int64)])
            Zd = np.hstack([Zd, np.zeros((n_rows, k_new), dtype=np.uint8)])
            Zd[n, width:] = 1
            new_cols = np.stack(
                [
                    np.unpackbits(w.view(np.uint8), bitorder="little", count=n_cols)
                    for w in new_words
                ],
                axis=1,
            )
            Ud = np.hstack([Ud, new_cols])
            code_words = np.vstack([code_words, np.stack(new_words)])
        else:
            m = m_minus + z_row

    width = Zd.shape[1]
    u01 = rng.random((n_cols, width))
    if width:
        _kernels.sweep_rows(
            state.xt_words(), _pack(Zd.T), Ud, state.lam, q_logit, u01
        )
        code_words = _pack(Ud.T)

    tp, fp, tn_, fn_ = _kernels.count_predictions(xw, code_words, Zd, n_cols)
    state.lam = lambda_mle(PredictionCounts(int(tp), int(fp), int(tn_), int(fn_)))
    state.Z = BinaryMatrix.from_dense(Zd)
    state.U = BinaryMatrix.from_dense(Ud)


def run_ibp(
    X: BinaryMatrix, config: IbpConfig, *, record_factors: bool = True
) -> Chain:
    """Run the nonparametric sampler from empty factors."""
    if X.n_rows == 0 or X.n_cols == 0:
        raise ValueError("data matrix must be nonempty")
    rng = np.random.default_rng(config.seed)
    state = ModelState(
        X,
        BinaryMatrix(X.n_rows, 0),
        BinaryMatrix(X.n_cols, 0),
        config.lambda_init,
        config,
    )
    samples: list[ChainSample] = []
    for t in range(config.n_samples):
        ibp_sweep(state, rng, config)
        if t >= config.burn_in:
            samples.append(
                ChainSample(
                    n_latent=state.Z.n_cols,
                    lam=state.lam,
                    Z=state.Z.copy() if record_factors else None,
                    U=state.U.copy() if record_factors else None,
                )
            )
    echo = {"model": "ibp", "n_rows": X.n_rows, "n_cols": X.n_cols, **asdict(config)}
    return Chain(samples=samples, burn_in=config.burn_in, config_echo=echo)


def sample_ibp_prior(
    n_rows: int, alpha: float, rng: np.random.Generator
) -> BinaryMatrix:
    """Draw Z from the prior by the sequential customer process.

    Row n joins existing column l with probability m_l / n and opens
    Poisson(alpha / n) new columns.  alpha = 0 is allowed here (always
    zero columns) even though the sampler config requires it positive.
    """
    if n_rows < 0:
        raise ValueError("n_rows must be non-negative")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    cols: list[np.ndarray] = []
    m: list[int] = []
    for n in range(1, n_rows + 1):
        take = rng.random(len(cols)) < np.array(m) / n if cols else np.empty(0)
        for l in np.flatnonzero(take):
            cols[l][n - 1] = 1
            m[l] += 1
        for _ in range(rng.poisson(alpha / n)):
            fresh = np.zeros(n_rows, dtype=np.uint8)
            fresh[n - 1] = 1
            cols.append(fresh)
            m.append(1)
    if not cols:
        return BinaryMatrix(n_rows, 0)
    return BinaryMatrix.from_dense(np.stack(cols, axis=1))
