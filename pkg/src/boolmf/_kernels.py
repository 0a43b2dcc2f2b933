"""Bit-level numba kernels shared by the samplers.

Everything in here operates on packed uint64 words (LSB-first within each
word, see :mod:`boolmf.bitmat`) so the inner loops are pure integer ops plus
one sigmoid per sampled entry.  The pure-numpy reference implementations of
the same updates live next to the public ops; tests assert the two paths
produce bit-identical trajectories, so keep the floating point expressions
here in sync with those (same order of operations, same sigmoid).
"""

import math

import numpy as np
from numba import njit, prange, uint64

__all__ = [
    "popcount64",
    "sigmoid_scalar",
    "sweep_rows",
    "ibp_row_update",
    "fill_new_column",
    "count_predictions",
]


@njit(uint64(uint64), inline="always", cache=True)
def popcount64(x):
    # SWAR popcount; numba has no intrinsic for this on all targets.
    x = x - ((x >> uint64(1)) & uint64(0x5555555555555555))
    x = (x & uint64(0x3333333333333333)) + ((x >> uint64(2)) & uint64(0x3333333333333333))
    x = (x + (x >> uint64(4))) & uint64(0x0F0F0F0F0F0F0F0F)
    return (x * uint64(0x0101010101010101)) >> uint64(56)


@njit(inline="always", cache=True)
def sigmoid_scalar(y):
    # Branch keeps exp() argument non-positive; bit-identical to the
    # pure-python version in boolmf.likelihood.
    if y >= 0.0:
        return 1.0 / (1.0 + math.exp(-y))
    e = math.exp(y)
    return e / (1.0 + e)


@njit(cache=True, parallel=True)
def sweep_rows(data_words, code_words, rows, lam, prior_logit, u01):
    """One Gibbs sweep over every row of a factor matrix, in place.

    data_words : (R, W) uint64, packed rows of the data seen by this factor
        (X for the Z-sweep, X transposed for the U-sweep).
    code_words : (L, W) uint64, packed columns of the *other* factor.
    rows       : (R, L) uint8, the factor being resampled; updated in place.
    u01        : (R, L) float64, pre-drawn uniforms, one per entry.  Every
        entry is consumed exactly once so the draw count never depends on
        the data or on the thread count.

    Rows are independent given the other factor, hence the prange: each
    thread writes only to its own rows[r].
    """
    n_rows, n_codes = rows.shape
    n_words = data_words.shape[1]
    for r in prange(n_rows):
        for l in range(n_codes):
            ones = 0
            masked = 0
            for w in range(n_words):
                other = uint64(0)
                for lp in range(n_codes):
                    if lp != l and rows[r, lp] == 1:
                        other |= code_words[lp, w]
                mask = code_words[l, w] & ~other
                masked += popcount64(mask)
                ones += popcount64(mask & data_words[r, w])
            score = 2.0 * ones - masked
            p = sigmoid_scalar(lam * score + prior_logit)
            rows[r, l] = 1 if u01[r, l] < p else 0


@njit(cache=True)
def ibp_row_update(x_words, code_words, z_row, prior_logits, lam, u01):
    """Resample one row's assignments to the existing codes, in place.

    x_words      : (W,) uint64 packed data row.
    code_words   : (L, W) uint64 packed columns of U.
    z_row        : (L,) uint8, updated in place.
    prior_logits : (L,) float64, log m / (N - m) per code (row excluded).
    u01          : (L,) float64 pre-drawn uniforms.

    Returns (covered, false_neg): the number of cells predicted 1 by the
    final row, and the number of data ones among the cells predicted 0.
    The caller turns these into (tn, fn) tallies for the new-code step.
    """
    n_codes = z_row.shape[0]
    n_words = x_words.shape[0]
    for l in range(n_codes):
        ones = 0
        masked = 0
        for w in range(n_words):
            other = uint64(0)
            for lp in range(n_codes):
                if lp != l and z_row[lp] == 1:
                    other |= code_words[lp, w]
            mask = code_words[l, w] & ~other
            masked += popcount64(mask)
            ones += popcount64(mask & x_words[w])
        score = 2.0 * ones - masked
        p = sigmoid_scalar(lam * score + prior_logits[l])
        z_row[l] = 1 if u01[l] < p else 0

    covered = 0
    false_neg = 0
    for w in range(n_words):
        cov = uint64(0)
        for l in range(n_codes):
            if z_row[l] == 1:
                cov |= code_words[l, w]
        covered += popcount64(cov)
        false_neg += popcount64(x_words[w] & ~cov)
    return covered, false_neg


@njit(cache=True)
def fill_new_column(x_words, cover_words, n_bits, lam, prior_logit, u01):
    """Sample one freshly created code column, bit by bit.

    cover_words is the coverage of the target row by all *other* active
    codes; cells already covered contribute score 0, uncovered cells
    contribute +1/-1 with the sign of the data.  Returns the packed column
    (same word count as x_words); consumes u01[d] for every d < n_bits.
    """
    n_words = x_words.shape[0]
    out = np.zeros(n_words, dtype=np.uint64)
    for d in range(n_bits):
        w = d >> 6
        b = uint64(d & 63)
        if (cover_words[w] >> b) & uint64(1):
            score = 0.0
        elif (x_words[w] >> b) & uint64(1):
            score = 1.0
        else:
            score = -1.0
        p = sigmoid_scalar(lam * score + prior_logit)
        if u01[d] < p:
            out[w] |= uint64(1) << b
    return out


@njit(cache=True, parallel=True)
def count_predictions(data_words, code_words, rows, n_bits):
    """Confusion-matrix tallies of the Boolean product against the data.

    Returns (tp, fp, tn, fn) summed over all cells.  Padding bits are never
    negated: everything is derived from popcounts of cover, data, and their
    intersection, all of which have zero padding.
    """
    n_rows = rows.shape[0]
    n_codes = rows.shape[1]
    n_words = data_words.shape[1]
    tp = 0
    fp = 0
    tn = 0
    fn = 0
    for r in prange(n_rows):
        both = 0
        cov = 0
        dat = 0
        for w in range(n_words):
            cw = uint64(0)
            for l in range(n_codes):
                if rows[r, l] == 1:
                    cw |= code_words[l, w]
            xw = data_words[r, w]
            both += popcount64(cw & xw)
            cov += popcount64(cw)
            dat += popcount64(xw)
        tp += both
        fp += cov - both
        fn += dat - both
        tn += n_bits - cov - dat + both
    return tp, fp, tn, fn
