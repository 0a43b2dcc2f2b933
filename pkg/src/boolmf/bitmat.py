"""Bit-packed binary matrices and Boolean-product scoring.

A matrix is stored row-major as uint64 words, 64 columns per word, least
significant bit first (column c lives in word c >> 6 at bit c & 63).  All
padding bits past the last column are kept at zero -- several popcount
shortcuts in the kernels rely on that invariant, so every mutating method
below preserves it.

Word storage is over-allocated along the column axis (doubling growth) so
the nonparametric sampler can append and drop latent columns without
reallocating on every step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels

__all__ = [
    "BinaryMatrix",
    "PredictionCounts",
    "boolean_product",
    "prediction_counts",
    "row_negative_counts",
]

_WORD_BITS = 64


def _words_for(n_cols: int) -> int:
    return (n_cols + _WORD_BITS - 1) // _WORD_BITS


def _as_bits(a, name: str) -> np.ndarray:
    """Validate and convert a 0/1 array-like to uint8."""
    arr = np.asarray(a)
    if arr.dtype == bool:
        return arr.astype(np.uint8)
    if not np.issubdtype(arr.dtype, np.integer):
        # allow float arrays that are exactly 0/1
        if not np.all(np.isin(arr, (0, 1))):
            raise ValueError(f"{name} must contain only 0 and 1")
        return arr.astype(np.uint8)
    if arr.size and (arr.min() < 0 or arr.max() > 1):
        raise ValueError(f"{name} must contain only 0 and 1")
    return arr.astype(np.uint8)


def _pack(dense: np.ndarray) -> np.ndarray:
    """Pack a (R, C) uint8 matrix into (R, words) uint64, LSB-first."""
    n_rows, n_cols = dense.shape
    n_words = _words_for(n_cols)
    if n_cols == 0:
        return np.zeros((n_rows, 0), dtype=np.uint64)
    packed = np.packbits(dense, axis=1, bitorder="little")
    pad = n_words * 8 - packed.shape[1]
    if pad:
        packed = np.pad(packed, ((0, 0), (0, pad)))
    # packbits mirrors the input's memory order; the uint64 view needs C order
    return np.ascontiguousarray(packed).view(np.uint64)


def _unpack(words: np.ndarray, n_cols: int) -> np.ndarray:
    n_rows = words.shape[0]
    if n_cols == 0:
        return np.zeros((n_rows, 0), dtype=np.uint8)
    as_bytes = np.ascontiguousarray(words).view(np.uint8)
    return np.unpackbits(as_bytes, axis=1, bitorder="little", count=n_cols)


class BinaryMatrix:
    """Dense 0/1 matrix held in packed form; see module docstring."""

    __slots__ = ("n_rows", "_n_cols", "_store")

    def __init__(self, n_rows: int, n_cols: int):
        if n_rows < 0 or n_cols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        self.n_rows = int(n_rows)
        self._n_cols = int(n_cols)
        self._store = np.zeros((n_rows, _words_for(n_cols)), dtype=np.uint64)

    @property
    def n_cols(self) -> int:
        return self._n_cols

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self._n_cols)

    @property
    def words(self) -> np.ndarray:
        """(n_rows, ceil(n_cols/64)) uint64 view; padding bits are zero."""
        return self._store[:, : _words_for(self._n_cols)]

    @classmethod
    def from_dense(cls, dense) -> "BinaryMatrix":
        arr = _as_bits(dense, "dense")
        if arr.ndim != 2:
            raise ValueError("dense input must be 2-D")
        m = cls.__new__(cls)
        m.n_rows = arr.shape[0]
        m._n_cols = arr.shape[1]
        m._store = _pack(arr)
        return m

    @classmethod
    def _from_words(cls, words: np.ndarray, n_cols: int) -> "BinaryMatrix":
        """Adopt an already packed (R, words_for(n_cols)) array.  Trusted
        callers only: padding bits must already be zero."""
        m = cls.__new__(cls)
        m.n_rows = words.shape[0]
        m._n_cols = n_cols
        m._store = words
        return m

    def to_dense(self) -> np.ndarray:
        return _unpack(self.words, self._n_cols)

    def get(self, r: int, c: int) -> int:
        self._check_index(r, c)
        w = self._store[r, c >> 6]
        return int((w >> np.uint64(c & 63)) & np.uint64(1))

    def set(self, r: int, c: int, value: int) -> None:
        self._check_index(r, c)
        if value not in (0, 1):
            raise ValueError("value must be 0 or 1")
        bit = np.uint64(1) << np.uint64(c & 63)
        if value:
            self._store[r, c >> 6] |= bit
        else:
            self._store[r, c >> 6] &= ~bit

    def _check_index(self, r: int, c: int) -> None:
        if not (0 <= r < self.n_rows and 0 <= c < self._n_cols):
            raise IndexError(
                f"index ({r}, {c}) out of range for {self.n_rows}x{self._n_cols} matrix"
            )

    def row(self, r: int) -> np.ndarray:
        """Row r as a dense uint8 vector."""
        if not 0 <= r < self.n_rows:
            raise IndexError(f"row {r} out of range")
        return _unpack(self.words[r : r + 1], self._n_cols)[0]

    def column(self, c: int) -> np.ndarray:
        """Column c as a dense uint8 vector."""
        if not 0 <= c < self._n_cols:
            raise IndexError(f"column {c} out of range")
        return ((self._store[:, c >> 6] >> np.uint64(c & 63)) & np.uint64(1)).astype(
            np.uint8
        )

    def append_columns(self, k: int) -> None:
        """Add k all-zero columns, growing capacity geometrically."""
        if k < 0:
            raise ValueError("cannot append a negative number of columns")
        need = _words_for(self._n_cols + k)
        if need > self._store.shape[1]:
            cap = max(need, 2 * self._store.shape[1], 1)
            grown = np.zeros((self.n_rows, cap), dtype=np.uint64)
            grown[:, : self._store.shape[1]] = self._store
            self._store = grown
        # new bits are already zero thanks to the padding invariant
        self._n_cols += k

    def delete_columns(self, indices) -> None:
        idx = np.atleast_1d(np.asarray(indices, dtype=np.int64))
        if idx.size == 0:
            return
        if idx.min() < 0 or idx.max() >= self._n_cols:
            raise IndexError("column index out of range")
        if np.unique(idx).size != idx.size:
            raise ValueError("duplicate column indices")
        keep = np.setdiff1d(np.arange(self._n_cols), idx)
        dense = self.to_dense()[:, keep]
        self._n_cols = dense.shape[1]
        self._store = _pack(dense)

    def transpose(self) -> "BinaryMatrix":
        return BinaryMatrix.from_dense(self.to_dense().T)

    def copy(self) -> "BinaryMatrix":
        m = BinaryMatrix.__new__(BinaryMatrix)
        m.n_rows = self.n_rows
        m._n_cols = self._n_cols
        m._store = self._store.copy()
        return m

    def count_ones(self) -> int:
        return int(np.bitwise_count(self.words).sum(dtype=np.int64))

    def density(self) -> float:
        cells = self.n_rows * self._n_cols
        return self.count_ones() / cells if cells else 0.0

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and bool(np.array_equal(self.words, other.words))
        )

    def __repr__(self) -> str:
        return f"BinaryMatrix({self.n_rows}x{self._n_cols}, density={self.density():.3f})"


@dataclass(frozen=True)
class PredictionCounts:
    """Confusion tallies of a Boolean product against observed data."""

    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("prediction counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def correct(self) -> int:
        """Cells where prediction and data agree."""
        return self.tp + self.tn

    @property
    def wrong(self) -> int:
        return self.fp + self.fn


def _check_factor_shapes(X: BinaryMatrix, Z: BinaryMatrix, U: BinaryMatrix) -> None:
    if Z.n_rows != X.n_rows:
        raise ValueError(f"Z has {Z.n_rows} rows, data has {X.n_rows}")
    if U.n_rows != X.n_cols:
        raise ValueError(f"U has {U.n_rows} rows, data has {X.n_cols} columns")
    if Z.n_cols != U.n_cols:
        raise ValueError(
            f"factor widths differ: Z has {Z.n_cols} columns, U has {U.n_cols}"
        )


def boolean_product(Z: BinaryMatrix, U: BinaryMatrix) -> BinaryMatrix:
    """Boolean matrix product: out[n, d] = OR_l (Z[n, l] AND U[d, l])."""
    if Z.n_cols != U.n_cols:
        raise ValueError(
            f"factor widths differ: Z has {Z.n_cols} columns, U has {U.n_cols}"
        )
    n, d = Z.n_rows, U.n_rows
    code_words = _pack(U.to_dense().T)  # (L, words_for(d))
    out = np.zeros((n, _words_for(d)), dtype=np.uint64)
    zd = Z.to_dense().astype(bool)
    for l in range(Z.n_cols):
        out[zd[:, l]] |= code_words[l]
    return BinaryMatrix._from_words(out, d)


def prediction_counts(
    X: BinaryMatrix, Z: BinaryMatrix, U: BinaryMatrix
) -> PredictionCounts:
    """Cell-wise confusion counts of boolean_product(Z, U) against X."""
    _check_factor_shapes(X, Z, U)
    if X.n_rows == 0 or X.n_cols == 0:
        return PredictionCounts(0, 0, 0, 0)
    tp, fp, tn, fn = _kernels.count_predictions(
        np.ascontiguousarray(X.words),
        _pack(U.to_dense().T),
        Z.to_dense(),
        X.n_cols,
    )
    return PredictionCounts(int(tp), int(fp), int(tn), int(fn))


def row_negative_counts(x_row, z_row, U: BinaryMatrix) -> tuple[int, int]:
    """(tn, fn) over the cells of one row that the row's codes leave at zero.

    x_row is the data row (length U.n_rows), z_row the row's code
    assignments (length U.n_cols).  Cells covered by any active code are
    predicted 1 and don't count here.
    """
    x = _as_bits(x_row, "x_row")
    z = _as_bits(z_row, "z_row")
    if x.shape != (U.n_rows,):
        raise ValueError(f"x_row has length {x.shape[0]}, expected {U.n_rows}")
    if z.shape != (U.n_cols,):
        raise ValueError(f"z_row has length {z.shape[0]}, expected {U.n_cols}")
    active = z == 1
    if active.any():
        covered = U.to_dense()[:, active].any(axis=1)
    else:
        covered = np.zeros(U.n_rows, dtype=bool)
    negative = ~covered
    fn = int(np.sum(negative & (x == 1)))
    tn = int(np.sum(negative)) - fn
    return tn, fn
