"""File formats: dataset ingestion, chain persistence, heatmap export.

Two matrix formats, both plain UTF-8 text:

* ``dense-csv`` -- one row per line, comma-separated numbers.
* ``sparse-coo`` -- a header line ``N D``, then one ``row col [value]``
  line per nonzero, zero-based; a missing value means 1.

Either way entries are binarized on load: strictly greater than the
threshold (default 0) becomes 1, the rest 0.  Negative, NaN or infinite
entries are rejected rather than coerced.

A chain directory holds ``config.json`` (format version + the run's
configuration echo), ``traces.csv`` (sample_index, L, lambda; the index
is the absolute sweep number, burn-in excluded), and optionally
``factors/`` with one sparse file per factor per sample.  Floats in
traces.csv are written with repr so round-trips are exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bitmat import BinaryMatrix
from .posterior import Chain, ChainSample

__all__ = [
    "FORMATS",
    "DataFormatError",
    "DatasetSpec",
    "load",
    "save_matrix",
    "save_chain",
    "load_chain",
    "export_heatmap",
]

FORMATS = ("dense-csv", "sparse-coo")
_CHAIN_FORMAT_VERSION = 1


class DataFormatError(ValueError):
    """A file failed to parse; the message points at the offending line."""


@dataclass(frozen=True)
class DatasetSpec:
    """Where a matrix lives and how to read it."""

    path: str | Path
    format: str = "dense-csv"
    binarize_threshold: float = 0.0

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ValueError(
                f"unknown format {self.format!r}; expected one of {FORMATS}"
            )
        t = self.binarize_threshold
        if not math.isfinite(t) or t < 0:
            raise ValueError("binarize_threshold must be finite and non-negative")


def _binarize(value: float, threshold: float, path, lineno: int) -> int:
    if not math.isfinite(value) or value < 0:
        raise DataFormatError(f"{path}:{lineno}: entry {value!r} is not a valid count")
    return 1 if value > threshold else 0


def _numbered_lines(path: Path):
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line:
            yield lineno, line


def _load_dense(path: Path, threshold: float) -> BinaryMatrix:
    rows = []
    width = None
    for lineno, line in _numbered_lines(path):
        tokens = line.split(",")
        if width is None:
            width = len(tokens)
        elif len(tokens) != width:
            raise DataFormatError(
                f"{path}:{lineno}: row has {len(tokens)} columns, expected {width}"
            )
        try:
            values = [float(t) for t in tokens]
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
        rows.append([_binarize(v, threshold, path, lineno) for v in values])
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    return BinaryMatrix.from_dense(np.array(rows, dtype=np.uint8))


def _load_sparse(path: Path, threshold: float) -> BinaryMatrix:
    lines = _numbered_lines(path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise DataFormatError(f"{path}: empty file") from None
    parts = header.split()
    if len(parts) != 2:
        raise DataFormatError(f"{path}:{lineno}: header must be 'n_rows n_cols'")
    try:
        n_rows, n_cols = int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
    if n_rows < 1 or n_cols < 0:
        raise DataFormatError(f"{path}:{lineno}: invalid shape {n_rows}x{n_cols}")
    dense = np.zeros((n_rows, n_cols), dtype=np.uint8)
    for lineno, line in lines:
        parts = line.split()
        if len(parts) not in (2, 3):
            raise DataFormatError(
                f"{path}:{lineno}: expected 'row col' or 'row col value'"
            )
        try:
            r, c = int(parts[0]), int(parts[1])
            value = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
        if not (0 <= r < n_rows and 0 <= c < n_cols):
            raise DataFormatError(
                f"{path}:{lineno}: index ({r}, {c}) outside {n_rows}x{n_cols}"
            )
        dense[r, c] |= _binarize(value, threshold, path, lineno)
    return BinaryMatrix.from_dense(dense)


def load(spec: DatasetSpec) -> BinaryMatrix:
    path = Path(spec.path)
    if spec.format == "dense-csv":
        return _load_dense(path, spec.binarize_threshold)
    return _load_sparse(path, spec.binarize_threshold)


def save_matrix(m: BinaryMatrix, path, format: str = "dense-csv") -> None:
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    if m.n_rows == 0 or (format == "dense-csv" and m.n_cols == 0):
        # dense text cannot represent zero-width rows; sparse can (header only)
        raise ValueError(f"cannot save an empty {m.n_rows}x{m.n_cols} matrix")
    path = Path(path)
    if format == "dense-csv":
        dense = m.to_dense()
        text = "\n".join(",".join(str(int(v)) for v in row) for row in dense)
        path.write_text(text + "\n", encoding="utf-8")
    else:
        out = [f"{m.n_rows} {m.n_cols}"]
        rows, cols = np.nonzero(m.to_dense())
        out.extend(f"{r} {c}" for r, c in zip(rows, cols))
        path.write_text("\n".join(out) + "\n", encoding="utf-8")


def _factor_paths(directory: Path, sample_index: int) -> tuple[Path, Path]:
    base = directory / "factors"
    return (
        base / f"sample_{sample_index:05d}_Z.coo",
        base / f"sample_{sample_index:05d}_U.coo",
    )


def save_chain(chain: Chain, directory) -> None:
    if len(chain) == 0:
        raise ValueError("refusing to save an empty chain")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = {
        "format_version": _CHAIN_FORMAT_VERSION,
        "burn_in": chain.burn_in,
        "n_recorded": len(chain),
        "has_factors": chain.has_factors,
        "config": chain.config_echo,
    }
    (directory / "config.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    lines = ["sample_index,L,lambda"]
    for i, s in enumerate(chain.samples):
        lines.append(f"{chain.burn_in + i},{s.n_latent},{float(s.lam)!r}")
    (directory / "traces.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if chain.has_factors:
        (directory / "factors").mkdir(exist_ok=True)
        for i, s in enumerate(chain.samples):
            z_path, u_path = _factor_paths(directory, chain.burn_in + i)
            save_matrix(s.Z, z_path, "sparse-coo")
            save_matrix(s.U, u_path, "sparse-coo")


def load_chain(directory) -> Chain:
    directory = Path(directory)
    meta_path = directory / "config.json"
    if not meta_path.is_file():
        raise DataFormatError(f"{meta_path}: missing chain metadata")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{meta_path}: {exc}") from exc
    version = meta.get("format_version")
    if version != _CHAIN_FORMAT_VERSION:
        raise DataFormatError(
            f"{meta_path}: unsupported chain format version {version!r}"
        )
    burn_in = int(meta["burn_in"])
    has_factors = bool(meta["has_factors"])

    trace_path = directory / "traces.csv"
    samples: list[ChainSample] = []
    rows = list(_numbered_lines(trace_path))
    if not rows or rows[0][1] != "sample_index,L,lambda":
        raise DataFormatError(f"{trace_path}: missing or malformed header")
    for lineno, line in rows[1:]:
        parts = line.split(",")
        if len(parts) != 3:
            raise DataFormatError(f"{trace_path}:{lineno}: expected 3 fields")
        try:
            idx, width, lam = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError as exc:
            raise DataFormatError(f"{trace_path}:{lineno}: {exc}") from exc
        Z = U = None
        if has_factors:
            z_path, u_path = _factor_paths(directory, idx)
            Z = load(DatasetSpec(z_path, "sparse-coo"))
            U = load(DatasetSpec(u_path, "sparse-coo"))
            if Z.n_cols != width or U.n_cols != width:
                raise DataFormatError(
                    f"{z_path}: factor width {Z.n_cols} does not match trace L={width}"
                )
        samples.append(ChainSample(n_latent=width, lam=lam, Z=Z, U=U))
    if int(meta.get("n_recorded", len(samples))) != len(samples):
        raise DataFormatError(f"{trace_path}: sample count disagrees with config.json")
    return Chain(samples=samples, burn_in=burn_in, config_echo=meta.get("config", {}))


def export_heatmap(matrix, path) -> None:
    """Write a real matrix in [0, 1] as a binary PGM image, 1=black 0=white."""
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError("heatmap input must be a nonempty 2-D matrix")
    if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("heatmap entries must lie in [0, 1]")
    n_rows, n_cols = arr.shape
    gray = np.round((1.0 - arr) * 255.0).astype(np.uint8)
    header = f"P5\n{n_cols} {n_rows}\n255\n".encode("ascii")
    Path(path).write_bytes(header + gray.tobytes())
