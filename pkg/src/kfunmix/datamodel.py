"""Core data containers and CSV persistence.

All matrices are float64 numpy arrays wrapped in frozen dataclasses that
validate their defining invariants on construction.  Shapes follow the
row-per-observation convention: spectra are (n_spectra, n_channels),
concentrations are (n_spectra, n_endmembers), endmembers are stored
column-wise as (n_channels, n_endmembers).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

FloatArray = npt.NDArray[np.float64]

# Global tolerances: nonnegativity and simplex closure are checked everywhere
# with these two values so the whole package agrees on what "feasible" means.
NONNEG_TOL = 1e-9
CLOSURE_TOL = 1e-6


def _as_float_matrix(values: npt.ArrayLike, name: str) -> FloatArray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class SpectraMatrix:
    """Measured spectra, one row per observation."""

    values: FloatArray

    def __post_init__(self) -> None:
        arr = _as_float_matrix(self.values, "spectra")
        if arr.shape[0] < 1 or arr.shape[1] < 2:
            raise ValueError(f"spectra must be at least 1x2, got {arr.shape}")
        object.__setattr__(self, "values", arr)

    @property
    def n_spectra(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class ConcentrationMatrix:
    """Per-observation abundances, each row on the probability simplex."""

    values: FloatArray

    def __post_init__(self) -> None:
        arr = _as_float_matrix(self.values, "concentrations")
        if np.min(arr) < -NONNEG_TOL:
            raise ValueError(
                f"concentration entries must be >= -{NONNEG_TOL}, "
                f"found {np.min(arr)}"
            )
        row_sums = arr.sum(axis=1)
        worst = np.max(np.abs(row_sums - 1.0))
        if worst > CLOSURE_TOL:
            raise ValueError(
                f"concentration rows must sum to 1 within {CLOSURE_TOL}, "
                f"worst deviation {worst}"
            )
        object.__setattr__(self, "values", arr)

    @property
    def n_spectra(self) -> int:
        return self.values.shape[0]

    @property
    def n_endmembers(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class EndmemberMatrix:
    """Pure-component spectra stored as columns, nonnegative."""

    values: FloatArray

    def __post_init__(self) -> None:
        arr = _as_float_matrix(self.values, "endmembers")
        if np.min(arr) < -NONNEG_TOL:
            raise ValueError(
                f"endmember entries must be >= -{NONNEG_TOL}, found {np.min(arr)}"
            )
        col_max = np.max(np.abs(arr), axis=0)
        if np.any(col_max == 0.0):
            raise ValueError("endmember matrix has an all-zero column")
        object.__setattr__(self, "values", arr)

    @property
    def n_channels(self) -> int:
        return self.values.shape[0]

    @property
    def n_endmembers(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class DatasetBundle:
    """A dataset plus whatever ground truth is known about it."""

    spectra: SpectraMatrix
    concentrations: ConcentrationMatrix | None
    endmembers: EndmemberMatrix | None
    noise_variance_true: float
    seed: int

    def __post_init__(self) -> None:
        if self.noise_variance_true < 0.0:
            raise ValueError("noise_variance_true must be >= 0")
        if self.concentrations is not None:
            if self.concentrations.n_spectra != self.spectra.n_spectra:
                raise ValueError("concentration rows do not match spectra rows")
        if self.endmembers is not None:
            if self.endmembers.n_channels != self.spectra.n_channels:
                raise ValueError("endmember channels do not match spectra channels")
        if self.concentrations is not None and self.endmembers is not None:
            if self.concentrations.n_endmembers != self.endmembers.n_endmembers:
                raise ValueError("concentration and endmember counts disagree")


def format_float(x: float) -> str:
    # 17 significant digits round-trips any float64 exactly.
    return f"{x:.17g}"


def save_matrix_csv(values: npt.ArrayLike, path: str | os.PathLike[str]) -> None:
    """Write a matrix as headered CSV: first line `rows,cols`, then the rows."""
    arr = _as_float_matrix(values, "matrix")
    rows, cols = arr.shape
    lines = [f"{rows},{cols}"]
    for r in range(rows):
        lines.append(",".join(format_float(v) for v in arr[r]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_matrix_csv(path: str | os.PathLike[str]) -> FloatArray:
    """Read a headered CSV matrix, reporting malformed content by line number."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read().split("\n")
    # Drop a trailing empty line from the final LF; keep 1-based numbering.
    numbered = [(i + 1, line) for i, line in enumerate(raw)]
    if numbered and numbered[-1][1] == "":
        numbered = numbered[:-1]
    numbered = [(n, line) for n, line in numbered if not line.startswith("#")]
    if not numbered:
        raise ValueError(f"{path}: line 1: missing header")

    header_no, header = numbered[0]
    parts = header.split(",")
    if len(parts) != 2:
        raise ValueError(f"{path}: line {header_no}: header must be 'rows,cols'")
    try:
        rows, cols = int(parts[0]), int(parts[1])
    except ValueError:
        raise ValueError(
            f"{path}: line {header_no}: non-integer header fields {header!r}"
        ) from None
    if rows < 1 or cols < 1:
        raise ValueError(f"{path}: line {header_no}: header dimensions must be >= 1")

    body = numbered[1:]
    if len(body) != rows:
        raise ValueError(
            f"{path}: line {header_no}: header declares {rows} rows, file has {len(body)}"
        )
    out = np.empty((rows, cols), dtype=np.float64)
    for r, (line_no, line) in enumerate(body):
        fields = line.split(",")
        if len(fields) != cols:
            raise ValueError(
                f"{path}: line {line_no}: expected {cols} fields, got {len(fields)}"
            )
        for c, tok in enumerate(fields):
            try:
                out[r, c] = float(tok)
            except ValueError:
                raise ValueError(
                    f"{path}: line {line_no}: non-numeric token {tok!r}"
                ) from None
    return out


def save_dataset(bundle: DatasetBundle, directory: str | os.PathLike[str]) -> None:
    """Persist a bundle as a directory of CSV files (Y, optional C/S, meta)."""
    os.makedirs(directory, exist_ok=True)
    save_matrix_csv(bundle.spectra.values, os.path.join(directory, "Y.csv"))
    if bundle.concentrations is not None:
        save_matrix_csv(bundle.concentrations.values, os.path.join(directory, "C.csv"))
    if bundle.endmembers is not None:
        save_matrix_csv(bundle.endmembers.values, os.path.join(directory, "S.csv"))
    meta = [
        f"seed,{bundle.seed}",
        f"noise_variance_true,{format_float(bundle.noise_variance_true)}",
    ]
    with open(os.path.join(directory, "meta.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(meta) + "\n")


def load_dataset(directory: str | os.PathLike[str]) -> DatasetBundle:
    """Load a bundle saved by :func:`save_dataset`; C/S are optional."""
    y_path = os.path.join(directory, "Y.csv")
    if not os.path.exists(y_path):
        raise FileNotFoundError(f"{y_path}: missing spectra file")
    spectra = SpectraMatrix(load_matrix_csv(y_path))

    conc = None
    c_path = os.path.join(directory, "C.csv")
    if os.path.exists(c_path):
        conc = ConcentrationMatrix(load_matrix_csv(c_path))
    ends = None
    s_path = os.path.join(directory, "S.csv")
    if os.path.exists(s_path):
        ends = EndmemberMatrix(load_matrix_csv(s_path))

    seed = 0
    noise_var = 0.0
    meta_path = os.path.join(directory, "meta.csv")
    if os.path.exists(meta_path):
        with open(meta_path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh.read().splitlines(), start=1):
                if not line:
                    continue
                key, _, value = line.partition(",")
                if key == "seed":
                    seed = int(value)
                elif key == "noise_variance_true":
                    noise_var = float(value)
                else:
                    raise ValueError(f"{meta_path}: line {line_no}: unknown key {key!r}")
    return DatasetBundle(spectra, conc, ends, noise_var, seed)
