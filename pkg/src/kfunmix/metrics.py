"""Evaluation metrics and trace serialization.

Endmember error is the spectral angle in degrees, averaged after an
optimal one-to-one alignment between estimated and true components.
Abundance error is a root mean square over all entries after applying the
same alignment.  Reconstruction error is relative in Frobenius norm, with
a rank-K PCA projection giving the attainable lower bound.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .datamodel import (
    ConcentrationMatrix,
    EndmemberMatrix,
    FloatArray,
    SpectraMatrix,
    format_float,
)


def sad(a: FloatArray, b: FloatArray) -> float:
    """Spectral angle between two vectors, in degrees."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("spectral angle is undefined for zero vectors")
    cosine = float(np.dot(a, b)) / (na * nb)
    return float(np.degrees(np.arccos(np.clip(cosine, -1.0, 1.0))))


def _columns(m: EndmemberMatrix | FloatArray) -> FloatArray:
    return m.values if isinstance(m, EndmemberMatrix) else np.asarray(m, dtype=np.float64)


def align_components(
    estimated: EndmemberMatrix | FloatArray, truth: EndmemberMatrix | FloatArray
) -> np.ndarray:
    """Permutation p minimizing the total angle, so column p[k] matches truth k."""
    est = _columns(estimated)
    ref = _columns(truth)
    if est.shape[1] != ref.shape[1]:
        raise ValueError("component counts differ")
    k = ref.shape[1]
    cost = np.empty((k, k))
    for i in range(k):
        for j in range(k):
            cost[i, j] = sad(est[:, j], ref[:, i])
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(k, dtype=int)
    perm[rows] = cols
    return perm


def asad(
    estimated: EndmemberMatrix | FloatArray, truth: EndmemberMatrix | FloatArray
) -> float:
    """Average spectral angle in degrees after optimal alignment."""
    est = _columns(estimated)
    ref = _columns(truth)
    perm = align_components(est, ref)
    angles = [sad(est[:, perm[i]], ref[:, i]) for i in range(ref.shape[1])]
    return float(np.mean(angles))


def rmse_concentrations(
    estimated: ConcentrationMatrix | FloatArray,
    truth: ConcentrationMatrix | FloatArray,
    alignment: np.ndarray,
) -> float:
    """Root mean square abundance error over all entries, after alignment."""
    est = estimated.values if isinstance(estimated, ConcentrationMatrix) else np.asarray(estimated)
    ref = truth.values if isinstance(truth, ConcentrationMatrix) else np.asarray(truth)
    if est.shape != ref.shape:
        raise ValueError("concentration shapes differ")
    aligned = est[:, alignment]
    return float(np.sqrt(np.sum((ref - aligned) ** 2) / ref.size))


def reconstruction_error(
    spectra_rows: SpectraMatrix | FloatArray,
    concentrations: ConcentrationMatrix | FloatArray,
    endmembers: EndmemberMatrix | FloatArray,
) -> float:
    """Relative Frobenius error of the mixing-model reconstruction."""
    if isinstance(spectra_rows, SpectraMatrix):
        spectra_rows = spectra_rows.values
    y = np.asarray(spectra_rows, dtype=np.float64)
    c = concentrations.values if isinstance(concentrations, ConcentrationMatrix) else np.asarray(concentrations)
    s = _columns(endmembers)
    norm_y = float(np.linalg.norm(y))
    if norm_y == 0.0:
        raise ValueError("reconstruction error is undefined for all-zero data")
    return float(np.linalg.norm(y - c @ s.T)) / norm_y


def pca_lower_bound(
    spectra_rows: SpectraMatrix | FloatArray, n_components: int, centered: bool = False
) -> float:
    """Relative error of the best rank-K linear reconstruction.

    Projects the rows onto the span of the first K right singular vectors;
    by default the data is not mean-centered, matching the reconstruction
    error definition above.  centered=True reports the affine variant.
    """
    if isinstance(spectra_rows, SpectraMatrix):
        spectra_rows = spectra_rows.values
    y = np.asarray(spectra_rows, dtype=np.float64)
    if n_components < 1 or n_components > min(y.shape):
        raise ValueError(f"n_components must be in [1, {min(y.shape)}]")
    norm_y = float(np.linalg.norm(y))
    if norm_y == 0.0:
        raise ValueError("lower bound is undefined for all-zero data")
    if centered:
        mean = y.mean(axis=0, keepdims=True)
        shifted = y - mean
        _, _, vt = np.linalg.svd(shifted, full_matrices=False)
        loadings = vt[:n_components].T
        recon = mean + (shifted @ loadings) @ loadings.T
    else:
        _, _, vt = np.linalg.svd(y, full_matrices=False)
        loadings = vt[:n_components].T
        recon = (y @ loadings) @ loadings.T
    return float(np.linalg.norm(y - recon)) / norm_y


@dataclass(frozen=True)
class MetricRecord:
    """Metrics at one time index; fields are None when not evaluated there."""

    t: int
    asad_deg: float | None
    rmse: float | None
    re: float | None
    wall_ms: float

    def __post_init__(self) -> None:
        if self.t < 1:
            raise ValueError("t must be >= 1")
        if self.asad_deg is not None and not 0.0 <= self.asad_deg <= 180.0:
            raise ValueError(f"asad_deg must be in [0, 180], got {self.asad_deg}")
        if self.rmse is not None and self.rmse < 0.0:
            raise ValueError("rmse must be >= 0")
        if self.re is not None and self.re < 0.0:
            raise ValueError("re must be >= 0")
        if self.wall_ms < 0.0:
            raise ValueError("wall_ms must be >= 0")


TRACE_HEADER = "t,asad_deg,rmse,re,wall_ms"


def _opt(x: float | None) -> str:
    return "nan" if x is None else format_float(x)


def write_trace_csv(
    records: tuple[MetricRecord, ...] | list[MetricRecord],
    path: str | os.PathLike[str],
    comments: dict[str, str] | None = None,
) -> None:
    """Write metric records with optional `# key=value` comment lines on top."""
    lines = []
    if comments:
        lines.extend(f"# {k}={comments[k]}" for k in sorted(comments))
    lines.append(TRACE_HEADER)
    for rec in records:
        lines.append(
            f"{rec.t},{_opt(rec.asad_deg)},{_opt(rec.rmse)},{_opt(rec.re)},"
            f"{format_float(rec.wall_ms)}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trace_csv(
    path: str | os.PathLike[str],
) -> tuple[tuple[MetricRecord, ...], dict[str, str]]:
    """Read a trace written by :func:`write_trace_csv`."""
    comments: dict[str, str] = {}
    records: list[MetricRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    body_seen = False
    for line_no, line in enumerate(lines, start=1):
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            comments[key] = value
            continue
        if not body_seen:
            if line != TRACE_HEADER:
                raise ValueError(f"{path}: line {line_no}: unexpected header {line!r}")
            body_seen = True
            continue
        fields = line.split(",")
        if len(fields) != 5:
            raise ValueError(f"{path}: line {line_no}: expected 5 fields")
        vals = [float(f) for f in fields[1:]]
        records.append(
            MetricRecord(
                t=int(fields[0]),
                asad_deg=None if np.isnan(vals[0]) else vals[0],
                rmse=None if np.isnan(vals[1]) else vals[1],
                re=None if np.isnan(vals[2]) else vals[2],
                wall_ms=vals[3],
            )
        )
    return tuple(records), comments
