"""Batch alternating least squares baseline with hard constraints.

Alternates a simplex-constrained abundance step (shared with the
streaming solver) and a channel-wise nonnegative least-squares endmember
step until the relative residual change stalls.  The abundance step is
iterative rather than exact, so a trial update that fails to lower the
Frobenius residual is discarded and the alternation stops at the last
improving iterate; the recorded residual sequence is nonincreasing by
construction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .abundance import FclsConfig, estimate_concentrations
from .datamodel import (
    ConcentrationMatrix,
    EndmemberMatrix,
    FloatArray,
    SpectraMatrix,
)
from .vca import VcaConfig, vca

RANK_COND_LIMIT = 1e12


@dataclass(frozen=True)
class McrConfig:
    init: EndmemberMatrix
    max_iters: int = 60
    rel_tol: float = 1e-8
    fcls: FclsConfig = FclsConfig()

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.rel_tol < 0.0:
            raise ValueError("rel_tol must be >= 0")


@dataclass(frozen=True)
class McrResult:
    concentrations: ConcentrationMatrix
    endmembers: EndmemberMatrix
    residuals: tuple[float, ...]
    n_iters: int


def pca_nonneg_init(
    spectra: SpectraMatrix | FloatArray, n_endmembers: int, seed: int = 0
) -> EndmemberMatrix:
    """Clamped PCA loadings as an initial guess, VCA if clamping nulls a column."""
    rows = spectra.values if isinstance(spectra, SpectraMatrix) else np.asarray(spectra)
    _, _, vt = np.linalg.svd(rows, full_matrices=False)
    loadings = vt[:n_endmembers].T.copy()  # (L, K)
    # Sign convention: make each loading mostly positive before clamping.
    signs = np.where(loadings.sum(axis=0) < 0.0, -1.0, 1.0)
    clamped = np.maximum(loadings * signs, 0.0)
    if np.any(np.max(clamped, axis=0) == 0.0):
        return vca(rows, VcaConfig(n_endmembers, seed=seed))
    return EndmemberMatrix(clamped)


def _endmember_step(rows: FloatArray, concentrations: FloatArray) -> FloatArray:
    """Per-channel NNLS: each channel's endmember values fit that channel's data."""
    design = concentrations
    if np.linalg.cond(design) > RANK_COND_LIMIT:
        warnings.warn(
            "concentration matrix is rank deficient; adding ridge to the design",
            stacklevel=3,
        )
        k = design.shape[1]
        design = np.vstack([design, np.sqrt(1e-10) * np.eye(k)])
        rows = np.vstack([rows, np.zeros((k, rows.shape[1]))])
    n_channels = rows.shape[1]
    k = design.shape[1]
    out = np.empty((n_channels, k))
    for channel in range(n_channels):
        out[channel], _ = nnls(design, rows[:, channel])
    return out


def mcr_als(spectra: SpectraMatrix | FloatArray, config: McrConfig) -> McrResult:
    """Alternate constrained C and S steps on the full data block.

    Parameters
    ----------
    spectra : (n, L) rows
        All spectra acquired so far.
    config : McrConfig
        Initial endmembers, iteration cap (default 60) and the relative
        residual-change tolerance that stops the alternation.

    Returns
    -------
    McrResult
        Final abundances and endmembers plus the residual after each
        iteration (Frobenius norm of Y - C S^T, nonincreasing).
    """
    rows = spectra.values if isinstance(spectra, SpectraMatrix) else np.asarray(spectra)
    if rows.ndim != 2:
        raise ValueError("spectra must be a 2-D array of row spectra")
    if config.init.n_channels != rows.shape[1]:
        raise ValueError("init endmember channels do not match the data")

    s = config.init.values
    residuals: list[float] = []
    conc = None
    for _iteration in range(config.max_iters):
        trial_conc = estimate_concentrations(rows, s, config.fcls)
        trial_s = _endmember_step(rows, trial_conc)
        trial_res = float(np.linalg.norm(rows - trial_conc @ trial_s.T))
        # The C-step is inexact, so a trial pair can raise the residual;
        # keep the last improving iterate instead of recording it.
        if residuals and trial_res > residuals[-1] + 1e-12:
            break
        conc, s = trial_conc, trial_s
        residuals.append(trial_res)
        if len(residuals) > 1:
            prev = residuals[-2]
            change = abs(prev - residuals[-1]) / max(prev, np.finfo(float).tiny)
            if change < config.rel_tol:
                break

    return McrResult(
        concentrations=ConcentrationMatrix(conc),
        endmembers=EndmemberMatrix(s),
        residuals=tuple(residuals),
        n_iters=len(residuals),
    )
