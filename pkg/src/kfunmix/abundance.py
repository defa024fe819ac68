"""Fully constrained abundance estimation.

Solves ``argmin_c ||y - S c||^2  subject to  c >= 0, sum(c) = 1`` with an
ADMM splitting: the equality-constrained least-squares block has a closed
form through its KKT system, the nonnegativity block is a clamp, and the
result is projected onto the simplex at exit so closure always holds.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .datamodel import EndmemberMatrix, FloatArray

# Ridge added to S^T S so near-duplicate endmember columns stay solvable.
RIDGE = 1e-10
COND_WARN = 1e8


@dataclass(frozen=True)
class FclsConfig:
    """ADMM settings for the simplex-constrained solver."""

    rho: float = 1.0
    max_iters: int = 200
    tol: float = 1e-8

    def __post_init__(self) -> None:
        if self.rho <= 0.0:
            raise ValueError("rho must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol < 0.0:
            raise ValueError("tol must be >= 0")


def project_simplex(v: FloatArray) -> FloatArray:
    """Euclidean projection of a vector onto the probability simplex."""
    v = np.asarray(v, dtype=np.float64)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    cond = u - css / ind > 0
    k = int(np.nonzero(cond)[0][-1])
    tau = css[k] / float(k + 1)
    return np.maximum(v - tau, 0.0)


def _project_simplex_rows(rows: FloatArray) -> FloatArray:
    u = np.sort(rows, axis=1)[:, ::-1]
    css = np.cumsum(u, axis=1) - 1.0
    ind = np.arange(1, rows.shape[1] + 1)[None, :]
    cond = u - css / ind > 0
    k = cond.shape[1] - 1 - np.argmax(cond[:, ::-1], axis=1)
    tau = css[np.arange(rows.shape[0]), k] / (k + 1.0)
    return np.maximum(rows - tau[:, None], 0.0)


def estimate_concentrations(
    spectra_rows: FloatArray,
    endmembers: EndmemberMatrix | FloatArray,
    config: FclsConfig = FclsConfig(),
) -> FloatArray:
    """Solve the simplex-constrained least-squares problem for many spectra.

    Parameters
    ----------
    spectra_rows : (n, L) array
        One spectrum per row; all share the endmember matrix.
    endmembers : (L, K) matrix
        Candidate pure spectra as columns; must have full column rank
        (a 1e-10 ridge keeps near-rank-deficient systems solvable, with a
        warning once the condition number of S passes 1e8).
    config : FclsConfig
        ADMM step size, iteration cap and early-exit tolerance.

    Returns
    -------
    (n, K) array
        One abundance row per spectrum, each on the simplex.
    """
    s = endmembers.values if isinstance(endmembers, EndmemberMatrix) else np.asarray(endmembers)
    rows = np.atleast_2d(np.asarray(spectra_rows, dtype=np.float64))
    n, n_channels = rows.shape
    if s.shape[0] != n_channels:
        raise ValueError(
            f"endmember channel count {s.shape[0]} does not match spectra ({n_channels})"
        )
    k = s.shape[1]
    if k == 1:
        return np.ones((n, 1))

    cond_s = np.linalg.cond(s)
    if cond_s > COND_WARN:
        warnings.warn(
            f"endmember matrix is ill-conditioned (cond={cond_s:.3g}); "
            "abundances may be unstable",
            stacklevel=2,
        )

    gram = 2.0 * (s.T @ s + RIDGE * np.eye(k)) + config.rho * np.eye(k)
    b = np.linalg.inv(gram)
    b_one = b @ np.ones(k)
    one_b_one = float(np.sum(b_one))

    sty2 = 2.0 * (s.T @ rows.T)  # (K, n), constant across iterations
    z = np.zeros((k, n))
    u = np.zeros((k, n))
    x = np.zeros((k, n))
    for _ in range(config.max_iters):
        q = sty2 + config.rho * (z - u)
        nu = (b_one @ q - 1.0) / one_b_one
        x = b @ q - np.outer(b_one, nu)
        z_old = z
        z = np.maximum(x + u, 0.0)
        u = u + x - z
        if config.tol > 0.0:
            primal = float(np.max(np.abs(x - z))) if n else 0.0
            dual = config.rho * float(np.max(np.abs(z - z_old))) if n else 0.0
            if primal <= config.tol and dual <= config.tol:
                break
    return _project_simplex_rows(x.T)


def estimate_concentration(
    spectrum: FloatArray,
    endmembers: EndmemberMatrix | FloatArray,
    config: FclsConfig = FclsConfig(),
) -> FloatArray:
    """Abundance vector of a single spectrum, on the simplex."""
    spectrum = np.asarray(spectrum, dtype=np.float64)
    if spectrum.ndim != 1:
        raise ValueError("spectrum must be a vector")
    return estimate_concentrations(spectrum[None, :], endmembers, config)[0]
