"""Dimensionality reduction onto a truncated real Fourier subspace.

A spectrum y of length L is mapped to the real vector
``[Re(F^T y); Im(F^T y)]`` of length 2M, where F holds the first M columns
of the unitary DFT matrix (scaling 1/sqrt(L)).  Harmonics other than DC
(and Nyquist, when L is even and retained) are weighted by sqrt(2) so that
the squared norm of the reduced vector equals the energy of the one-sided
spectrum.  At M = floor(L/2) + 1 the map preserves the full energy of y.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datamodel import FloatArray, SpectraMatrix


def max_harmonics(n_channels: int) -> int:
    """Number of non-redundant harmonics of a real signal of length L."""
    return n_channels // 2 + 1


@dataclass(frozen=True)
class FourierBasis:
    """Truncated real DFT operator for spectra of a fixed channel count.

    ``real_rows`` and ``imag_rows`` are the unscaled (M, L) cosine and
    negative-sine rows including the unitary 1/sqrt(L) factor; ``scale``
    holds the per-harmonic weights applied on top (1 for DC and Nyquist,
    sqrt(2) otherwise).
    """

    n_channels: int
    n_harmonics: int
    real_rows: FloatArray
    imag_rows: FloatArray
    scale: FloatArray
    operator: FloatArray = field(repr=False, default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.n_channels < 2:
            raise ValueError("n_channels must be >= 2")
        if not 1 <= self.n_harmonics <= max_harmonics(self.n_channels):
            raise ValueError(
                f"n_harmonics must be in [1, {max_harmonics(self.n_channels)}], "
                f"got {self.n_harmonics}"
            )
        expected = (self.n_harmonics, self.n_channels)
        if self.real_rows.shape != expected or self.imag_rows.shape != expected:
            raise ValueError("basis row shapes do not match (M, L)")
        if self.scale.shape != (self.n_harmonics,):
            raise ValueError("scale must have one weight per harmonic")
        if np.any(self.imag_rows[0] != 0.0):
            raise ValueError("imaginary row of the DC harmonic must be zero")
        if self.operator is None:
            op = np.vstack(
                [self.scale[:, None] * self.real_rows, self.scale[:, None] * self.imag_rows]
            )
            object.__setattr__(self, "operator", op)

    @property
    def dim_reduced(self) -> int:
        return 2 * self.n_harmonics


def build_basis(n_channels: int, n_harmonics: int) -> FourierBasis:
    """Construct the truncated unitary DFT basis with sqrt(2) harmonic weights."""
    if not 1 <= n_harmonics <= max_harmonics(n_channels):
        raise ValueError(
            f"n_harmonics must be in [1, {max_harmonics(n_channels)}] for "
            f"L={n_channels}, got {n_harmonics}"
        )
    k = np.arange(n_harmonics)[:, None]
    n = np.arange(n_channels)[None, :]
    angles = 2.0 * np.pi * k * n / n_channels
    root = np.sqrt(float(n_channels))
    real_rows = np.cos(angles) / root
    imag_rows = -np.sin(angles) / root
    imag_rows[0, :] = 0.0  # exact zero rather than -sin(0) signed zeros

    scale = np.full(n_harmonics, np.sqrt(2.0))
    scale[0] = 1.0
    if n_channels % 2 == 0 and n_harmonics - 1 == n_channels // 2:
        scale[-1] = 1.0  # Nyquist row is self-conjugate
    return FourierBasis(n_channels, n_harmonics, real_rows, imag_rows, scale)


@dataclass(frozen=True)
class ReducedMatrix:
    """Column-wise reduced representation, shape (2M, n_columns)."""

    values: FloatArray
    n_harmonics: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != 2 * self.n_harmonics:
            raise ValueError(
                f"reduced matrix must have 2M={2 * self.n_harmonics} rows, "
                f"got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("reduced matrix contains non-finite entries")
        object.__setattr__(self, "values", arr)


def reduce_spectrum(y: FloatArray, basis: FourierBasis) -> FloatArray:
    """Map one spectrum (length L) to its 2M-dimensional representation."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (basis.n_channels,):
        raise ValueError(f"expected spectrum of length {basis.n_channels}, got {y.shape}")
    return basis.operator @ y


def reduce_columns(columns: FloatArray, basis: FourierBasis) -> ReducedMatrix:
    """Reduce each column of an (L, Q) matrix, giving a (2M, Q) matrix."""
    columns = np.asarray(columns, dtype=np.float64)
    if columns.ndim != 2 or columns.shape[0] != basis.n_channels:
        raise ValueError(
            f"expected (L, Q) columns with L={basis.n_channels}, got {columns.shape}"
        )
    return ReducedMatrix(basis.operator @ columns, basis.n_harmonics)


def select_num_harmonics(spectra: SpectraMatrix | FloatArray, eta: float) -> int:
    """Smallest M whose retained energy reaches eta percent of the total.

    The retained energy of a spectrum at truncation M is the squared norm of
    its reduced representation; totals are summed over all given spectra.
    eta = 100 always selects M = floor(L/2) + 1 when every harmonic carries
    energy, since full retention is reached only there.
    """
    if not 0.0 < eta <= 100.0:
        raise ValueError(f"eta must be in (0, 100], got {eta}")
    rows = spectra.values if isinstance(spectra, SpectraMatrix) else np.asarray(spectra)
    if rows.ndim != 2:
        raise ValueError("spectra must be a 2-D array of row spectra")
    n_channels = rows.shape[1]
    m_full = max_harmonics(n_channels)

    coeff = np.fft.rfft(rows, axis=1) / np.sqrt(n_channels)
    weights = np.full(coeff.shape[1], 2.0)
    weights[0] = 1.0
    if n_channels % 2 == 0:
        weights[-1] = 1.0
    energy_per_harmonic = weights * np.sum(np.abs(coeff) ** 2, axis=0)
    retained = np.cumsum(energy_per_harmonic)

    total = float(np.sum(rows**2))
    threshold = (eta / 100.0) * total
    met = np.nonzero(retained >= threshold)[0]
    if met.size == 0:
        # Parseval guarantees full retention at m_full up to rounding.
        return m_full
    return int(met[0]) + 1
