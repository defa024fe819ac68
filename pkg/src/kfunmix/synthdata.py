"""Synthetic mixture generation and noise-floor estimation.

Pure spectra are sums of Gaussian peaks normalized to unit maximum, kept
mutually distinct by rejection on their pairwise spectral angle.
Mixtures follow the linear model Y = C S^T with Dirichlet-distributed
abundance rows and white Gaussian noise calibrated to a target SNR
defined as 10 log10(||C S^T||_F^2 / (N L sigma_e^2)).

The observation noise variance is estimated from smoothing residuals: a
Savitzky-Golay filter removes the low-curvature signal, the residual is
chopped into short segments, and the statistic is the mean over spectra
of the median per-segment variance.  On smooth data this lands between
roughly half the true variance and the true variance, since smoothing
absorbs part of the noise itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import savgol_filter

from .datamodel import (
    ConcentrationMatrix,
    DatasetBundle,
    EndmemberMatrix,
    FloatArray,
    SpectraMatrix,
)
from .metrics import sad

MIN_PAIRWISE_SAD_DEG = 10.0
MAX_ENDMEMBER_ATTEMPTS = 100
MAX_CONCENTRATION_DRAWS = 10**6


@dataclass(frozen=True)
class PeakSpec:
    """Per-endmember Gaussian peak counts and widths (in channels)."""

    n_peaks_min: int = 8
    n_peaks_max: int = 16
    width_min: float = 2.0
    width_max: float = 5.0

    def __post_init__(self) -> None:
        if self.n_peaks_min < 1 or self.n_peaks_max < self.n_peaks_min:
            raise ValueError("peak counts must satisfy 1 <= min <= max")
        if self.width_min <= 0.0 or self.width_max < self.width_min:
            raise ValueError("widths must satisfy 0 < min <= max")


@dataclass(frozen=True)
class SynthConfig:
    n_spectra: int
    n_channels: int
    n_endmembers: int
    snr_db: float = 20.0
    alpha: float | tuple[float, ...] = 1.0
    purity_cap: float | None = None
    seed: int = 0
    peaks: PeakSpec = PeakSpec()

    def __post_init__(self) -> None:
        if self.n_spectra < 1:
            raise ValueError("n_spectra must be >= 1")
        if self.n_channels < 2:
            raise ValueError("n_channels must be >= 2")
        if self.n_endmembers < 1:
            raise ValueError("n_endmembers must be >= 1")
        alphas = self.alpha if isinstance(self.alpha, tuple) else (self.alpha,)
        if any(a <= 0.0 for a in alphas):
            raise ValueError("Dirichlet alpha must be positive")
        if isinstance(self.alpha, tuple) and len(self.alpha) != self.n_endmembers:
            raise ValueError("alpha tuple length must equal n_endmembers")
        if self.purity_cap is not None:
            if not 1.0 / self.n_endmembers < self.purity_cap <= 1.0:
                raise ValueError(
                    f"purity_cap must be in (1/K, 1], got {self.purity_cap}"
                )


def _draw_peak_spectrum(
    n_channels: int, peaks: PeakSpec, rng: np.random.Generator
) -> FloatArray:
    n_peaks = int(rng.integers(peaks.n_peaks_min, peaks.n_peaks_max + 1))
    centers = rng.uniform(0.05 * n_channels, 0.95 * n_channels, size=n_peaks)
    widths = rng.uniform(peaks.width_min, peaks.width_max, size=n_peaks)
    amplitudes = rng.uniform(0.2, 1.0, size=n_peaks)
    grid = np.arange(n_channels)[None, :]
    shapes = amplitudes[:, None] * np.exp(
        -0.5 * ((grid - centers[:, None]) / widths[:, None]) ** 2
    )
    spectrum = shapes.sum(axis=0)
    return spectrum / np.max(spectrum)


def generate_pure_spectra(
    n_channels: int, n_endmembers: int, peaks: PeakSpec, seed: int
) -> EndmemberMatrix:
    """Draw K unit-maximum peak spectra with pairwise angles >= 10 degrees."""
    rng = np.random.default_rng(seed)
    accepted: list[FloatArray] = []
    for _ in range(n_endmembers):
        for _attempt in range(MAX_ENDMEMBER_ATTEMPTS):
            candidate = _draw_peak_spectrum(n_channels, peaks, rng)
            if all(sad(candidate, prev) >= MIN_PAIRWISE_SAD_DEG for prev in accepted):
                accepted.append(candidate)
                break
        else:
            raise RuntimeError(
                f"could not draw {n_endmembers} spectra with pairwise angle "
                f">= {MIN_PAIRWISE_SAD_DEG} degrees in {MAX_ENDMEMBER_ATTEMPTS} attempts"
            )
    return EndmemberMatrix(np.column_stack(accepted))


def _draw_concentrations(
    config: SynthConfig, rng: np.random.Generator
) -> ConcentrationMatrix:
    k = config.n_endmembers
    alpha = (
        np.asarray(config.alpha, dtype=np.float64)
        if isinstance(config.alpha, tuple)
        else np.full(k, float(config.alpha))
    )
    if config.purity_cap is None:
        return ConcentrationMatrix(rng.dirichlet(alpha, size=config.n_spectra))

    rows = np.empty((config.n_spectra, k))
    filled = 0
    draws = 0
    while filled < config.n_spectra:
        batch = min(config.n_spectra - filled, MAX_CONCENTRATION_DRAWS - draws)
        if batch <= 0:
            raise RuntimeError(
                f"purity cap {config.purity_cap} rejected too many draws "
                f"(limit {MAX_CONCENTRATION_DRAWS})"
            )
        candidates = rng.dirichlet(alpha, size=batch)
        draws += batch
        keep = candidates[np.max(candidates, axis=1) <= config.purity_cap]
        take = min(keep.shape[0], config.n_spectra - filled)
        rows[filled : filled + take] = keep[:take]
        filled += take
    return ConcentrationMatrix(rows)


def generate_dataset(config: SynthConfig) -> DatasetBundle:
    """Generate a full synthetic bundle: spectra, ground truth, noise level."""
    endmembers = generate_pure_spectra(
        config.n_channels, config.n_endmembers, config.peaks, config.seed
    )
    rng = np.random.default_rng(config.seed + 1)
    concentrations = _draw_concentrations(config, rng)
    clean = concentrations.values @ endmembers.values.T

    if np.isinf(config.snr_db):
        sigma_e2 = 0.0
        noisy = clean
    else:
        signal_power = float(np.sum(clean**2))
        sigma_e2 = signal_power / (clean.size * 10.0 ** (config.snr_db / 10.0))
        noisy = clean + rng.normal(scale=np.sqrt(sigma_e2), size=clean.shape)

    return DatasetBundle(
        spectra=SpectraMatrix(noisy),
        concentrations=concentrations,
        endmembers=endmembers,
        noise_variance_true=sigma_e2,
        seed=config.seed,
    )


def savitzky_golay(y: FloatArray, order: int = 3, window: int = 5) -> FloatArray:
    """Least-squares polynomial smoother; edges are fit on the end windows."""
    y = np.asarray(y, dtype=np.float64)
    if window % 2 != 1:
        raise ValueError("window must be odd")
    if order >= window:
        raise ValueError("order must be smaller than window")
    if y.ndim != 1 or y.size < window:
        raise ValueError(f"need a vector of at least {window} samples")
    return savgol_filter(y, window_length=window, polyorder=order, mode="interp")


def estimate_noise_variance(
    spectra: SpectraMatrix | FloatArray, segment_len: int = 10
) -> float:
    """Noise variance from smoothing residuals, robust to sparse peaks.

    Each spectrum's residual against its Savitzky-Golay smooth (order 3,
    window 5) is split into floor(L / segment_len) segments; the statistic
    is the mean over spectra of the median per-segment sample variance,
    which suppresses segments sitting on sharp signal features.
    """
    rows = spectra.values if isinstance(spectra, SpectraMatrix) else np.asarray(spectra)
    rows = np.atleast_2d(rows)
    n_channels = rows.shape[1]
    n_segments = n_channels // segment_len
    if n_segments < 1:
        raise ValueError(
            f"need at least {segment_len} channels for one segment, got {n_channels}"
        )
    smooth = savgol_filter(rows, window_length=5, polyorder=3, mode="interp", axis=1)
    residual = rows - smooth
    segments = residual[:, : n_segments * segment_len].reshape(
        rows.shape[0], n_segments, segment_len
    )
    seg_var = np.var(segments, axis=2, ddof=1)
    return float(np.mean(np.median(seg_var, axis=1)))
