"""Streaming unmixing pipeline and experiment runner.

Initialization consumes the first P acquired spectra: they fix the
truncation order of the Fourier subspace, the noise-floor estimate, the
starting endmembers (extracted geometrically unless provided), and the
regression system used to restore nonnegativity.  Each later acquisition
runs one cycle of abundance estimation, reduced-domain state update,
constrained regression back to the full space, and state re-anchoring on
the constrained estimate.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, replace

import numpy as np

from .abundance import FclsConfig, estimate_concentration, estimate_concentrations
from .datamodel import ConcentrationMatrix, DatasetBundle, EndmemberMatrix, FloatArray
from .fourier import (
    FourierBasis,
    ReducedMatrix,
    build_basis,
    reduce_columns,
    reduce_spectrum,
    select_num_harmonics,
)
from .kalman import (
    DlState,
    FilterState,
    NoiseConfig,
    NumericalError,
    RlsState,
    dl_update,
    kf_update,
    rls_update,
)
from .mcrals import McrConfig, mcr_als, pca_nonneg_init
from .metrics import (
    MetricRecord,
    align_components,
    asad,
    reconstruction_error,
    rmse_concentrations,
    write_trace_csv,
)
from .protocols import AcquisitionOrder
from .regression import AdmmConfig, RegressorSet, build_regressor_set, solve_regression
from .synthdata import estimate_noise_variance
from .vca import VcaConfig, vca

UPDATERS = ("kalman", "rls", "dl")
BASELINES = ("vca", "mcr-als")


@dataclass(frozen=True)
class PipelineConfig:
    """Settings of one streaming run."""

    n_endmembers: int
    n_init: int = 30
    eta: float = 87.0
    n_harmonics: int | None = None
    sigma_v2: float = 1.0
    rho: float = 1.0
    admm_iters: int = 50
    updater: str = "kalman"
    rls_forgetting: float = 1.0
    init_endmembers: EndmemberMatrix | None = None
    seed: int = 0
    fcls: FclsConfig = FclsConfig()

    def __post_init__(self) -> None:
        if self.n_endmembers < 1:
            raise ValueError("n_endmembers must be >= 1")
        if self.n_init < self.n_endmembers:
            raise ValueError("n_init must be >= n_endmembers")
        if not 0.0 < self.eta <= 100.0:
            raise ValueError("eta must be in (0, 100]")
        if self.n_harmonics is not None and self.n_harmonics < 1:
            raise ValueError("n_harmonics must be >= 1 when given")
        if self.sigma_v2 < 0.0:
            raise ValueError("sigma_v2 must be >= 0")
        if self.rho <= 0.0:
            raise ValueError("rho must be > 0")
        if self.admm_iters < 1:
            raise ValueError("admm_iters must be >= 1")
        if self.updater not in UPDATERS:
            raise ValueError(f"updater must be one of {UPDATERS}, got {self.updater!r}")
        if not 0.0 < self.rls_forgetting <= 1.0:
            raise ValueError("rls_forgetting must be in (0, 1]")


@dataclass(frozen=True)
class EndmemberEstimate:
    """Current endmember estimate in both representations."""

    full: EndmemberMatrix
    reduced: ReducedMatrix


@dataclass(frozen=True)
class PipelineState:
    """Everything the stream carries between acquisitions."""

    config: PipelineConfig
    basis: FourierBasis
    regressors: RegressorSet
    noise: NoiseConfig
    estimator: FilterState | RlsState | DlState
    endmembers: EndmemberEstimate
    t: int


def _vec(reduced: FloatArray) -> FloatArray:
    # Column-stacked state: block k is reduced endmember k.
    return reduced.T.reshape(-1)


def _unvec(mean: FloatArray, dim_obs: int, n_blocks: int) -> FloatArray:
    return mean.reshape(n_blocks, dim_obs).T


def init_pipeline(
    init_spectra: FloatArray, config: PipelineConfig
) -> PipelineState:
    """Initialize a stream from its first P acquisitions.

    The spectra must be exactly the config's n_init rows, in acquisition
    order.  Chooses the subspace order by the eta energy criterion,
    estimates the noise floor from smoothing residuals, extracts starting
    endmembers (unless config.init_endmembers is given), and builds the
    cached regression system.
    """
    rows = np.asarray(
        init_spectra.values if hasattr(init_spectra, "values") else init_spectra,
        dtype=np.float64,
    )
    if rows.ndim != 2:
        raise ValueError("init spectra must be a 2-D array of row spectra")
    if rows.shape[0] != config.n_init:
        raise ValueError(
            f"expected {config.n_init} initialization spectra, got {rows.shape[0]}"
        )

    if config.n_harmonics is not None:
        n_harmonics = config.n_harmonics
    else:
        n_harmonics = select_num_harmonics(rows, config.eta)
    basis = build_basis(rows.shape[1], n_harmonics)
    # Floor keeps the observation variance positive on noiseless input.
    sigma_e2 = max(estimate_noise_variance(rows), 1e-12)
    noise = NoiseConfig(sigma_v2=config.sigma_v2, sigma_e2=sigma_e2)

    if config.init_endmembers is not None:
        start = config.init_endmembers
        if start.n_channels != rows.shape[1]:
            raise ValueError("provided init endmembers do not match the channel count")
        if start.n_endmembers != config.n_endmembers:
            raise ValueError("provided init endmembers do not match n_endmembers")
    else:
        start = vca(rows, VcaConfig(config.n_endmembers, seed=config.seed))

    reduced = reduce_columns(start.values, basis)
    mean = _vec(reduced.values)
    dim_state = mean.size

    estimator: FilterState | RlsState | DlState
    if config.updater == "kalman":
        covariance = config.sigma_v2 * np.eye(dim_state)
        estimator = FilterState(mean, covariance, t=config.n_init)
    elif config.updater == "rls":
        if config.sigma_v2 <= 0.0:
            raise ValueError("the RLS updater needs sigma_v2 > 0 to initialize P")
        estimator = RlsState(mean, config.sigma_v2 * np.eye(dim_state), t=config.n_init)
    else:
        init_conc = estimate_concentrations(rows, start, config.fcls)
        estimator = DlState(mean, init_conc.T @ init_conc, t=config.n_init)

    regressors = build_regressor_set(rows, basis, config.rho)
    return PipelineState(
        config=config,
        basis=basis,
        regressors=regressors,
        noise=noise,
        estimator=estimator,
        endmembers=EndmemberEstimate(start, reduced),
        t=config.n_init,
    )


def pipeline_step(
    state: PipelineState, spectrum: FloatArray
) -> tuple[PipelineState, float]:
    """Process one acquisition; returns the new state and the wall time in ms.

    Cycle: estimate the abundance of the incoming spectrum against the
    current endmembers, reduce it, run the configured state update,
    regress the filtered estimate back onto the acquired-spectra cone,
    and re-anchor the state mean on the constrained estimate (the
    covariance or auxiliary matrices are left untouched).
    """
    config = state.config
    tic = time.perf_counter()

    concentration = estimate_concentration(spectrum, state.endmembers.full, config.fcls)
    observed = reduce_spectrum(np.asarray(spectrum, dtype=np.float64), state.basis)

    if config.updater == "kalman":
        estimator = kf_update(state.estimator, concentration, observed, state.noise)
    elif config.updater == "rls":
        estimator = rls_update(
            state.estimator, concentration, observed, config.rls_forgetting
        )
    else:
        estimator = dl_update(state.estimator, concentration, observed)

    dim_obs = state.basis.dim_reduced
    target = ReducedMatrix(
        _unvec(estimator.mean, dim_obs, config.n_endmembers), state.basis.n_harmonics
    )
    fit = solve_regression(
        state.regressors,
        target,
        AdmmConfig(rho=config.rho, max_iters=config.admm_iters),
    )
    constrained = reduce_columns(fit.endmembers.values, state.basis)
    estimator = replace(estimator, mean=_vec(constrained.values))

    wall_ms = (time.perf_counter() - tic) * 1e3
    new_state = replace(
        state,
        estimator=estimator,
        endmembers=EndmemberEstimate(fit.endmembers, constrained),
        t=state.t + 1,
    )
    return new_state, wall_ms


@dataclass(frozen=True)
class RunTrace:
    """Metric records of one run plus its final estimates."""

    records: tuple[MetricRecord, ...]
    final_endmembers: EndmemberMatrix
    final_concentrations: ConcentrationMatrix
    config_snapshot: dict[str, str]

    def __post_init__(self) -> None:
        ts = [rec.t for rec in self.records]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("record time indices must be strictly increasing")


@dataclass(frozen=True)
class ExperimentResult:
    trace: RunTrace
    baselines: dict[str, RunTrace]


def _snapshot(config: PipelineConfig, state: PipelineState, extra: dict[str, str]) -> dict[str, str]:
    snap = {
        "n_endmembers": str(config.n_endmembers),
        "n_init": str(config.n_init),
        "eta": str(config.eta),
        "sigma_v2": str(config.sigma_v2),
        "rho": str(config.rho),
        "admm_iters": str(config.admm_iters),
        "updater": config.updater,
        "rls_forgetting": str(config.rls_forgetting),
        "seed": str(config.seed),
        "n_harmonics": str(state.basis.n_harmonics),
        "sigma_e2_hat": str(state.noise.sigma_e2),
    }
    snap.update(extra)
    return snap


def _evaluate(
    acquired: FloatArray,
    endmembers: EndmemberMatrix,
    truth_endmembers: EndmemberMatrix | None,
    truth_concentrations: FloatArray | None,
    fcls: FclsConfig,
    with_abundances: bool,
) -> tuple[float | None, float | None, float | None]:
    asad_val = None
    if truth_endmembers is not None:
        asad_val = asad(endmembers, truth_endmembers)
    rmse_val = None
    re_val = None
    if with_abundances:
        conc = estimate_concentrations(acquired, endmembers, fcls)
        re_val = reconstruction_error(acquired, conc, endmembers)
        if truth_endmembers is not None and truth_concentrations is not None:
            perm = align_components(endmembers, truth_endmembers)
            rmse_val = rmse_concentrations(conc, truth_concentrations, perm)
    return asad_val, rmse_val, re_val


def _baseline_endmembers(
    name: str, acquired: FloatArray, config: PipelineConfig
) -> EndmemberMatrix:
    if name == "vca":
        return vca(acquired, VcaConfig(config.n_endmembers, seed=config.seed))
    init = pca_nonneg_init(acquired, config.n_endmembers, seed=config.seed)
    return mcr_als(acquired, McrConfig(init=init, fcls=config.fcls)).endmembers


def run_experiment(
    dataset: DatasetBundle,
    order: AcquisitionOrder,
    config: PipelineConfig,
    *,
    eval_stride: int = 1,
    abundance_stride: int = 1,
    baselines: tuple[str, ...] = (),
    baseline_stride: int = 20,
    flush_path: str | os.PathLike[str] | None = None,
) -> ExperimentResult:
    """Run the full streaming experiment over an ordered dataset.

    Parameters
    ----------
    dataset : DatasetBundle
        Spectra plus whatever ground truth is known; metrics needing truth
        are skipped when it is absent.
    order : AcquisitionOrder
        Acquisition order; the stream is exactly its index sequence.
    config : PipelineConfig
        Pipeline settings (the first n_init indices initialize).
    eval_stride : int
        Indices between metric records; the first streamed index and the
        final index are always evaluated.
    abundance_stride : int
        Cadence of the abundance re-estimation that feeds rmse and re
        (an O(t) batch solve); 0 disables those two metrics entirely.
    baselines : tuple of {"vca", "mcr-als"}
        Reference methods re-run from scratch on all acquired spectra at
        their own cadence, logged as parallel traces.
    baseline_stride : int
        Indices between baseline re-runs (final index always included).
    flush_path : optional path
        Where to write the partial main trace if the stream aborts on a
        numerical failure; the exception is re-raised after flushing.

    Returns
    -------
    ExperimentResult
        Main trace plus one trace per requested baseline.
    """
    if eval_stride < 1:
        raise ValueError("eval_stride must be >= 1")
    if abundance_stride < 0:
        raise ValueError("abundance_stride must be >= 0")
    if baseline_stride < 1:
        raise ValueError("baseline_stride must be >= 1")
    for name in baselines:
        if name not in BASELINES:
            raise ValueError(f"unknown baseline {name!r}; expected one of {BASELINES}")

    rows_all = dataset.spectra.values
    if max(order.indices) >= rows_all.shape[0]:
        raise ValueError("order refers to indices beyond the dataset")
    stream = rows_all[list(order.indices)]
    n_stream = stream.shape[0]
    n_init = config.n_init
    if n_stream <= n_init:
        raise ValueError(
            f"stream has {n_stream} spectra, need more than n_init={n_init}"
        )

    truth_s = dataset.endmembers
    truth_c = (
        dataset.concentrations.values[list(order.indices)]
        if dataset.concentrations is not None
        else None
    )

    state = init_pipeline(stream[:n_init], config)
    extra = {
        "eval_stride": str(eval_stride),
        "abundance_stride": str(abundance_stride),
        "n_stream": str(n_stream),
    }
    snapshot = _snapshot(config, state, extra)

    records: list[MetricRecord] = []
    baseline_records: dict[str, list[MetricRecord]] = {name: [] for name in baselines}
    baseline_final: dict[str, EndmemberMatrix] = {}
    try:
        for t in range(n_init + 1, n_stream + 1):
            state, wall_ms = pipeline_step(state, stream[t - 1])
            is_final = t == n_stream
            offset = t - n_init - 1

            if offset % eval_stride == 0 or is_final:
                with_ab = abundance_stride > 0 and (
                    offset % abundance_stride == 0 or is_final
                )
                asad_val, rmse_val, re_val = _evaluate(
                    stream[:t],
                    state.endmembers.full,
                    truth_s,
                    truth_c[:t] if truth_c is not None else None,
                    config.fcls,
                    with_ab,
                )
                records.append(MetricRecord(t, asad_val, rmse_val, re_val, wall_ms))

            for name in baselines:
                if offset % baseline_stride == 0 or is_final:
                    tic = time.perf_counter()
                    ref = _baseline_endmembers(name, stream[:t], config)
                    ref_ms = (time.perf_counter() - tic) * 1e3
                    asad_val, rmse_val, re_val = _evaluate(
                        stream[:t],
                        ref,
                        truth_s,
                        truth_c[:t] if truth_c is not None else None,
                        config.fcls,
                        with_abundances=True,
                    )
                    baseline_records[name].append(
                        MetricRecord(t, asad_val, rmse_val, re_val, ref_ms)
                    )
                    baseline_final[name] = ref
    except NumericalError:
        if flush_path is not None:
            write_trace_csv(records, flush_path, comments=snapshot)
        raise

    final_conc = ConcentrationMatrix(
        estimate_concentrations(stream, state.endmembers.full, config.fcls)
    )
    trace = RunTrace(tuple(records), state.endmembers.full, final_conc, snapshot)

    baseline_traces: dict[str, RunTrace] = {}
    for name in baselines:
        ref = baseline_final[name]
        ref_conc = ConcentrationMatrix(estimate_concentrations(stream, ref, config.fcls))
        ref_snap = dict(snapshot)
        ref_snap["baseline"] = name
        ref_snap["baseline_stride"] = str(baseline_stride)
        baseline_traces[name] = RunTrace(
            tuple(baseline_records[name]), ref, ref_conc, ref_snap
        )
    return ExperimentResult(trace, baseline_traces)
