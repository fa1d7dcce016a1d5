"""Monte Carlo experiment runner and protocol comparisons.

The estimation unit here is a whole data set: each trial draws
``repetitions`` outcomes at the (fixed or prior-sampled) true phase,
accumulates the posterior on a grid, and extracts one estimate plus
posterior summaries.  Trials use independent counter-based streams
derived from the master seed, so parallel and serial execution produce
bit-identical reports and re-runs replay exactly.

``true_phase=None`` in a scenario draws a fresh true phase uniformly
from the prior in every trial ("random sampling of the phase"); the
per-trial stream supplies that draw before any outcome draws.
"""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from . import bayes, kernels
from .bayes import DEFAULT_GRID_SIZE, PriorSpec, make_grid
from .errors import DegeneratePosteriorError, DomainError
from .information import (
    ResourceLedger,
    classical_fisher,
    cr_bound,
    cr_bound_hb,
    qfi_hb,
    qfi_noon,
    qfi_squeezed_vacuum,
    scaling_exponent,
)
from .models import (
    BrightSqueezedParams,
    bright_homodyne_sample,
    build_model,
    chi2_sample,
    quadrature_variance,
    squeezed_variances,
    xi_estimator,
)
from .streams import RandomStream, derive_stream

__all__ = [
    "ScenarioConfig",
    "TrialRecord",
    "EstimationReport",
    "SweepRow",
    "ComparisonReport",
    "MatchedSqueezedReport",
    "Chi2DemoReport",
    "ScalingStudy",
    "protocol_qfi",
    "run_trial",
    "run_experiment",
    "hb_repetition_sweep",
    "noon_vs_mz_comparison",
    "matched_squeezed_analysis",
    "chi2_phase_demo",
    "scaling_study",
    "DEFAULT_HB_PRIOR",
]

ESTIMATORS = ("posterior_mean", "circular_mean", "map")

# Prior used by the twin-Fock repetition sweep unless the caller supplies
# one.  A quarter-circle halfwidth keeps the single-detection posterior
# tails inside the window while the optimal-repetition variance stays
# within a factor two of 1/(N (j+1)).
DEFAULT_HB_PRIOR = PriorSpec(-math.pi / 4.0, math.pi / 4.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """Declarative description of one estimation experiment."""

    protocol: str
    params: dict
    prior: PriorSpec
    repetitions: int
    trials: int
    master_seed: int
    true_phase: float | None = None
    grid_size: int = DEFAULT_GRID_SIZE
    estimator: str = "posterior_mean"

    def __post_init__(self):
        if self.repetitions < 1:
            raise DomainError("repetitions must be >= 1")
        if self.trials < 1:
            raise DomainError("trials must be >= 1")
        if self.estimator not in ESTIMATORS:
            raise DomainError(f"estimator must be one of {ESTIMATORS}")
        if self.true_phase is not None and not math.isfinite(self.true_phase):
            raise DomainError("true_phase must be finite or None")
        if self.master_seed < 0:
            raise DomainError("master_seed must be >= 0")


@dataclass(frozen=True)
class TrialRecord:
    estimate: float
    true_phase: float
    posterior_variance: float
    dispersion: float
    info_gain: float
    map_estimate: float
    failed: bool


@dataclass(frozen=True)
class EstimationReport:
    """Aggregate of T independent trials plus reference bounds."""

    config: ScenarioConfig
    empirical_mse: float
    empirical_bias: float
    mean_posterior_variance: float
    mean_dispersion: float
    mean_info_gain: float
    cr_reference: float
    qfi_reference: float
    ledger: ResourceLedger
    n_failed: int
    beyond_validity_fraction: float
    estimates: np.ndarray = field(repr=False)
    true_phases: np.ndarray = field(repr=False)
    posterior_variances: np.ndarray = field(repr=False)
    dispersions: np.ndarray = field(repr=False)
    info_gains: np.ndarray = field(repr=False)
    map_estimates: np.ndarray = field(repr=False)
    failed: np.ndarray = field(repr=False)


def _wrap_difference(a, b):
    """Difference a - b wrapped onto (-pi, pi]."""
    return np.mod(np.asarray(a) - np.asarray(b) + np.pi, 2.0 * np.pi) - np.pi


def protocol_qfi(protocol: str, params: dict) -> float:
    """Quantum Fisher information per detection event for a protocol tag."""
    if protocol in ("noon", "noon-full"):
        return qfi_noon(int(params["n_photons"]))
    if protocol == "mz":
        return 1.0
    if protocol == "hb":
        return qfi_hb(int(params["j"]))
    if protocol == "squeezed-vacuum":
        pool = int(params.get("n_pool", 1))
        return pool * qfi_squeezed_vacuum(float(params["s"]))
    raise DomainError(f"unknown protocol {protocol!r}")


def _draw_phase(config: ScenarioConfig, stream: RandomStream) -> float:
    if config.true_phase is not None:
        return float(config.true_phase)
    return config.prior.lo + config.prior.width * float(stream.uniform())


class _Batch:
    """Shared precomputation for a scenario plus per-trial simulation."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.model = build_model(config.protocol, config.params)
        self.grid = make_grid(config.prior, config.grid_size)
        self.continuous = hasattr(self.model, "log_density")
        if not self.continuous:
            self.log_table = self.model.log_pmf_grid(self.grid.nodes)
        self.centered = self.grid.nodes - config.prior.midpoint
        self.cos_nodes = np.cos(self.grid.nodes)
        self.sin_nodes = np.sin(self.grid.nodes)

    def simulate(self, trial_indices: Sequence[int], counts, log_rows, phases, validity):
        cfg = self.config
        for t in trial_indices:
            stream = derive_stream(cfg.master_seed, t)
            phi = _draw_phase(cfg, stream)
            phases[t] = phi
            draws = self.model.sample(stream, phi, cfg.repetitions)
            if self.continuous:
                row = np.zeros(self.grid.size)
                for y in np.atleast_1d(draws):
                    row += self.model.log_density(float(y), self.grid.nodes)
                log_rows[t] = row
            else:
                idx = self.model.outcome_index(draws)
                counts[t] = np.bincount(idx, minlength=self.model.outcomes.size)
            if hasattr(self.model, "fraction_beyond_validity"):
                validity[t] = self.model.fraction_beyond_validity(draws)

    def log_weights(self, counts, log_rows):
        if self.continuous:
            delta = log_rows
        else:
            from .models import DEAD_NODE_THRESHOLD

            delta = counts @ self.log_table
            delta[delta < DEAD_NODE_THRESHOLD] = -np.inf
        return delta + self.config.prior.log_density


def _estimates_from_stats(config, grid, mean_offset, circ_mean, map_idx):
    if config.estimator == "posterior_mean":
        return config.prior.midpoint + mean_offset
    if config.estimator == "circular_mean":
        return circ_mean
    return grid.nodes[map_idx]


def run_experiment(config: ScenarioConfig, threads: int = 1) -> EstimationReport:
    """Run ``config.trials`` independent trials and aggregate.

    Aggregation is performed in trial-index order from preallocated
    arrays, so thread count cannot affect the result.  Degenerate
    posteriors are counted as failed trials and excluded from moments.
    """
    if threads < 1:
        raise DomainError("threads must be >= 1")
    batch = _Batch(config)
    n_trials = config.trials
    counts = None
    log_rows = None
    if batch.continuous:
        log_rows = np.zeros((n_trials, batch.grid.size))
    else:
        counts = np.zeros((n_trials, batch.model.outcomes.size))
    phases = np.zeros(n_trials)
    validity = np.zeros(n_trials)
    indices = np.arange(n_trials)
    if threads == 1:
        batch.simulate(indices, counts, log_rows, phases, validity)
    else:
        chunks = np.array_split(indices, threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(batch.simulate, chunk, counts, log_rows, phases, validity)
                for chunk in chunks
                if chunk.size
            ]
            for future in futures:
                future.result()
    logw = batch.log_weights(counts, log_rows)
    mean_offset, variance, dispersion, circ_mean, gains, map_idx, ok = kernels.posterior_stats(
        np.ascontiguousarray(logw),
        batch.centered,
        batch.cos_nodes,
        batch.sin_nodes,
        batch.grid.trap_weights,
        config.prior.log_density,
    )
    estimates = _estimates_from_stats(config, batch.grid, mean_offset, circ_mean, map_idx)
    estimates = np.where(ok, estimates, np.nan)
    circular = config.prior.topology == "circular"
    errors = _wrap_difference(estimates, phases) if circular else estimates - phases
    good = ok
    n_failed = int(np.count_nonzero(~ok))

    def _mean(values):
        return float(np.mean(values[good])) if good.any() else math.nan

    phi_ref = config.true_phase if config.true_phase is not None else config.prior.midpoint
    fisher_ref = classical_fisher(batch.model, phi_ref)
    ledger = ResourceLedger(config.repetitions, batch.model.resource_cost)
    return EstimationReport(
        config=config,
        empirical_mse=_mean(errors**2),
        empirical_bias=_mean(errors),
        mean_posterior_variance=_mean(variance),
        mean_dispersion=_mean(dispersion),
        mean_info_gain=_mean(gains),
        cr_reference=cr_bound(config.repetitions, fisher_ref)
        if fisher_ref > 0.0 and math.isfinite(fisher_ref)
        else math.inf,
        qfi_reference=protocol_qfi(config.protocol, config.params),
        ledger=ledger,
        n_failed=n_failed,
        beyond_validity_fraction=float(np.mean(validity)),
        estimates=estimates,
        true_phases=phases,
        posterior_variances=np.where(ok, variance, np.nan),
        dispersions=np.where(ok, dispersion, np.nan),
        info_gains=np.where(ok, gains, np.nan),
        map_estimates=batch.grid.nodes[map_idx],
        failed=~ok,
    )


def run_trial(config: ScenarioConfig, stream: RandomStream) -> TrialRecord:
    """Simulate one data set with the given stream and summarise it."""
    model = build_model(config.protocol, config.params)
    grid = make_grid(config.prior, config.grid_size)
    phi = _draw_phase(config, stream)
    draws = model.sample(stream, phi, config.repetitions)
    try:
        posterior = bayes.update(grid, model, draws)
    except DegeneratePosteriorError:
        return TrialRecord(math.nan, phi, math.nan, math.nan, math.nan, math.nan, True)
    stats = bayes.moments(posterior)
    if config.estimator == "posterior_mean":
        estimate = stats.mean
    elif config.estimator == "circular_mean":
        estimate = stats.circular_mean
    else:
        estimate = stats.map_estimate
    return TrialRecord(
        estimate=estimate,
        true_phase=phi,
        posterior_variance=stats.variance,
        dispersion=bayes.circular_dispersion(posterior),
        info_gain=bayes.info_gain(grid, posterior),
        map_estimate=stats.map_estimate,
        failed=False,
    )


# ----------------------------------------------------------------------
# Protocol comparisons
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    repetitions: int
    j: int
    mean_posterior_variance: float
    cr_reference: float
    qfi_reference: float
    classical_reference: float
    n_failed: int


def hb_repetition_sweep(
    n_total: int,
    n_values: Sequence[int],
    prior: PriorSpec | None = None,
    grid_size: int = DEFAULT_GRID_SIZE,
    trials: int = 2000,
    master_seed: int = 0,
    mode: str = "exact",
    threads: int = 1,
) -> list[SweepRow]:
    """Posterior variance against repetition count at fixed total photons.

    Each row runs the twin-Fock scenario with j = n_total / (2n) at true
    phase zero; entries whose n does not divide n_total / 2 are skipped
    with a warning.  Emits the bound 1/(N (j+1)), the per-data-set QFI
    variance 1/(n F_Q) and the classical reference 1/N alongside.
    """
    if n_total < 2:
        raise DomainError("n_total must be >= 2")
    prior = prior if prior is not None else DEFAULT_HB_PRIOR
    rows = []
    for offset, n in enumerate(n_values):
        j, remainder = divmod(n_total, 2 * n)
        if remainder or j < 1:
            warnings.warn(
                f"skipping n={n}: does not divide total photon number {n_total} into"
                " integer twin-Fock occupation",
                stacklevel=2,
            )
            continue
        config = ScenarioConfig(
            protocol="hb",
            params={"j": j, "mode": mode},
            prior=prior,
            repetitions=n,
            trials=trials,
            master_seed=master_seed + offset,
            true_phase=0.0,
            grid_size=grid_size,
        )
        report = run_experiment(config, threads=threads)
        rows.append(
            SweepRow(
                repetitions=n,
                j=j,
                mean_posterior_variance=report.mean_posterior_variance,
                cr_reference=cr_bound_hb(float(n_total), j),
                qfi_reference=cr_bound(n, qfi_hb(j)),
                classical_reference=1.0 / n_total,
                n_failed=report.n_failed,
            )
        )
    return rows


@dataclass(frozen=True)
class ComparisonReport:
    """Equal-photon comparison of one NOON shot against N repeated
    single-photon interferometer shots."""

    n_photons: int
    noon_info_gain: float
    noon_dispersion: float
    noon_posterior_variance: float
    noon_sampled_mean_variance: float
    mz_info_gain: float
    mz_dispersion: float
    uniform_baseline_variance: float


def noon_vs_mz_comparison(
    n_photons: int,
    grid_size: int = DEFAULT_GRID_SIZE,
    trials: int = 2000,
    master_seed: int = 0,
) -> ComparisonReport:
    """Information gain and spread under equal total photons N.

    The NOON arm is a single N-photon shot on the aliasing-limited prior
    (-pi/N, pi/N); at phase zero its (deterministic) posterior follows
    cos^2(N phi / 2).  The repeated single-photon arm spends the same N
    photons on the full-circle prior and its zero-phase posterior is
    cos^{2N}(phi / 2).  The uniform baseline pi^2 / (3 N^2) is the
    variance of blind sampling on the NOON prior, and the sampled-phase
    NOON variance is reported for comparison against it.
    """
    if n_photons < 2:
        raise DomainError("n_photons must be >= 2")
    model_noon = build_model("noon", {"n_photons": n_photons})
    noon_prior = PriorSpec(-math.pi / n_photons, math.pi / n_photons)
    noon_grid = make_grid(noon_prior, grid_size)
    noon_posterior = bayes.update(noon_grid, model_noon, [0])
    mz_prior = PriorSpec(-math.pi, math.pi, topology="circular")
    mz_grid = make_grid(mz_prior, grid_size)
    mz_posterior = bayes.update(mz_grid, build_model("mz", {}), [0] * n_photons)
    sampled = run_experiment(
        ScenarioConfig(
            protocol="noon",
            params={"n_photons": n_photons},
            prior=noon_prior,
            repetitions=1,
            trials=trials,
            master_seed=master_seed,
            true_phase=None,
            grid_size=grid_size,
        )
    )
    return ComparisonReport(
        n_photons=n_photons,
        noon_info_gain=bayes.info_gain(noon_grid, noon_posterior),
        noon_dispersion=bayes.circular_dispersion(noon_posterior),
        noon_posterior_variance=bayes.moments(noon_posterior).variance,
        noon_sampled_mean_variance=sampled.mean_posterior_variance,
        mz_info_gain=bayes.info_gain(mz_grid, mz_posterior),
        mz_dispersion=bayes.circular_dispersion(mz_posterior),
        uniform_baseline_variance=math.pi**2 / (3.0 * n_photons**2),
    )


@dataclass(frozen=True)
class MatchedSqueezedReport:
    s: float
    alpha_sq: float
    mean_photons: float
    predicted_variance: float
    heisenberg_reference: float
    mc_samples: int
    mc_variance: float
    mc_variance_se: float


def matched_squeezed_analysis(
    s: float | None = None,
    n_total: float | None = None,
    samples: int = 100_000,
    master_seed: int = 0,
) -> MatchedSqueezedReport:
    """Bright squeezed homodyne phase estimation at the matched split.

    The matching condition fixes alpha^2 = e^{2s}/4; given a photon
    budget N instead, the squeezing solving alpha^2 + sinh^2 s = N is
    found by bisection on s in (0, 20].  The per-shot prediction
    e^{-2s}/(4 alpha^2) is checked against the variance of the
    linearised estimator phi_hat = x / (sqrt(2) alpha) built from
    homodyne samples at the phase-sensitive local-oscillator angle.
    """
    if (s is None) == (n_total is None):
        raise DomainError("provide exactly one of s or n_total")
    if s is None:
        if n_total <= 0.25:
            raise DomainError("no matched squeezing exists for n_total <= 0.25")

        def gap(value):
            return 0.25 * math.exp(2.0 * value) + math.sinh(value) ** 2 - n_total

        if gap(20.0) < 0.0:
            raise DomainError("no matched squeezing in s <= 20 for this n_total")
        s = float(brentq(gap, 0.0, 20.0, xtol=1e-15, rtol=1e-15))
    if s < 0.0:
        raise DomainError("s must be >= 0")
    alpha_sq = 0.25 * math.exp(2.0 * s)
    params = BrightSqueezedParams(alpha=math.sqrt(alpha_sq), s=s)
    predicted = math.exp(-2.0 * s) / (4.0 * alpha_sq)
    stream = derive_stream(master_seed, 0)
    draws = bright_homodyne_sample(stream, params, 0.0, math.pi / 2.0, samples)
    slope = math.sqrt(2.0) * params.alpha
    estimates = draws / slope
    mc_variance = float(np.var(estimates, ddof=1))
    return MatchedSqueezedReport(
        s=s,
        alpha_sq=alpha_sq,
        mean_photons=params.mean_photons,
        predicted_variance=predicted,
        heisenberg_reference=1.0 / (4.0 * params.mean_photons**2),
        mc_samples=samples,
        mc_variance=mc_variance,
        mc_variance_se=mc_variance * math.sqrt(2.0 / (samples - 1)),
    )


@dataclass(frozen=True)
class Chi2DemoReport:
    s: float
    n: int
    theta_true: float
    trials: int
    variance_at_theta: float
    xi_mean: float
    relative_variance: float
    relative_variance_se: float
    classical_reference: float
    naive_qfi_variance: float
    variance_estimate_mean: float


def chi2_phase_demo(
    s: float,
    n: int,
    theta_true: float = 0.0,
    trials: int = 100_000,
    master_seed: int = 0,
) -> Chi2DemoReport:
    """Relative spread of the xi = sqrt(V) estimator from pooled quadratures.

    Draws T data sets of n squared quadrature samples at the true
    squeezing phase, forms xi_hat = sqrt(2y/(2n-1)) for each, and reports
    the empirical relative variance next to the classical sampling
    reference 1/(2n-1) and the variance 1/(n F_Q) a QFI-only reading
    would promise.
    """
    if n < 2:
        raise DomainError("n must be >= 2")
    if trials < 2:
        raise DomainError("trials must be >= 2")
    if not (s > 0.0):
        raise DomainError("s must be > 0")
    v_plus, v_minus = squeezed_variances(s)
    variance = quadrature_variance(v_plus, v_minus, theta_true)
    stream = derive_stream(master_seed, 0)
    y = chi2_sample(stream, n, variance, trials)
    xi = xi_estimator(y, n)
    xi_mean = float(np.mean(xi))
    rel = float(np.var(xi, ddof=1)) / xi_mean**2
    return Chi2DemoReport(
        s=s,
        n=n,
        theta_true=theta_true,
        trials=trials,
        variance_at_theta=variance,
        xi_mean=xi_mean,
        relative_variance=rel,
        relative_variance_se=rel * math.sqrt(2.0 / (trials - 1)),
        classical_reference=1.0 / (2.0 * n - 1.0),
        naive_qfi_variance=1.0 / (n * qfi_squeezed_vacuum(s)),
        variance_estimate_mean=float(np.mean(y)) / n,
    )


@dataclass(frozen=True)
class ScalingStudy:
    protocol: str
    resources: list
    mse_values: list
    cr_references: list
    exponent: float


def scaling_study(
    protocol: str,
    resource_levels: Sequence[int],
    trials: int = 2000,
    grid_size: int = DEFAULT_GRID_SIZE,
    master_seed: int = 0,
    estimator: str = "posterior_mean",
    threads: int = 1,
) -> ScalingStudy:
    """Empirical MSE against total photon number, with a log-log fit.

    The repeated single-photon protocol spends N shots at a generic
    operating point on a half-circle prior; the NOON protocol spends one
    N-photon shot on its aliasing-limited prior with the true phase
    sampled from it.
    """
    if len(resource_levels) < 3:
        raise DomainError("need at least 3 resource levels")
    resources, mses, crs = [], [], []
    for idx, level in enumerate(resource_levels):
        level = int(level)
        if protocol == "mz":
            config = ScenarioConfig(
                protocol="mz",
                params={},
                prior=PriorSpec(0.0, math.pi),
                repetitions=level,
                trials=trials,
                master_seed=master_seed + idx,
                true_phase=math.pi / 2.0,
                grid_size=grid_size,
                estimator=estimator,
            )
        elif protocol == "noon":
            config = ScenarioConfig(
                protocol="noon",
                params={"n_photons": level},
                prior=PriorSpec(-math.pi / level, math.pi / level),
                repetitions=1,
                trials=trials,
                master_seed=master_seed + idx,
                true_phase=None,
                grid_size=grid_size,
                estimator=estimator,
            )
        else:
            raise DomainError(f"scaling study supports 'mz' or 'noon', got {protocol!r}")
        report = run_experiment(config, threads=threads)
        resources.append(report.ledger.total_resources)
        mses.append(report.empirical_mse)
        crs.append(report.cr_reference)
    return ScalingStudy(
        protocol=protocol,
        resources=resources,
        mse_values=mses,
        cr_references=crs,
        exponent=scaling_exponent(zip(resources, mses)),
    )
