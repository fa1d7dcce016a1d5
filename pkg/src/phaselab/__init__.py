"""phaselab: resource-accounted interferometric phase estimation.

Measurement models for NOON, single-photon Mach-Zehnder, twin-Fock and
squeezed-light protocols; classical/quantum Fisher information and
Cramer-Rao bounds with explicit resource ledgers; grid-based Bayesian
posteriors; and a deterministic Monte Carlo harness that compares
protocols at equal total photon number.
"""

__version__ = "0.1.0"

from .bayes import (
    DEFAULT_GRID_SIZE,
    GridMoments,
    PosteriorGrid,
    PriorSpec,
    circular_dispersion,
    closed_posterior,
    info_gain,
    make_grid,
    moments,
    update,
)
from .errors import (
    ConfigError,
    ConsistencyError,
    DegeneratePosteriorError,
    DomainError,
    PhaseLabError,
)
from .harness import (
    Chi2DemoReport,
    ComparisonReport,
    EstimationReport,
    MatchedSqueezedReport,
    ScalingStudy,
    ScenarioConfig,
    SweepRow,
    TrialRecord,
    chi2_phase_demo,
    hb_repetition_sweep,
    matched_squeezed_analysis,
    noon_vs_mz_comparison,
    protocol_qfi,
    run_experiment,
    run_trial,
    scaling_study,
)
from .information import (
    BoundReport,
    HeisenbergCheck,
    ResourceLedger,
    classical_fisher,
    cr_bound,
    cr_bound_hb,
    effective_rate,
    heisenberg_condition,
    make_bound_report,
    qfi_hb,
    qfi_noon,
    qfi_pure,
    qfi_squeezed_vacuum,
    scaling_exponent,
)
from .models import (
    BrightSqueezedParams,
    HollandBurnettModel,
    MachZehnderModel,
    NoonFullModel,
    NoonParityModel,
    SqueezedVacuumChi2Model,
    SqueezedVacuumParams,
    bright_homodyne_sample,
    build_model,
    chi2_loglik,
    chi2_sample,
    hb_bessel_pmf,
    hb_exact_pmf,
    mz_pmf,
    noon_full_pmf,
    noon_parity_pmf,
    quadrature_variance,
    sqrt_transform_loglik,
    squeezed_variances,
    xi_estimator,
)
from .numerics import (
    bessel_j,
    bessel_j_orders,
    log_binomial,
    log_gamma,
    numeric_derivative,
    sinc,
)
from .streams import RandomStream, derive_stream
