"""Fisher information, quantum Fisher information, Cramer-Rao bounds and
resource accounting.

Classical Fisher information per detection is F = sum_k p_k'^2 / p_k.
Outcomes with p_k < 1e-12 and |p_k'| < 1e-9 are removable singularities
and contribute zero; p_k < 1e-12 with a non-vanishing derivative signals
a genuinely divergent term and the function returns ``inf`` so that
phase sweeps can record singular points without raising.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad

from .errors import DomainError
from .numerics import default_step

__all__ = [
    "ResourceLedger",
    "BoundReport",
    "HeisenbergCheck",
    "classical_fisher",
    "qfi_noon",
    "qfi_hb",
    "qfi_squeezed_vacuum",
    "qfi_pure",
    "cr_bound",
    "cr_bound_hb",
    "heisenberg_condition",
    "effective_rate",
    "scaling_exponent",
    "make_bound_report",
]

_PROB_FLOOR = 1e-12
_DERIV_FLOOR = 1e-9

SCALING_HEISENBERG = "heisenberg-like"
SCALING_SHOT_NOISE = "shot-noise-like"
SCALING_INTERMEDIATE = "intermediate"


@dataclass(frozen=True)
class ResourceLedger:
    """Resource bookkeeping for n repetitions at r mean photons each.

    The signal yield multiplies generation probability, coupling
    efficiency and detection efficiency.
    """

    repetitions: int
    cost_per_shot: float
    p_gen: float = 1.0
    eta_coup: float = 1.0
    eta_det: float = 1.0

    def __post_init__(self):
        if self.repetitions < 1:
            raise DomainError("repetitions must be >= 1")
        if not (self.cost_per_shot > 0.0):
            raise DomainError("cost_per_shot must be > 0")
        for name in ("p_gen", "eta_coup", "eta_det"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise DomainError(f"{name} must lie in [0, 1]")

    @property
    def total_resources(self) -> float:
        return self.repetitions * self.cost_per_shot

    @property
    def signal_yield(self) -> float:
        return self.p_gen * self.eta_coup * self.eta_det


class HeisenbergCheck(NamedTuple):
    residual: float
    classification: str


@dataclass(frozen=True)
class BoundReport:
    fisher_per_detection: float
    qfi_per_detection: float
    cr_variance_bound: float
    heisenberg_residual: float
    scaling_class: str


def _finite_outcome_fisher(model, phi: float, step: float) -> float:
    pmf = model.pmf
    coarse = (pmf(phi + step) - pmf(phi - step)) / (2.0 * step)
    fine = (pmf(phi + 0.5 * step) - pmf(phi - 0.5 * step)) / step
    dp = (4.0 * fine - coarse) / 3.0
    p = model.pmf(phi)
    total = 0.0
    for pk, dk in zip(p, dp):
        if pk < _PROB_FLOOR:
            if abs(dk) < _DERIV_FLOOR:
                continue
            return math.inf
        total += dk * dk / pk
    return total


def _continuous_fisher(model, phi: float, step: float) -> float:
    def score_sq_density(y):
        coarse = (model.log_density(y, phi + step) - model.log_density(y, phi - step)) / (
            2.0 * step
        )
        fine = (model.log_density(y, phi + 0.5 * step) - model.log_density(y, phi - 0.5 * step)) / step
        score = (4.0 * fine - coarse) / 3.0
        return math.exp(model.log_density(y, phi)) * score * score

    scale = model.variance_at(phi) * model.params.n_pool
    body, _ = quad(score_sq_density, 0.0, 30.0 * scale, points=[scale], limit=400)
    tail, _ = quad(score_sq_density, 30.0 * scale, np.inf, limit=200)
    return body + tail


def _hb_zero_phase_limit(model, step: float) -> float:
    # F(theta) is even and smooth in theta, so Richardson on the h^2 series
    # over theta in {1e-2, 5e-3, 2.5e-3} recovers the theta -> 0 limit.
    h = 1e-2
    f1 = _finite_outcome_fisher(model, h, step)
    f2 = _finite_outcome_fisher(model, 0.5 * h, step)
    f3 = _finite_outcome_fisher(model, 0.25 * h, step)
    r1 = (4.0 * f2 - f1) / 3.0
    r2 = (4.0 * f3 - f2) / 3.0
    return (16.0 * r2 - r1) / 15.0


def classical_fisher(model, phi: float, method: str = "auto", step: float | None = None) -> float:
    """Classical Fisher information per detection for ``model`` at ``phi``.

    ``method='auto'`` uses a registered closed form when the model has
    one, otherwise differentiates the outcome distribution numerically;
    ``'analytic'`` and ``'numeric'`` force the respective path.
    """
    if not math.isfinite(phi):
        raise DomainError("phi must be finite")
    if method not in ("auto", "analytic", "numeric"):
        raise DomainError(f"unknown method {method!r}")
    analytic = getattr(model, "analytic_fisher", None)
    if method != "numeric" and analytic is not None:
        return float(analytic(phi))
    if method == "analytic":
        raise DomainError(f"no analytic Fisher registered for {model!r}")
    if step is None:
        step = default_step(phi)
    if hasattr(model, "log_density"):
        return _continuous_fisher(model, phi, step)
    if getattr(model, "protocol", "") == "hb" and abs(phi) < 1e-3:
        return _hb_zero_phase_limit(model, step)
    return _finite_outcome_fisher(model, phi, step)


def qfi_noon(n_photons: int) -> float:
    """Quantum Fisher information of an N-photon NOON probe: N^2."""
    if n_photons < 1:
        raise DomainError("n_photons must be >= 1")
    return float(n_photons) ** 2


def qfi_hb(j: int) -> float:
    """Quantum Fisher information of twin-Fock |j,j> probes: 2j(j+1)."""
    if j < 1:
        raise DomainError("j must be >= 1")
    return 2.0 * j * (j + 1.0)


def qfi_squeezed_vacuum(s: float) -> float:
    """Quantum Fisher information for the squeezing phase: 2 sinh^2(2s)."""
    if s < 0.0:
        raise DomainError("s must be >= 0")
    return 2.0 * math.sinh(2.0 * s) ** 2


def qfi_pure(generator_variance: float) -> float:
    """Pure-state QFI under unitary encoding: 4 (Delta G)^2."""
    if generator_variance < 0.0:
        raise DomainError("generator variance must be >= 0")
    return 4.0 * generator_variance


def cr_bound(n: int, fisher: float) -> float:
    """Cramer-Rao variance lower bound 1/(n F) for n detections."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if not (fisher > 0.0):
        raise DomainError("Fisher information must be > 0")
    return 1.0 / (n * fisher)


def cr_bound_hb(total_photons: float, j: int) -> float:
    """Twin-Fock bound 1/(N (j+1)) at total photon number N = 2nj."""
    if total_photons <= 0.0 or j < 1:
        raise DomainError("need total_photons > 0 and j >= 1")
    return 1.0 / (total_photons * (j + 1.0))


def heisenberg_condition(n: int, r: float, qfi: float) -> HeisenbergCheck:
    """Residual of n r^2 = F_Q and a coarse scaling classification.

    Classified Heisenberg-like when the residual is within 5% of F_Q and
    the total resources n r reach at least 10; classified shot-noise-like
    when n r^2 exceeds F_Q by at least F_Q itself (the classical regime);
    intermediate otherwise.  The 5% / N >= 10 thresholds are reporting
    conventions.
    """
    if n < 1 or not (r > 0.0):
        raise DomainError("need n >= 1 and r > 0")
    residual = n * r * r - qfi
    if qfi > 0.0 and abs(residual) / qfi < 0.05 and n * r >= 10.0:
        label = SCALING_HEISENBERG
    elif residual >= qfi:
        label = SCALING_SHOT_NOISE
    else:
        label = SCALING_INTERMEDIATE
    return HeisenbergCheck(residual, label)


def effective_rate(n: int, ledger: ResourceLedger, fisher: float) -> float:
    """Yield-weighted information rate n * Y * F."""
    if fisher < 0.0:
        raise DomainError("Fisher information must be >= 0")
    return n * ledger.signal_yield * fisher


def scaling_exponent(points) -> float:
    """Least-squares slope of log(variance) against log(total resources).

    Slope -1 indicates shot-noise scaling, -2 Heisenberg scaling.
    """
    pts = [(float(n), float(v)) for n, v in points]
    if len(pts) < 3:
        raise DomainError("need at least 3 points to fit a scaling exponent")
    if any(n <= 0.0 or v <= 0.0 for n, v in pts):
        raise DomainError("resources and variances must be positive")
    log_n = np.log([n for n, _ in pts])
    log_v = np.log([v for _, v in pts])
    return float(np.polyfit(log_n, log_v, 1)[0])


def make_bound_report(fisher: float, qfi: float, ledger: ResourceLedger) -> BoundReport:
    check = heisenberg_condition(ledger.repetitions, ledger.cost_per_shot, qfi)
    return BoundReport(
        fisher_per_detection=fisher,
        qfi_per_detection=qfi,
        cr_variance_bound=cr_bound(ledger.repetitions, fisher),
        heisenberg_residual=check.residual,
        scaling_class=check.classification,
    )
