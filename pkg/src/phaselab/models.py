"""Measurement probability models for the interferometric protocols.

Every finite-outcome model exposes the same small surface:

* ``outcomes``        -- integer outcome labels, aligned with pmf rows
* ``pmf(phi)``        -- outcome probabilities at one phase
* ``log_pmf_grid(nodes)`` -- (n_outcomes, n_nodes) log-likelihood table
* ``sample(stream, phi, size)`` -- outcome labels drawn by inverse CDF
* ``resource_cost``   -- mean photons consumed per detection event

Outcome label conventions (fixed so serialized records are unambiguous):
photon-pair counting uses ``k`` in 0..N for the count in port one; parity
reduction uses 0 = even, 1 = odd, where "even" is the class whose weight
carries ``1 + cos(N phi)`` (even photon-number deficit ``N - k``);
twin-Fock interferometry uses the half photon-number difference ``q``
in -j..j.  The homodyne quadrature convention fixes the vacuum variance
to 1/2, so the squeezed/anti-squeezed variances are ``exp(-2s)/2`` and
``exp(2s)/2`` and the mean photon number of a bright squeezed state is
``alpha^2 + sinh^2 s``.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConsistencyError, DomainError
from .numerics import bessel_j, bessel_j_orders, log_binomial, log_gamma
from .streams import RandomStream

__all__ = [
    "noon_full_pmf",
    "noon_parity_pmf",
    "mz_pmf",
    "hb_bessel_pmf",
    "hb_exact_pmf",
    "quadrature_variance",
    "squeezed_variances",
    "chi2_loglik",
    "chi2_sample",
    "sqrt_transform_loglik",
    "xi_estimator",
    "bright_homodyne_sample",
    "NoonParityModel",
    "NoonFullModel",
    "MachZehnderModel",
    "HollandBurnettModel",
    "SqueezedVacuumParams",
    "SqueezedVacuumChi2Model",
    "BrightSqueezedParams",
    "build_model",
    "OUTCOME_EVEN",
    "OUTCOME_ODD",
]

OUTCOME_EVEN = 0
OUTCOME_ODD = 1

_NEGATIVE_TOLERANCE = -1e-15


def _clamp_probabilities(p):
    """Zero out tiny negative rounding; anything below -1e-15 is a bug."""
    arr = np.asarray(p, dtype=np.float64)
    low = arr.min() if arr.size else 0.0
    if low < _NEGATIVE_TOLERANCE:
        raise ConsistencyError(f"probability {low} below rounding tolerance")
    return np.maximum(arr, 0.0)


def _check_phase(phi):
    if not np.all(np.isfinite(phi)):
        raise DomainError("phase must be finite")


# ----------------------------------------------------------------------
# NOON and Mach-Zehnder statistics
# ----------------------------------------------------------------------

def noon_full_pmf(n_photons: int, phi: float, k: int) -> float:
    """P(k) = 2^-N C(N,k) [1 + (-1)^(N-k) cos(N phi)] for an N-photon
    NOON state read out by photon counting in port one."""
    if n_photons < 1:
        raise DomainError("n_photons must be >= 1")
    if k < 0 or k > n_photons:
        raise DomainError(f"k must lie in 0..{n_photons}, got {k}")
    _check_phase(phi)
    weight = math.exp(log_binomial(n_photons, k) - n_photons * math.log(2.0))
    sign = -1.0 if (n_photons - k) % 2 else 1.0
    value = weight * (1.0 + sign * math.cos(n_photons * phi))
    return float(_clamp_probabilities(value))


def noon_parity_pmf(n_photons: int, phi: float):
    """Parity-reduced NOON statistics (p_even, p_odd) =
    (cos^2(N phi / 2), sin^2(N phi / 2))."""
    if n_photons < 1:
        raise DomainError("n_photons must be >= 1")
    _check_phase(phi)
    half = 0.5 * n_photons * phi
    return math.cos(half) ** 2, math.sin(half) ** 2


def mz_pmf(phi: float):
    """Single-photon Mach-Zehnder statistics (cos^2(phi/2), sin^2(phi/2))."""
    return noon_parity_pmf(1, phi)


# ----------------------------------------------------------------------
# Twin-Fock (Holland-Burnett) statistics
# ----------------------------------------------------------------------

def hb_bessel_pmf(j: int, theta: float, q: int) -> float:
    """Large-j approximation p(q|theta) ~ J_q(j theta)^2, valid for q << j.

    Over the truncated range q in -j..j this table is slightly
    sub-normalised; it sums to one only over all integer q.
    """
    if j < 1:
        raise DomainError("j must be >= 1")
    if abs(q) > j:
        raise DomainError(f"|q| must be <= j={j}, got q={q}")
    _check_phase(theta)
    return float(bessel_j(q, j * theta) ** 2)


@lru_cache(maxsize=64)
def _twin_fock_sector(j: int):
    """50:50 splitter unitary restricted to the 2j-photon sector.

    Basis |m, 2j - m> for m = 0..2j; the splitter generator
    a^dag b + a b^dag is tridiagonal there, so the unitary
    exp(i pi/4 (a^dag b + a b^dag)) comes from one symmetric
    tridiagonal eigendecomposition.  Returns (B, B @ e_j).
    """
    dim = 2 * j + 1
    m = np.arange(dim - 1, dtype=np.float64)
    off_diag = np.sqrt((m + 1.0) * (2.0 * j - m))
    evals, evecs = eigh_tridiagonal(np.zeros(dim), off_diag)
    splitter = (evecs * np.exp(1j * (np.pi / 4.0) * evals)) @ evecs.T
    return splitter, splitter[:, j].copy()


def _check_hb_j(j):
    if not isinstance(j, (int, np.integer)) or j < 1 or j > 40:
        raise DomainError(f"exact twin-Fock statistics need integer 1 <= j <= 40, got {j}")


def hb_exact_pmf(j: int, theta: float) -> np.ndarray:
    """Exact twin-Fock |j,j> interferometer statistics over q = -j..j.

    The state is propagated through splitter -> exp(i theta a^dag a) on
    one arm -> splitter in the (2j+1)-dimensional fixed-photon-number
    sector; entry q+j of the result is p(q|theta).
    """
    _check_hb_j(j)
    _check_phase(theta)
    splitter, v0 = _twin_fock_sector(int(j))
    m = np.arange(2 * j + 1)
    amplitude = splitter @ (np.exp(1j * theta * m) * v0)
    return _clamp_probabilities(np.abs(amplitude) ** 2)


def _hb_exact_grid(j: int, nodes: np.ndarray) -> np.ndarray:
    """p(q|theta) table, shape (2j+1, len(nodes))."""
    splitter, v0 = _twin_fock_sector(int(j))
    m = np.arange(2 * j + 1)
    phases = np.exp(1j * np.outer(nodes, m))
    amplitudes = (phases * v0) @ splitter.T
    return _clamp_probabilities(np.abs(amplitudes) ** 2).T


# ----------------------------------------------------------------------
# Gaussian quadrature statistics (squeezed light)
# ----------------------------------------------------------------------

def squeezed_variances(s: float):
    """(V_plus, V_minus) = (e^{2s}/2, e^{-2s}/2) under vacuum variance 1/2."""
    if s < 0.0 or not math.isfinite(s):
        raise DomainError("squeezing parameter must be finite and >= 0")
    return 0.5 * math.exp(2.0 * s), 0.5 * math.exp(-2.0 * s)


def quadrature_variance(v_plus: float, v_minus: float, theta):
    """V(theta) = V_+ cos^2 theta + V_- sin^2 theta (pi-periodic)."""
    if not (v_plus >= v_minus > 0.0):
        raise DomainError("need V_plus >= V_minus > 0")
    theta = np.asarray(theta, dtype=np.float64)
    _check_phase(theta)
    out = v_plus * np.cos(theta) ** 2 + v_minus * np.sin(theta) ** 2
    return float(out) if out.ndim == 0 else out


def chi2_loglik(y, n: int, theta, params: "SqueezedVacuumParams"):
    """Log density of y = sum of n squared quadrature samples.

    y/V(theta) is chi-squared with n degrees of freedom, so
    p(y|theta) = y^{n/2-1} exp(-y/(2V)) / (2^{n/2} Gamma(n/2) V^{n/2}).
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    y = np.asarray(y, dtype=np.float64)
    if np.any(y <= 0.0) or not np.all(np.isfinite(y)):
        raise DomainError("y must be positive and finite")
    variance = quadrature_variance(params.v_plus, params.v_minus, theta)
    half_n = 0.5 * n
    out = (
        (half_n - 1.0) * np.log(y)
        - y / (2.0 * variance)
        - half_n * math.log(2.0)
        - log_gamma(half_n)
        - half_n * np.log(variance)
    )
    return float(out) if np.ndim(out) == 0 else out


def chi2_sample(stream: RandomStream, n: int, variance: float, size=None):
    """Draw y = sum of n independent squared normals with the given variance."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if not (variance >= 0.0):
        raise DomainError("variance must be >= 0")
    shape = (n,) if size is None else (size, n)
    draws = stream.normal(shape)
    total = variance * np.sum(draws * draws, axis=-1)
    return float(total) if size is None else total


def sqrt_transform_loglik(y, n: int, theta, params: "SqueezedVacuumParams"):
    """Gaussianised (square-root transformed) log density, unnormalised.

    log p ~ -log(V)/2 - (sqrt(2y) - sqrt((2n-1) V))^2 / (2V); useful for
    likelihood ratios and posterior work when n >= 2.
    """
    if n < 2:
        raise DomainError("square-root transformation needs n >= 2")
    y = np.asarray(y, dtype=np.float64)
    if np.any(y <= 0.0):
        raise DomainError("y must be positive")
    variance = quadrature_variance(params.v_plus, params.v_minus, theta)
    shift = np.sqrt(2.0 * y) - np.sqrt((2.0 * n - 1.0) * variance)
    out = -0.5 * np.log(variance) - shift * shift / (2.0 * variance)
    return float(out) if np.ndim(out) == 0 else out


def xi_estimator(y, n: int):
    """Point estimate of xi = sqrt(V) from pooled quadratures: sqrt(2y/(2n-1))."""
    if n < 1:
        raise DomainError("n must be >= 1")
    y = np.asarray(y, dtype=np.float64)
    if np.any(y < 0.0):
        raise DomainError("y must be >= 0")
    out = np.sqrt(2.0 * y / (2.0 * n - 1.0))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class BrightSqueezedParams:
    """Bright squeezed probe: coherent amplitude alpha, squeezing s."""

    alpha: float
    s: float

    def __post_init__(self):
        if self.alpha < 0.0 or self.s < 0.0:
            raise DomainError("alpha and s must be >= 0")

    @property
    def mean_photons(self) -> float:
        return self.alpha**2 + math.sinh(self.s) ** 2


def bright_homodyne_sample(
    stream: RandomStream,
    params: BrightSqueezedParams,
    phi_true: float,
    lo_angle: float,
    size=None,
):
    """Homodyne quadrature draws from a bright squeezed state.

    The anti-squeezed axis is aligned with the mean amplitude (direction
    phi_true in phase space), so a local oscillator at ``lo_angle`` sees
    mean sqrt(2) alpha cos(phi_true - lo_angle) and variance
    V(lo_angle - phi_true) measured from the anti-squeezed axis.  At the
    phase-sensitive angle lo_angle = phi_true + pi/2 the noise is the
    squeezed variance exp(-2s)/2.
    """
    _check_phase(phi_true)
    _check_phase(lo_angle)
    v_plus, v_minus = squeezed_variances(params.s)
    mean = math.sqrt(2.0) * params.alpha * math.cos(phi_true - lo_angle)
    sigma = math.sqrt(quadrature_variance(v_plus, v_minus, lo_angle - phi_true))
    return mean + sigma * stream.normal(size)


# ----------------------------------------------------------------------
# Model objects
# ----------------------------------------------------------------------

def _sample_labels(pmf: np.ndarray, labels: np.ndarray, stream: RandomStream, size):
    cdf = np.cumsum(pmf / pmf.sum())
    cdf[-1] = max(cdf[-1], 1.0)
    draws = np.atleast_1d(stream.uniform(size))
    idx = np.searchsorted(cdf, draws, side="right")
    return labels[idx]


# Finite stand-in for log(0) in likelihood tables.  Keeping tables finite
# makes count-weighted accumulation NaN-free (0 * LOG_ZERO == 0 encodes
# "outcome not observed"), while any node that did receive a LOG_ZERO
# contribution stays below DEAD_NODE_THRESHOLD and is treated as zero
# posterior weight downstream.
LOG_ZERO = -1e250
DEAD_NODE_THRESHOLD = -1e200


def _log_table(prob_table: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        table = np.log(prob_table)
    return np.where(np.isneginf(table), LOG_ZERO, table)


@dataclass(frozen=True)
class NoonParityModel:
    """N-photon NOON interferometry reduced to even/odd detection parity."""

    n_photons: int
    protocol = "noon"

    def __post_init__(self):
        if self.n_photons < 1:
            raise DomainError("n_photons must be >= 1")

    @property
    def resource_cost(self) -> float:
        return float(self.n_photons)

    @property
    def outcomes(self) -> np.ndarray:
        return np.array([OUTCOME_EVEN, OUTCOME_ODD])

    def pmf(self, phi: float) -> np.ndarray:
        return np.array(noon_parity_pmf(self.n_photons, phi))

    def log_pmf_grid(self, nodes: np.ndarray) -> np.ndarray:
        _check_phase(nodes)
        half = 0.5 * self.n_photons * np.asarray(nodes, dtype=np.float64)
        return _log_table(np.vstack([np.cos(half) ** 2, np.sin(half) ** 2]))

    def outcome_index(self, outcomes) -> np.ndarray:
        idx = np.asarray(outcomes, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() > 1):
            raise DomainError("parity outcomes are 0 (even) or 1 (odd)")
        return idx

    def sample(self, stream: RandomStream, phi: float, size=None) -> np.ndarray:
        return _sample_labels(self.pmf(phi), self.outcomes, stream, size)

    def analytic_fisher(self, phi: float) -> float:
        return float(self.n_photons) ** 2


@dataclass(frozen=True)
class MachZehnderModel:
    """Single-photon Mach-Zehnder interferometer, parity outcome labels."""

    protocol = "mz"

    @property
    def resource_cost(self) -> float:
        return 1.0

    @property
    def outcomes(self) -> np.ndarray:
        return np.array([OUTCOME_EVEN, OUTCOME_ODD])

    def pmf(self, phi: float) -> np.ndarray:
        return np.array(mz_pmf(phi))

    def log_pmf_grid(self, nodes: np.ndarray) -> np.ndarray:
        return NoonParityModel(1).log_pmf_grid(nodes)

    def outcome_index(self, outcomes) -> np.ndarray:
        return NoonParityModel(1).outcome_index(outcomes)

    def sample(self, stream: RandomStream, phi: float, size=None) -> np.ndarray:
        return _sample_labels(self.pmf(phi), self.outcomes, stream, size)

    def analytic_fisher(self, phi: float) -> float:
        return 1.0


@dataclass(frozen=True)
class NoonFullModel:
    """N-photon NOON interferometry with full photon counting (k in 0..N)."""

    n_photons: int
    protocol = "noon-full"

    def __post_init__(self):
        if self.n_photons < 1:
            raise DomainError("n_photons must be >= 1")

    @property
    def resource_cost(self) -> float:
        return float(self.n_photons)

    @property
    def outcomes(self) -> np.ndarray:
        return np.arange(self.n_photons + 1)

    def _weights(self) -> np.ndarray:
        n = self.n_photons
        return np.exp(
            [log_binomial(n, k) - n * math.log(2.0) for k in range(n + 1)]
        )

    def pmf(self, phi: float) -> np.ndarray:
        _check_phase(phi)
        n = self.n_photons
        signs = np.where((n - self.outcomes) % 2 == 0, 1.0, -1.0)
        return _clamp_probabilities(
            self._weights() * (1.0 + signs * math.cos(n * phi))
        )

    def log_pmf_grid(self, nodes: np.ndarray) -> np.ndarray:
        _check_phase(nodes)
        n = self.n_photons
        signs = np.where((n - self.outcomes) % 2 == 0, 1.0, -1.0)
        fringe = _clamp_probabilities(
            1.0 + signs[:, None] * np.cos(n * np.asarray(nodes, dtype=np.float64))
        )
        return _log_table(self._weights()[:, None] * fringe)

    def outcome_index(self, outcomes) -> np.ndarray:
        idx = np.asarray(outcomes, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() > self.n_photons):
            raise DomainError(f"counts must lie in 0..{self.n_photons}")
        return idx

    def sample(self, stream: RandomStream, phi: float, size=None) -> np.ndarray:
        return _sample_labels(self.pmf(phi), self.outcomes, stream, size)

    analytic_fisher = None


@dataclass(frozen=True)
class HollandBurnettModel:
    """Twin-Fock |j,j> interferometry; outcome is the half difference q.

    ``mode='exact'`` propagates the state through the interferometer
    unitaries; ``mode='bessel'`` uses the large-j table J_q(j theta)^2,
    which is reliable only for |q| well below j (the sampler reports the
    fraction of draws beyond ``validity_threshold`` = j/4).
    """

    j: int
    mode: str = "exact"
    protocol = "hb"

    def __post_init__(self):
        _check_hb_j(self.j)
        if self.mode not in ("exact", "bessel"):
            raise DomainError("mode must be 'exact' or 'bessel'")

    @property
    def resource_cost(self) -> float:
        return 2.0 * self.j

    @property
    def outcomes(self) -> np.ndarray:
        return np.arange(-self.j, self.j + 1)

    @property
    def validity_threshold(self) -> float:
        return self.j / 4.0

    def pmf(self, theta: float) -> np.ndarray:
        if self.mode == "exact":
            return hb_exact_pmf(self.j, theta)
        _check_phase(theta)
        orders = bessel_j_orders(self.j, np.array([abs(self.j * theta)]))[:, 0]
        return np.concatenate([orders[:0:-1], orders]) ** 2

    def log_pmf_grid(self, nodes: np.ndarray) -> np.ndarray:
        _check_phase(nodes)
        nodes = np.asarray(nodes, dtype=np.float64)
        if self.mode == "exact":
            return _log_table(_hb_exact_grid(self.j, nodes))
        orders = bessel_j_orders(self.j, np.abs(self.j * nodes))
        table = np.vstack([orders[:0:-1], orders]) ** 2
        return _log_table(table)

    def outcome_index(self, outcomes) -> np.ndarray:
        q = np.asarray(outcomes, dtype=np.int64)
        if q.size and np.max(np.abs(q)) > self.j:
            raise DomainError(f"|q| must be <= j={self.j}")
        return q + self.j

    def sample(self, stream: RandomStream, theta: float, size=None) -> np.ndarray:
        return _sample_labels(self.pmf(theta), self.outcomes, stream, size)

    def fraction_beyond_validity(self, outcomes) -> float:
        q = np.asarray(outcomes)
        if q.size == 0:
            return 0.0
        return float(np.mean(np.abs(q) > self.validity_threshold))

    analytic_fisher = None


@dataclass(frozen=True)
class SqueezedVacuumParams:
    """Squeezed-vacuum homodyne pooling: squeezing s, pool size n_pool."""

    s: float
    n_pool: int = 1

    def __post_init__(self):
        if self.s < 0.0:
            raise DomainError("s must be >= 0")
        if self.n_pool < 1:
            raise DomainError("n_pool must be >= 1")

    @property
    def v_plus(self) -> float:
        return squeezed_variances(self.s)[0]

    @property
    def v_minus(self) -> float:
        return squeezed_variances(self.s)[1]


@dataclass(frozen=True)
class SqueezedVacuumChi2Model:
    """Squeezing-phase inference from pooled squared quadratures.

    A detection event is y = sum of n_pool squared homodyne samples of a
    squeezed vacuum whose quadrature variance is V(theta); y/V(theta) is
    chi-squared with n_pool degrees of freedom.
    """

    params: SqueezedVacuumParams
    protocol = "squeezed-vacuum"

    @property
    def resource_cost(self) -> float:
        # n_pool squeezed-vacuum states at sinh^2 s mean photons each
        return self.params.n_pool * math.sinh(self.params.s) ** 2

    def variance_at(self, theta):
        return quadrature_variance(self.params.v_plus, self.params.v_minus, theta)

    def log_density(self, y, theta):
        return chi2_loglik(y, self.params.n_pool, theta, self.params)

    def log_density_grid(self, y_values: np.ndarray, nodes: np.ndarray) -> np.ndarray:
        y = np.asarray(y_values, dtype=np.float64)[:, None]
        return chi2_loglik(y, self.params.n_pool, np.asarray(nodes)[None, :], self.params)

    def sample(self, stream: RandomStream, theta: float, size=None):
        return chi2_sample(stream, self.params.n_pool, self.variance_at(theta), size)

    def analytic_fisher(self, theta: float) -> float:
        # F = n V'(theta)^2 / (2 V(theta)^2) for the scaled chi-squared family
        v = self.variance_at(theta)
        dv = (self.params.v_minus - self.params.v_plus) * math.sin(2.0 * theta)
        return self.params.n_pool * dv * dv / (2.0 * v * v)


_FINITE_PROTOCOLS = {
    "noon": lambda p: NoonParityModel(int(p["n_photons"])),
    "noon-full": lambda p: NoonFullModel(int(p["n_photons"])),
    "mz": lambda p: MachZehnderModel(),
    "hb": lambda p: HollandBurnettModel(int(p["j"]), str(p.get("mode", "exact"))),
}


def build_model(protocol: str, params: dict | None = None):
    """Instantiate a model from its protocol tag and parameter block."""
    params = dict(params or {})
    if protocol in _FINITE_PROTOCOLS:
        try:
            return _FINITE_PROTOCOLS[protocol](params)
        except KeyError as missing:
            raise DomainError(f"protocol {protocol!r} needs parameter {missing}") from None
    if protocol == "squeezed-vacuum":
        try:
            sv = SqueezedVacuumParams(float(params["s"]), int(params.get("n_pool", 1)))
        except KeyError as missing:
            raise DomainError(f"protocol {protocol!r} needs parameter {missing}") from None
        return SqueezedVacuumChi2Model(sv)
    raise DomainError(f"unknown protocol {protocol!r}")
