"""Measurement model statistics, their samplers, and the cross-model
consistency the protocols rely on."""

import math

import mpmath as mp
import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from phaselab import (
    BrightSqueezedParams,
    DomainError,
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
    derive_stream,
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
from phaselab.errors import ConsistencyError
from phaselab.models import _clamp_probabilities

mp.mp.dps = 40


class TestNoonFullPmf:
    def test_two_photons_at_zero(self):
        values = [noon_full_pmf(2, 0.0, k) for k in (0, 1, 2)]
        assert values == pytest.approx([0.5, 0.0, 0.5], abs=1e-15)
        assert sum(values) == pytest.approx(1.0, abs=1e-15)

    def test_single_photon_at_pi(self):
        assert noon_full_pmf(1, math.pi, 0) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("n", range(1, 21))
    def test_normalization_over_phase_grid(self, n):
        model = NoonFullModel(n)
        for phi in np.linspace(-math.pi, math.pi, 100):
            assert abs(model.pmf(float(phi)).sum() - 1.0) < 1e-12

    def test_out_of_range_count(self):
        with pytest.raises(DomainError):
            noon_full_pmf(4, 0.1, 5)
        with pytest.raises(DomainError):
            noon_full_pmf(4, 0.1, -1)

    def test_tiny_negative_rounding_clamped(self):
        # at N phi = pi the odd-class weight 1 - cos(N phi) can round below 0
        for n in (3, 5, 9):
            phi = math.pi / n
            assert noon_full_pmf(n, phi, n) >= 0.0

    def test_clamp_helper_rejects_genuine_negatives(self):
        assert _clamp_probabilities(np.array([-1e-16, 0.5]))[0] == 0.0
        with pytest.raises(ConsistencyError):
            _clamp_probabilities(np.array([-1e-10]))


class TestParityReduction:
    def test_at_zero(self):
        assert noon_parity_pmf(6, 0.0) == (1.0, 0.0)

    def test_quarter_period(self):
        even, odd = noon_parity_pmf(2, math.pi / 2)
        assert even == pytest.approx(0.0, abs=1e-30)
        assert odd == pytest.approx(1.0, abs=1e-15)

    def test_balanced_point(self):
        even, odd = noon_parity_pmf(4, math.pi / 8)
        assert even == pytest.approx(0.5, abs=1e-15)
        assert odd == pytest.approx(0.5, abs=1e-15)

    def test_pair_sums_to_one(self):
        for n in (1, 3, 8, 17):
            for phi in np.linspace(-3.0, 3.0, 50):
                even, odd = noon_parity_pmf(n, float(phi))
                assert abs(even + odd - 1.0) < 1e-15

    @pytest.mark.parametrize("n", range(1, 21))
    def test_parity_classes_match_full_statistics(self, n):
        full = NoonFullModel(n)
        for phi in np.linspace(-math.pi, math.pi, 100):
            pmf = full.pmf(float(phi))
            even_class = sum(pmf[k] for k in range(n + 1) if (n - k) % 2 == 0)
            even, odd = noon_parity_pmf(n, float(phi))
            assert abs(even_class - even) < 1e-12
            assert abs((pmf.sum() - even_class) - odd) < 1e-12

    def test_mz_is_single_photon_noon(self):
        for phi in np.linspace(-math.pi, math.pi, 64):
            assert mz_pmf(float(phi)) == noon_parity_pmf(1, float(phi))

    def test_mz_endpoints(self):
        assert mz_pmf(0.0) == (1.0, 0.0)
        even, odd = mz_pmf(math.pi)
        assert even == pytest.approx(0.0, abs=1e-30)
        assert odd == pytest.approx(1.0, abs=1e-15)
        assert mz_pmf(math.pi / 2) == pytest.approx((0.5, 0.5), abs=1e-15)


class TestTwinFockBessel:
    def test_zero_phase_is_point_mass(self):
        assert hb_bessel_pmf(5, 0.0, 0) == 1.0
        for q in (1, -3, 5):
            assert hb_bessel_pmf(5, 0.0, q) == 0.0

    def test_against_series_oracle(self):
        expected = float(mp.besselj(0, 1.0) ** 2)
        assert hb_bessel_pmf(10, 0.1, 0) == pytest.approx(expected, abs=1e-13)
        assert expected == pytest.approx(0.5855, abs=1e-4)

    def test_sum_identity_over_all_integers(self):
        j, theta = 12, 0.25
        orders = np.arange(-(j + 60), j + 61)
        from phaselab import bessel_j

        total = np.sum(bessel_j(orders, j * theta) ** 2)
        assert abs(total - 1.0) < 1e-12

    def test_symmetry(self):
        for q in (1, 2, 7):
            assert hb_bessel_pmf(9, 0.37, q) == hb_bessel_pmf(9, 0.37, -q)

    def test_order_beyond_j_rejected(self):
        with pytest.raises(DomainError):
            hb_bessel_pmf(4, 0.1, 5)


class TestTwinFockExact:
    def test_zero_phase_is_point_mass(self):
        pmf = hb_exact_pmf(7, 0.0)
        assert pmf[7] == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.delete(pmf, 7) < 1e-24)

    @pytest.mark.parametrize("j", [1, 2, 5, 10, 20, 40])
    def test_normalization(self, j):
        for theta in (0.0, 0.05, 0.4, 1.2):
            assert abs(hb_exact_pmf(j, theta).sum() - 1.0) < 1e-10

    @pytest.mark.parametrize("j", [2, 5, 13, 31])
    def test_symmetry_in_q(self, j):
        for theta in (0.03, 0.7, 2.0):
            pmf = hb_exact_pmf(j, theta)
            np.testing.assert_allclose(pmf, pmf[::-1], atol=1e-12)

    def test_even_in_theta(self):
        np.testing.assert_allclose(
            hb_exact_pmf(6, 0.31), hb_exact_pmf(6, -0.31), atol=1e-14
        )

    def test_agreement_with_bessel_in_validity_regime(self):
        # central outcomes at j=5, theta=0.05: the finite-j offset caps the
        # agreement near 6e-3 here; see the convergence test below
        pmf = hb_exact_pmf(5, 0.05)
        for q in (-1, 0, 1):
            assert abs(pmf[5 + q] - hb_bessel_pmf(5, 0.05, q)) < 1e-2

    def test_bessel_converges_to_exact_as_j_grows(self):
        # deviation at fixed j*theta and |q| <= 2 shrinks like 1/j
        deviations = []
        for j in (5, 10, 20, 40):
            worst = 0.0
            for x in np.linspace(0.05, 2.0, 20):
                pmf = hb_exact_pmf(j, x / j)
                for q in (-2, -1, 0, 1, 2):
                    worst = max(worst, abs(pmf[j + q] - hb_bessel_pmf(j, x / j, q)))
            deviations.append(worst)
        for coarse, fine in zip(deviations, deviations[1:]):
            assert fine < 0.7 * coarse

    @pytest.mark.parametrize("j", [0, 41, -3])
    def test_j_out_of_range(self, j):
        with pytest.raises(DomainError):
            hb_exact_pmf(j, 0.1)

    def test_noninteger_j_rejected(self):
        with pytest.raises(DomainError):
            hb_exact_pmf(2.5, 0.1)


class TestQuadratureVariance:
    def test_axes(self):
        assert quadrature_variance(2.0, 0.125, 0.0) == 2.0
        assert quadrature_variance(2.0, 0.125, math.pi / 2) == pytest.approx(0.125, abs=1e-16)
        assert quadrature_variance(2.0, 0.125, math.pi / 4) == pytest.approx(1.0625, abs=1e-15)

    def test_pi_periodicity_and_bounds(self):
        v_plus, v_minus = squeezed_variances(0.8)
        for theta in np.linspace(-2.0, 2.0, 41):
            v = quadrature_variance(v_plus, v_minus, float(theta))
            assert v_minus <= v <= v_plus
            assert v == pytest.approx(
                quadrature_variance(v_plus, v_minus, float(theta) + math.pi), rel=1e-12
            )

    def test_variance_product_is_vacuum_squared(self):
        for s in (0.0, 0.5, 1.7):
            v_plus, v_minus = squeezed_variances(s)
            assert v_plus * v_minus == pytest.approx(0.25, rel=1e-15)

    def test_invalid_variances(self):
        with pytest.raises(DomainError):
            quadrature_variance(0.1, 0.2, 0.0)
        with pytest.raises(DomainError):
            quadrature_variance(1.0, 0.0, 0.0)


class TestChi2Statistics:
    def test_density_normalizes(self):
        params = SqueezedVacuumParams(s=0.7, n_pool=3)
        for theta in (0.0, 0.4, 1.1):
            total, _ = quad(
                lambda y: math.exp(chi2_loglik(y, 3, theta, params)), 0.0, 200.0, limit=300
            )
            assert total == pytest.approx(1.0, abs=1e-8)

    def test_density_mean_is_n_times_variance(self):
        params = SqueezedVacuumParams(s=0.5, n_pool=4)
        theta = 0.3
        v = quadrature_variance(params.v_plus, params.v_minus, theta)
        mean, _ = quad(
            lambda y: y * math.exp(chi2_loglik(y, 4, theta, params)), 0.0, 300.0, limit=300
        )
        assert mean == pytest.approx(4 * v, rel=1e-8)

    def test_exponential_special_case(self):
        # n = 2 with V(theta) = 1 collapses to p(y) = exp(-y/2)/2
        s = 0.5 * math.acosh(2.0)
        params = SqueezedVacuumParams(s=s, n_pool=2)
        assert quadrature_variance(params.v_plus, params.v_minus, math.pi / 4) == pytest.approx(
            1.0, rel=1e-15
        )
        assert chi2_loglik(2.0, 2, math.pi / 4, params) == pytest.approx(
            -1.0 - math.log(2.0), abs=1e-12
        )

    def test_rejects_nonpositive_y(self):
        params = SqueezedVacuumParams(s=0.5)
        with pytest.raises(DomainError):
            chi2_loglik(0.0, 2, 0.1, params)
        with pytest.raises(DomainError):
            chi2_loglik(-1.0, 2, 0.1, params)

    def test_sampler_mean(self):
        stream = derive_stream(101, 0)
        draws = chi2_sample(stream, 3, 2.0, size=10**5)
        se = math.sqrt(2 * 3 * 4.0 / 10**5)
        assert abs(draws.mean() - 6.0) < 3 * se

    def test_sampler_variance(self):
        stream = derive_stream(102, 0)
        n, v, size = 3, 2.0, 10**5
        draws = chi2_sample(stream, n, v, size=size)
        expected = 2 * n * v**2
        # chi-square fourth central moment 12 n (n + 4) V^4
        se = math.sqrt((12 * n * (n + 4) - (2 * n) ** 2) / size) * v**2
        assert abs(draws.var(ddof=1) - expected) < 5 * se

    def test_vanishing_variance_limit(self):
        stream = derive_stream(103, 0)
        assert chi2_sample(stream, 1, 1e-300) < 1e-290

    def test_sampler_matches_density(self):
        # goodness of fit against the scaled chi-square CDF oracle
        stream = derive_stream(104, 0)
        n, v = 4, 1.3
        draws = chi2_sample(stream, n, v, size=10**5)
        edges = v * stats.chi2.ppf(np.linspace(0.0, 1.0, 21), df=n)
        counts, _ = np.histogram(draws, bins=edges)
        result = stats.chisquare(counts)
        assert result.pvalue > 1e-4


class TestSqrtTransform:
    def test_mode_location(self):
        params = SqueezedVacuumParams(s=0.6, n_pool=12)
        theta = 0.2
        v = quadrature_variance(params.v_plus, params.v_minus, theta)
        y_grid = np.linspace(0.01, 40.0 * v, 40001)
        values = sqrt_transform_loglik(y_grid, 12, theta, params)
        y_star = y_grid[np.argmax(values)]
        assert y_star == pytest.approx((2 * 12 - 1) * v / 2.0, rel=1e-3)

    @pytest.mark.parametrize("n", [20, 50])
    def test_gaussianized_variable_kl_below_001(self, n):
        # the transformation Gaussianises z = sqrt(2y); measured on z (the
        # variable where the approximation is a density) the divergence from
        # the exact distribution is below 0.01 nats for n >= 20
        params = SqueezedVacuumParams(s=0.4, n_pool=n)
        theta = 0.5
        v = quadrature_variance(params.v_plus, params.v_minus, theta)
        mu = math.sqrt((2 * n - 1) * v)
        hi = 60.0 * n * v

        def log_q(y):
            z = math.sqrt(2.0 * y)
            return (
                -0.5 * math.log(v)
                - (z - mu) ** 2 / (2.0 * v)
                - 0.5 * math.log(2.0 * y)
            )

        norm, _ = quad(lambda y: math.exp(log_q(y)), 1e-12, hi, limit=400)

        def kl_integrand(y):
            lp = chi2_loglik(y, n, theta, params)
            lq = log_q(y) - math.log(norm)
            return math.exp(lp) * (lp - lq)

        kl, _ = quad(kl_integrand, 1e-12, hi, limit=400)
        assert kl < 0.01

    @pytest.mark.parametrize("n,budget", [(20, 0.02), (50, 0.01)])
    def test_raw_formula_kl_decays(self, n, budget):
        # treating the quoted expression directly as a y-density costs an
        # extra Jacobian-shaped mismatch: ~0.3/n nats, so 0.015 at n=20
        params = SqueezedVacuumParams(s=0.4, n_pool=n)
        theta = 0.5
        v = quadrature_variance(params.v_plus, params.v_minus, theta)
        hi = 60.0 * n * v
        norm, _ = quad(
            lambda y: math.exp(sqrt_transform_loglik(y, n, theta, params)),
            1e-9,
            hi,
            limit=400,
        )

        def kl_integrand(y):
            lp = chi2_loglik(y, n, theta, params)
            lq = sqrt_transform_loglik(y, n, theta, params) - math.log(norm)
            return math.exp(lp) * (lp - lq)

        kl, _ = quad(kl_integrand, 1e-9, hi, limit=400)
        assert 0.0 < kl < budget

    def test_depends_on_theta_only_through_variance(self):
        params = SqueezedVacuumParams(s=0.9, n_pool=5)
        # V(theta) = V(pi - theta)
        a = sqrt_transform_loglik(3.3, 5, 0.4, params)
        b = sqrt_transform_loglik(3.3, 5, math.pi - 0.4, params)
        assert a == pytest.approx(b, rel=1e-12)

    def test_requires_two_samples(self):
        with pytest.raises(DomainError):
            sqrt_transform_loglik(1.0, 1, 0.1, SqueezedVacuumParams(s=0.5))


def _chi_relative_variance(n: int) -> float:
    """Exact relative variance of c * sqrt(chi2_n): scale-free oracle."""
    ratio = math.exp(math.lgamma((n + 1) / 2) - math.lgamma(n / 2))
    mean_sq = 2.0 * ratio * ratio
    return (n - mean_sq) / mean_sq


class TestXiEstimator:
    def test_plug_in_consistency(self):
        n, v = 9, 1.7
        y = (2 * n - 1) * v / 2.0
        assert xi_estimator(y, n) == pytest.approx(math.sqrt(v), rel=1e-15)

    def test_relative_variance_near_classical_scaling(self):
        # 2000 data sets at n = 5: spread matches 1/(2n-1) within 3 MC
        # standard errors (the exact chi value sits ~6% below it)
        stream = derive_stream(105, 0)
        y = chi2_sample(stream, 5, 1.0, size=2000)
        xi = xi_estimator(y, 5)
        rel = xi.var(ddof=1) / xi.mean() ** 2
        se = rel * math.sqrt(2.0 / 1999)
        assert abs(rel - 1.0 / 9.0) < 3 * se

    def test_variance_at_n13_against_exact_oracle(self):
        stream = derive_stream(106, 0)
        n, trials = 13, 10**5
        y = chi2_sample(stream, n, 1.0, size=trials)
        xi = xi_estimator(y, n)
        observed = xi.var(ddof=1)
        exact = (2.0 / (2 * n - 1)) * (
            n - 2.0 * math.exp(math.lgamma((n + 1) / 2) - math.lgamma(n / 2)) ** 2
        )
        se = exact * math.sqrt(2.0 / (trials - 1))
        assert abs(observed - exact) < 5 * se
        # the classical 1/(2n-1) value is an O(1/n) approximation of it
        assert abs(exact - 1.0 / 25.0) < 9e-4

    def test_rejects_negative_y(self):
        with pytest.raises(DomainError):
            xi_estimator(-0.1, 4)


class TestBrightHomodyne:
    def test_vacuum_limit(self):
        stream = derive_stream(107, 0)
        params = BrightSqueezedParams(alpha=0.0, s=0.0)
        draws = bright_homodyne_sample(stream, params, 0.0, 0.3, size=10**5)
        assert abs(draws.mean()) < 3 * math.sqrt(0.5 / 10**5)
        var_se = 0.5 * math.sqrt(2.0 / 10**5)
        assert abs(draws.var(ddof=1) - 0.5) < 5 * var_se

    def test_amplitude_quadrature_mean(self):
        stream = derive_stream(108, 0)
        params = BrightSqueezedParams(alpha=3.0, s=0.5)
        draws = bright_homodyne_sample(stream, params, 0.0, 0.0, size=10**5)
        sigma = math.sqrt(params.mean_photons)  # upper bound on the spread
        assert abs(draws.mean() - math.sqrt(2.0) * 3.0) < 3 * sigma / math.sqrt(10**5)

    def test_phase_quadrature_is_squeezed(self):
        stream = derive_stream(109, 0)
        s = 0.8
        params = BrightSqueezedParams(alpha=2.0, s=s)
        draws = bright_homodyne_sample(
            stream, params, 0.4, 0.4 + math.pi / 2, size=10**5
        )
        target = math.exp(-2 * s) / 2.0
        se = target * math.sqrt(2.0 / 10**5)
        assert abs(draws.var(ddof=1) - target) < 5 * se

    def test_sampler_is_gaussian(self):
        stream = derive_stream(110, 0)
        params = BrightSqueezedParams(alpha=1.5, s=0.3)
        draws = bright_homodyne_sample(stream, params, 0.2, 1.0, size=10**5)
        mean = math.sqrt(2.0) * 1.5 * math.cos(0.2 - 1.0)
        sigma = math.sqrt(
            quadrature_variance(*squeezed_variances(0.3), 1.0 - 0.2)
        )
        result = stats.kstest(draws, "norm", args=(mean, sigma))
        assert result.pvalue > 1e-4

    def test_mean_photons(self):
        params = BrightSqueezedParams(alpha=2.0, s=1.0)
        assert params.mean_photons == pytest.approx(4.0 + math.sinh(1.0) ** 2, rel=1e-15)

    def test_invalid_params(self):
        with pytest.raises(DomainError):
            BrightSqueezedParams(alpha=-1.0, s=0.0)
        with pytest.raises(DomainError):
            BrightSqueezedParams(alpha=1.0, s=-0.2)


class TestModelObjects:
    def test_resource_costs(self):
        assert NoonParityModel(6).resource_cost == 6.0
        assert NoonFullModel(6).resource_cost == 6.0
        assert MachZehnderModel().resource_cost == 1.0
        assert HollandBurnettModel(5).resource_cost == 10.0
        sv = SqueezedVacuumChi2Model(SqueezedVacuumParams(s=1.0, n_pool=3))
        assert sv.resource_cost == pytest.approx(3 * math.sinh(1.0) ** 2, rel=1e-15)

    def test_outcome_labels(self):
        np.testing.assert_array_equal(NoonParityModel(2).outcomes, [0, 1])
        np.testing.assert_array_equal(NoonFullModel(3).outcomes, [0, 1, 2, 3])
        np.testing.assert_array_equal(
            HollandBurnettModel(2).outcomes, [-2, -1, 0, 1, 2]
        )

    def test_log_pmf_grid_matches_pointwise_pmf(self):
        nodes = np.linspace(-1.0, 1.0, 65)
        for model in (
            NoonParityModel(5),
            NoonFullModel(4),
            MachZehnderModel(),
            HollandBurnettModel(3),
            HollandBurnettModel(3, mode="bessel"),
        ):
            table = np.exp(model.log_pmf_grid(nodes))
            for col, phi in [(0, nodes[0]), (32, nodes[32]), (64, nodes[64])]:
                np.testing.assert_allclose(
                    table[:, col], model.pmf(float(phi)), atol=1e-12
                )

    def test_bessel_mode_validity_reporting(self):
        model = HollandBurnettModel(8, mode="bessel")
        assert model.validity_threshold == 2.0
        assert model.fraction_beyond_validity([0, 1, -2, 5]) == 0.25
        assert model.fraction_beyond_validity([]) == 0.0

    @pytest.mark.parametrize(
        "model,phi",
        [
            (NoonParityModel(3), 0.7),
            (NoonFullModel(6), 0.4),
            (HollandBurnettModel(4), 0.25),
            (HollandBurnettModel(12, mode="bessel"), 0.04),
        ],
    )
    def test_samplers_match_pmf(self, model, phi):
        stream = derive_stream(111, 0)
        draws = model.sample(stream, phi, size=10**5)
        pmf = model.pmf(phi)
        pmf = pmf / pmf.sum()
        idx = model.outcome_index(draws)
        counts = np.bincount(idx, minlength=model.outcomes.size)
        keep = pmf * 10**5 >= 5.0
        merged_counts = np.append(counts[keep], counts[~keep].sum())
        merged_probs = np.append(pmf[keep], pmf[~keep].sum())
        if merged_probs[-1] == 0.0:
            merged_counts, merged_probs = merged_counts[:-1], merged_probs[:-1]
        result = stats.chisquare(merged_counts, merged_probs * 10**5)
        assert result.pvalue > 1e-4

    def test_outcome_index_validation(self):
        with pytest.raises(DomainError):
            NoonParityModel(2).outcome_index([2])
        with pytest.raises(DomainError):
            HollandBurnettModel(3).outcome_index([4])

    def test_build_model_factory(self):
        assert isinstance(build_model("noon", {"n_photons": 4}), NoonParityModel)
        assert isinstance(build_model("noon-full", {"n_photons": 4}), NoonFullModel)
        assert isinstance(build_model("mz", {}), MachZehnderModel)
        hb = build_model("hb", {"j": 3, "mode": "bessel"})
        assert hb.mode == "bessel"
        sv = build_model("squeezed-vacuum", {"s": 1.0, "n_pool": 2})
        assert sv.params.n_pool == 2

    def test_build_model_errors(self):
        with pytest.raises(DomainError):
            build_model("teleporter", {})
        with pytest.raises(DomainError):
            build_model("noon", {})
        with pytest.raises(DomainError):
            build_model("hb", {"j": 3, "mode": "magic"})
