"""Grid posterior machinery: normalisation, moments, dispersion,
information gain and the aliasing structure of fringe likelihoods."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from phaselab import (
    DegeneratePosteriorError,
    DomainError,
    MachZehnderModel,
    NoonParityModel,
    PriorSpec,
    build_model,
    circular_dispersion,
    closed_posterior,
    info_gain,
    make_grid,
    moments,
    sinc,
    update,
)
from phaselab.models import LOG_ZERO


class _ZeroOutcomeStub:
    """Two outcomes, the second impossible everywhere."""

    outcomes = np.array([0, 1])

    def outcome_index(self, outcomes):
        return np.asarray(outcomes, dtype=np.int64)

    def log_pmf_grid(self, nodes):
        return np.vstack([np.zeros(nodes.size), np.full(nodes.size, LOG_ZERO)])


class TestMakeGrid:
    def test_uniform_density(self):
        grid = make_grid(PriorSpec(-math.pi, math.pi, "circular"), 65)
        np.testing.assert_allclose(grid.density, 1.0 / (2 * math.pi), rtol=1e-14)

    def test_density_integrates_to_one(self):
        grid = make_grid(PriorSpec(-0.3, 1.1), 129)
        assert grid.integrate(grid.density) == pytest.approx(1.0, abs=1e-12)

    def test_midpoint_is_a_node(self):
        prior = PriorSpec(-0.25, 0.75)
        grid = make_grid(prior, 4097)
        assert grid.nodes[2048] == pytest.approx(prior.midpoint, abs=1e-15)

    @pytest.mark.parametrize("size", [32, 64, 31, 10])
    def test_size_validation(self, size):
        with pytest.raises(DomainError):
            make_grid(PriorSpec(-1.0, 1.0), size)

    def test_prior_validation(self):
        with pytest.raises(DomainError):
            PriorSpec(1.0, 1.0)
        with pytest.raises(DomainError):
            PriorSpec(-4.0, 4.0)
        with pytest.raises(DomainError):
            PriorSpec(-1.0, 1.0, topology="circular")
        with pytest.raises(DomainError):
            PriorSpec(-1.0, 1.0, topology="donut")


class TestUpdate:
    def test_empty_batch_is_identity(self):
        grid = make_grid(PriorSpec(-1.0, 1.0), 65)
        updated = update(grid, NoonParityModel(4), [])
        np.testing.assert_array_equal(updated.density, grid.density)
        np.testing.assert_array_equal(updated.log_weights, grid.log_weights)

    def test_single_even_outcome_matches_closed_form(self):
        n = 4
        grid = make_grid(PriorSpec(-math.pi / n, math.pi / n), 4097)
        posterior = update(grid, NoonParityModel(n), [0])
        shape = closed_posterior("noon", n)(grid.nodes)
        expected = shape / grid.integrate(shape)
        assert np.max(np.abs(posterior.density - expected)) < 1e-10

    def test_repeated_single_photon_matches_closed_form(self):
        n = 6
        grid = make_grid(PriorSpec(-math.pi, math.pi, "circular"), 4097)
        posterior = update(grid, MachZehnderModel(), [0] * n)
        shape = closed_posterior("mz", n)(grid.nodes)
        expected = shape / grid.integrate(shape)
        assert np.max(np.abs(posterior.density - expected)) < 1e-10

    def test_batch_associativity(self):
        model = build_model("hb", {"j": 3})
        grid = make_grid(PriorSpec(-1.0, 1.0), 513)
        first = np.array([0, 1, -1, 0, 2])
        second = np.array([0, -2, 0])
        combined = update(grid, model, np.concatenate([first, second]))
        stepwise = update(update(grid, model, first), model, second)
        np.testing.assert_allclose(
            combined.log_weights, stepwise.log_weights, rtol=0, atol=1e-12
        )
        np.testing.assert_allclose(combined.density, stepwise.density, rtol=1e-12)

    def test_degenerate_posterior_raises(self):
        grid = make_grid(PriorSpec(-1.0, 1.0), 65)
        with pytest.raises(DegeneratePosteriorError):
            update(grid, _ZeroOutcomeStub(), [1])

    def test_outcome_outside_space_raises(self):
        grid = make_grid(PriorSpec(-1.0, 1.0), 65)
        with pytest.raises(DomainError):
            update(grid, NoonParityModel(2), [3])


class TestCircularDispersion:
    def test_near_point_mass(self):
        grid = make_grid(PriorSpec(-math.pi, math.pi, "circular"), 4097)
        logw = -0.5 * (grid.nodes - 0.4) ** 2 / 1e-6
        from phaselab.bayes import PosteriorGrid

        sharp = PosteriorGrid(grid.prior, grid.nodes, logw)
        assert circular_dispersion(sharp) < 1e-5

    def test_uniform_full_circle(self):
        grid = make_grid(PriorSpec(-math.pi, math.pi, "circular"), 4097)
        assert circular_dispersion(grid) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("n", [2, 4, 8, 32, 64])
    def test_uniform_window_formula(self, n):
        grid = make_grid(PriorSpec(-math.pi / n, math.pi / n), 16385)
        expected = 1.0 - sinc(math.pi / n) ** 2
        assert circular_dispersion(grid) == pytest.approx(expected, abs=1e-8)

    def test_reference_value_at_n4(self):
        grid = make_grid(PriorSpec(-math.pi / 4, math.pi / 4), 16385)
        assert circular_dispersion(grid) == pytest.approx(0.18943, abs=1e-5)

    def test_bounded_in_unit_interval(self):
        for n in (2, 5, 16):
            grid = make_grid(PriorSpec(-math.pi / n, math.pi / n), 513)
            posterior = update(grid, NoonParityModel(n), [0])
            assert 0.0 <= circular_dispersion(posterior) <= 1.0


class TestMoments:
    def test_uniform_window_variance(self):
        for n in (2, 8, 32):
            half = math.pi / n
            grid = make_grid(PriorSpec(-half, half), 8193)
            stats = moments(grid)
            assert stats.variance == pytest.approx(half**2 / 3.0, rel=1e-6)
            assert stats.variance == pytest.approx(math.pi**2 / (3 * n**2), rel=1e-6)

    def test_symmetric_grid_mean_is_midpoint(self):
        grid = make_grid(PriorSpec(0.2, 1.4), 513)
        stats = moments(grid)
        assert stats.mean == pytest.approx(0.8, abs=1e-12)
        assert stats.circular_mean == pytest.approx(0.8, abs=1e-12)

    def test_fringe_posterior_variance_against_quadrature(self):
        n = 8
        grid = make_grid(PriorSpec(-math.pi, math.pi, "circular"), 4097)
        posterior = update(grid, MachZehnderModel(), [0] * n)
        norm, _ = quad(lambda t: math.cos(t / 2) ** (2 * n), -math.pi, math.pi, limit=200)
        expected, _ = quad(
            lambda t: t * t * math.cos(t / 2) ** (2 * n) / norm, -math.pi, math.pi, limit=200
        )
        assert moments(posterior).variance == pytest.approx(expected, abs=1e-8)

    def test_map_tie_breaks_to_lowest_node(self):
        grid = make_grid(PriorSpec(-1.0, 1.0), 65)
        # uniform weights: every node ties, the lowest index wins
        assert moments(grid).map_estimate == grid.nodes[0]

    def test_map_of_fringe_posterior(self):
        grid = make_grid(PriorSpec(-math.pi / 4, math.pi / 4), 4097)
        posterior = update(grid, NoonParityModel(4), [0])
        assert moments(posterior).map_estimate == 0.0

    def test_variance_nonnegative(self):
        grid = make_grid(PriorSpec(-0.01, 0.01), 33)
        assert moments(grid).variance >= 0.0


class TestInfoGain:
    def test_no_update_no_gain(self):
        grid = make_grid(PriorSpec(-1.0, 1.0), 129)
        same = update(grid, NoonParityModel(4), [])
        assert info_gain(grid, same) == 0.0

    def test_single_shot_gain_is_fringe_count_invariant(self):
        values = []
        for n in (2, 4, 8, 16):
            grid = make_grid(PriorSpec(-math.pi / n, math.pi / n), 4097)
            posterior = update(grid, NoonParityModel(n), [0])
            values.append(info_gain(grid, posterior))
        assert max(values) - min(values) < 1e-8

    def test_single_shot_gain_against_quadrature_oracle(self):
        n = 4
        grid = make_grid(PriorSpec(-math.pi / n, math.pi / n), 4097)
        posterior = update(grid, NoonParityModel(n), [0])

        def integrand(u):
            p = math.cos(u / 2) ** 2 / math.pi
            return p * math.log(p * 2 * math.pi) if p > 0 else 0.0

        oracle, _ = quad(integrand, -math.pi, math.pi, limit=200)
        assert info_gain(grid, posterior) == pytest.approx(oracle, abs=1e-8)

    def test_repeated_shots_gain_is_monotone(self):
        gains = []
        for n in (1, 2, 4, 8, 16):
            grid = make_grid(PriorSpec(-math.pi, math.pi, "circular"), 4097)
            posterior = update(grid, MachZehnderModel(), [0] * n)
            gains.append(info_gain(grid, posterior))
        assert all(b > a for a, b in zip(gains, gains[1:]))

    def test_node_mismatch_rejected(self):
        a = make_grid(PriorSpec(-1.0, 1.0), 65)
        b = make_grid(PriorSpec(-1.0, 1.0), 129)
        with pytest.raises(DomainError):
            info_gain(a, b)

    def test_support_violation_rejected(self):
        from phaselab.bayes import PosteriorGrid

        prior = PriorSpec(-1.0, 1.0)
        grid = make_grid(prior, 65)
        dead_prior_logw = np.full(65, -np.inf)
        dead_prior_logw[0] = 0.0
        narrow_prior = PosteriorGrid(prior, grid.nodes, dead_prior_logw)
        with pytest.raises(DomainError):
            info_gain(narrow_prior, grid)


class TestClosedPosteriors:
    def test_noon_peak(self):
        fn = closed_posterior("noon", 2)
        assert fn(0.0) == 1.0

    def test_single_photon_forms_coincide(self):
        noon = closed_posterior("noon", 1)
        mz = closed_posterior("mz", 1)
        phis = np.linspace(-math.pi, math.pi, 101)
        np.testing.assert_allclose(noon(phis), mz(phis), rtol=1e-15)

    def test_unknown_kind(self):
        with pytest.raises(DomainError):
            closed_posterior("ramsey", 2)


class TestStructuralInvariants:
    @pytest.mark.parametrize("n", [2, 4, 8, 16, 32])
    def test_aliasing_periodicity(self, n):
        # fringe likelihoods cannot tell phases 2*pi/n apart on the circle
        grid = make_grid(PriorSpec(-math.pi, math.pi, "circular"), 4097)
        posterior = update(grid, NoonParityModel(n), [0, 1, 0, 0, 1])
        shift = 4096 // n
        np.testing.assert_allclose(
            posterior.density[:-shift], posterior.density[shift:], rtol=0, atol=1e-10
        )

    @pytest.mark.parametrize("n", [4, 32])
    def test_grid_doubling_stability(self, n):
        results = {}
        for size in (4097, 8193):
            grid = make_grid(PriorSpec(-math.pi / n, math.pi / n), size)
            posterior = update(grid, NoonParityModel(n), [0])
            stats = moments(posterior)
            results[size] = (
                stats.mean,
                stats.variance,
                circular_dispersion(posterior),
                info_gain(grid, posterior),
            )
        np.testing.assert_allclose(results[4097], results[8193], rtol=0, atol=1e-6)

    @pytest.mark.parametrize("n", [8, 32])
    def test_grid_doubling_stability_full_circle(self, n):
        results = {}
        for size in (4097, 8193):
            grid = make_grid(PriorSpec(-math.pi, math.pi, "circular"), size)
            posterior = update(grid, MachZehnderModel(), [0] * n)
            stats = moments(posterior)
            results[size] = (
                stats.variance,
                circular_dispersion(posterior),
                info_gain(grid, posterior),
            )
        np.testing.assert_allclose(results[4097], results[8193], rtol=0, atol=1e-6)
