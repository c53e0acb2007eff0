"""Response-density construction, evaluation, sampling, and smoothing."""

import math

import numpy as np
import pytest

from condest.densities import (
    Bernoulli,
    Gamma,
    Gaussian,
    Mixture,
    Multinomial,
    Poisson,
    ReferenceUniform,
    Tabulated,
    log_density,
    normalization,
    nu_log_density,
    sample_response,
    smooth,
)
from condest.errors import DomainError
from condest.reference import (
    CountingMeasure,
    LebesgueInterval,
    binary_uniform_reference,
    cauchy_reference,
    gamma_reference,
    poisson_reference,
)


class TestReferenceMeasures:
    def test_total_masses(self):
        assert binary_uniform_reference().total_mass == 1.0
        assert CountingMeasure((0, 1), (1, 1)).total_mass == 2.0
        assert LebesgueInterval(0.0, 3.0).total_mass == 3.0
        assert cauchy_reference().total_mass == 1.0
        # 1/pi + coth(pi), the closed form of 2/pi * (1 + sum 1/(1+y^2))
        wc = poisson_reference()
        ys = np.arange(2_000_000)
        partial = np.sum((2 / np.pi) / (1 + ys.astype(float) ** 2))
        assert abs(wc.total_mass - partial) < 1e-5

    def test_counting_weights_positive(self):
        with pytest.raises(ValueError):
            CountingMeasure((0, 1), (1.0, 0.0))

    def test_normalized_sampling_in_support(self):
        rng = np.random.default_rng(7)
        assert set(np.unique(binary_uniform_reference().sample_normalized(rng, 100))) <= {0.0, 1.0}
        ys = gamma_reference(2.0, 0.5).sample_normalized(rng, 100)
        assert np.all(ys >= 0)


class TestNormalization:
    """Every constructed density integrates/sums to 1 under nu (1e-8)."""

    def test_named_families(self):
        cases = [
            (Bernoulli(0.3), binary_uniform_reference()),
            (Multinomial((0.2, 0.5, 0.3)), CountingMeasure((0, 1, 2), (1, 1, 1))),
            (Gaussian(0.4, 1.3), cauchy_reference()),
            (Poisson(2.5), poisson_reference()),
            (Gamma(2.0, 0.7), gamma_reference(2.0, 0.5)),
        ]
        for q, ref in cases:
            assert abs(normalization(q, ref) - 1.0) < 1e-8

    def test_smoothed_and_mixtures(self):
        cref = cauchy_reference()
        q = smooth(Gaussian(1.0, 0.5), 0.25, cref)
        assert abs(normalization(q, cref) - 1.0) < 1e-8
        mix = Mixture((Gaussian(0, 1), Gaussian(3, 2)), (0.25, 0.75))
        assert abs(normalization(mix, cref) - 1.0) < 1e-8

    def test_tabulated_must_normalize(self):
        ref = CountingMeasure((0, 1), (1, 1))
        with pytest.raises(DomainError):
            Tabulated(ref, (0.9, 0.9))


class TestLogDensity:
    def test_bernoulli_half(self):
        assert log_density(Bernoulli(0.5), 1.0) == pytest.approx(math.log(0.5), abs=1e-15)

    def test_standard_normal_mode(self):
        assert log_density(Gaussian(0, 1), 0.0) == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-15)

    def test_outside_support_raises(self):
        with pytest.raises(DomainError):
            log_density(Bernoulli(0.5), 0.25)
        with pytest.raises(DomainError):
            log_density(Gamma(2.0, 1.0), -1.0)

    def test_nu_density_ratio_is_measure_free(self):
        # log p - log q w.r.t. nu equals the natural-base ratio
        ref = binary_uniform_reference()
        p, q = Bernoulli(0.8), Bernoulli(0.3)
        lhs = nu_log_density(p, 1.0, ref) - nu_log_density(q, 1.0, ref)
        rhs = p.logpdf(1.0) - q.logpdf(1.0)
        assert lhs == pytest.approx(rhs, abs=1e-14)

    def test_reference_uniform_nu_density_is_one_over_k(self):
        ref = CountingMeasure((0, 1, 2), (2, 1, 1))
        u = ReferenceUniform(ref)
        for y in (0, 1, 2):
            assert nu_log_density(u, y, ref) == pytest.approx(-math.log(4.0), abs=1e-14)


class TestSampling:
    def test_poisson_law_of_large_numbers(self):
        # empirical mean of 1e5 draws from Poisson(3) within 3 sigma of 3
        rng = np.random.default_rng(20240811)
        ys = sample_response(Poisson(3.0), rng, size=100_000)
        assert abs(ys.mean() - 3.0) <= 3.0 * math.sqrt(3.0 / 100_000)

    def test_tabulated_inverse_cdf_on_grid(self):
        ref = LebesgueInterval(0.0, 1.0)
        q = Tabulated(ref, (2.0, 0.0))  # all mass on the first cell
        rng = np.random.default_rng(3)
        ys = q.sample(rng, size=500)
        assert np.all((ys >= 0.0) & (ys <= 0.5))

    def test_mixture_sampling_components(self):
        mix = Mixture((Bernoulli(0.0), Bernoulli(1.0)), (0.5, 0.5))
        rng = np.random.default_rng(5)
        ys = mix.sample(rng, size=2000)
        assert abs(ys.mean() - 0.5) < 0.05


class TestSmoothing:
    def test_alpha_zero_is_identity(self):
        q = Gaussian(1.0, 2.0)
        assert smooth(q, 0.0, cauchy_reference()) is q

    def test_uniform_density_is_fixed_point(self):
        ref = CountingMeasure((0, 1, 2, 3), (1, 1, 1, 1))
        u = Tabulated(ref, (0.25, 0.25, 0.25, 0.25))
        for alpha in (0.1, 1.0, 7.5):
            out = smooth(u, alpha, ref)
            np.testing.assert_allclose(out.values, u.values, atol=1e-15)

    def test_degenerate_bernoulli_tabulated(self):
        # (q + 1/2)/2 per atom for K = 2, alpha = 1
        ref = CountingMeasure((0, 1), (1, 1))
        q = Tabulated(ref, (0.0, 1.0))
        out = smooth(q, 1.0, ref)
        np.testing.assert_allclose(out.values, (0.25, 0.75), atol=1e-15)

    def test_pointwise_lower_bound(self):
        # nu-density of the smoothed density >= alpha/(K(1+alpha))
        cref = cauchy_reference()
        alpha = 0.37
        q = smooth(Gaussian(0.0, 0.3), alpha, cref)
        ys = np.linspace(-30, 30, 101)
        nu_dens = np.exp(q.logpdf(ys) - cref.log_weight(ys))
        assert np.all(nu_dens >= alpha / (1 + alpha) - 1e-12)

    def test_bernoulli_smoothing_closed_form(self):
        ref = binary_uniform_reference()
        out = smooth(Bernoulli(1.0), 1.0, ref)
        assert isinstance(out, Bernoulli)
        assert out.mean == pytest.approx(0.75, abs=1e-15)

    def test_mixture_flattening(self):
        cref = cauchy_reference()
        once = smooth(Gaussian(0, 1), 0.5, cref)
        twice = smooth(once, 0.5, cref)
        assert all(not isinstance(c, Mixture) for c in twice.components)
        assert abs(sum(twice.weights) - 1.0) < 1e-12
