"""Model classes: construction invariants, discretization counts, the
piecewise bump machinery, and covariate samplers."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from condest.bumps import (
    BumpGridClass,
    WiggleBundle,
    WiggleClass,
    WiggleComponent,
    admissible_centers,
    eta_for,
    separated_centers,
    triangle_pulse,
    wiggle_bundle_mean,
    zigzag,
)
from condest.densities import normalization
from condest.divergences import ber_hellinger_sq
from condest.errors import CapacityError, DomainError
from condest.models import (
    BernoulliThresholdClass,
    FiniteSet,
    GammaInverseLinkClass,
    GaussianCovariates,
    GaussianLinearClass,
    PoissonLogLinearClass,
    UniformBall,
    UniformInterval,
    discretize,
    pool_means,
    sample_covariates,
)


class TestZigzag:
    def test_boundary_and_plateau_values(self):
        assert zigzag(-0.5) == pytest.approx(0.0, abs=1e-15)
        assert zigzag(0.25) == pytest.approx(0.25, abs=1e-15)
        assert zigzag(0.5) == pytest.approx(0.0, abs=1e-15)
        assert zigzag(-0.25) == pytest.approx(-0.25, abs=1e-15)

    def test_square_integral_is_one_twentyfourth(self):
        val, err = quad(lambda x: zigzag(x) ** 2, -0.5, 0.5, points=[-3 / 8, -1 / 8, 1 / 8, 3 / 8])
        assert err < 1e-10
        assert val == pytest.approx(1.0 / 24.0, abs=1e-9)

    def test_domain_enforced(self):
        with pytest.raises(DomainError):
            zigzag(0.75)


class TestTrianglePulse:
    def test_spot_values(self):
        eta = 0.05
        assert triangle_pulse(eta, 0.0) == 0.0
        assert triangle_pulse(eta, -eta / 2) == pytest.approx(0.5, abs=1e-15)
        assert triangle_pulse(eta, eta / 2) == pytest.approx(-0.5, abs=1e-15)
        assert triangle_pulse(eta, 2 * eta) == 0.0

    def test_odd_on_its_support(self):
        eta = 0.03
        xs = np.linspace(-eta, eta, 101)
        np.testing.assert_allclose(triangle_pulse(eta, xs), -triangle_pulse(eta, -xs), atol=1e-15)

    def test_orthogonal_to_zigzag(self):
        # integral of zigzag(x) * pulse(z - x) dx vanishes for admissible z:
        # the zigzag is constant on the bump support and the pulse is odd
        rng = np.random.default_rng(42)
        for _ in range(100):
            lam = rng.uniform(0.05, 0.25)
            eta = eta_for(lam, gamma=0.25)
            region = (0.125 + eta, 0.375 - eta) if rng.random() < 0.5 else (-0.375 + eta, -0.125 - eta)
            z = rng.uniform(*region)
            val, _ = quad(
                lambda x: zigzag(x) * triangle_pulse(eta, z - x),
                z - eta,
                z + eta,
                points=[z - eta / 2, z, z + eta / 2],
            )
            assert abs(val) <= 1e-9


class TestWiggleGeometry:
    def test_eta_relation(self):
        gamma, lam = 0.25, 0.2
        eta = eta_for(lam, gamma)
        assert eta**gamma == pytest.approx(2 ** (1 - gamma) * lam**2, rel=1e-12)

    def test_admissible_centers(self):
        eta = 0.01
        assert admissible_centers([0.2, 0.25, -0.2], eta)
        assert not admissible_centers([0.0], eta)  # outside the plateau regions
        assert not admissible_centers([0.2, 0.205], eta)  # overlapping bumps

    def test_separated_centers_are_admissible(self):
        rng = np.random.default_rng(1)
        xs = rng.uniform(-0.5, 0.5, 300)
        eta = 0.004
        zs = separated_centers(xs, eta)
        assert len(zs) > 0
        assert admissible_centers(zs, eta)


def _random_bundle(rng, gamma=0.25, max_components=3):
    ncomp = int(rng.integers(1, max_components + 1))
    weights = rng.dirichlet(np.ones(ncomp))
    comps = []
    for _ in range(ncomp):
        lam = float(rng.uniform(0.02, 0.25))
        eta = eta_for(lam, gamma)
        pts = rng.uniform(-0.5, 0.5, 50)
        zs = separated_centers(pts, eta, max_count=6)
        signs = rng.choice([-1.0, 1.0], size=len(zs))
        comps.append(WiggleComponent(lam, tuple(zs), tuple(signs)))
    return WiggleBundle(gamma, tuple(float(w) for w in weights), tuple(comps))


class TestWiggleMean:
    def test_zero_offset_is_constant_half(self):
        cls = WiggleClass(0.25)
        xs = np.linspace(-0.5, 0.5, 33)
        np.testing.assert_allclose(cls.constant().mean(xs), 0.5, atol=0)

    def test_plateau_value_without_bump(self):
        # at x with zigzag(x) = 1/4 and no active bump: 1/2 + lam/8
        cls = WiggleClass(0.25)
        lam = 0.2
        m = cls.member(lam, (), ())
        assert m.mean(np.array([0.25]))[0] == pytest.approx(0.5 + lam / 8.0, abs=1e-14)

    def test_offset_bound(self):
        # |mean - 1/2| <= lam_bar |zigzag| <= 1/16 pointwise
        rng = np.random.default_rng(7)
        xs = rng.uniform(-0.5, 0.5, 1000)
        for _ in range(50):
            b = _random_bundle(rng)
            dev = np.abs(wiggle_bundle_mean(b, xs) - 0.5)
            assert np.all(dev <= b.lam_bar * np.abs(zigzag(xs)) + 1e-12)
            assert np.all(dev <= 1.0 / 16.0 + 1e-12)

    def test_holder_continuity(self):
        rng = np.random.default_rng(8)
        gamma = 0.25
        for _ in range(20):
            b = _random_bundle(rng, gamma=gamma)
            x = rng.uniform(-0.5, 0.5, 500)
            y = rng.uniform(-0.5, 0.5, 500)
            lhs = np.abs(wiggle_bundle_mean(b, x) - wiggle_bundle_mean(b, y))
            assert np.all(lhs <= np.abs(x - y) ** gamma + 1e-10)

    def test_hellinger_mass_lower_bound(self):
        # E_x d_H^2(1/2, mean(x)) >= lam_bar^2 / 192, expectation by quadrature
        rng = np.random.default_rng(9)
        for _ in range(25):
            b = _random_bundle(rng)
            f = lambda x: float(ber_hellinger_sq(0.5, wiggle_bundle_mean(b, np.array([x]))[0]))
            val, _ = quad(f, -0.5, 0.5, limit=400, points=[-3 / 8, -1 / 8, 1 / 8, 3 / 8])
            assert val >= b.lam_bar**2 / 192.0 - 1e-12

    def test_inadmissible_centers_rejected(self):
        cls = WiggleClass(0.25)
        with pytest.raises(DomainError):
            cls.member(0.2, (0.0,), (1.0,))


class TestDiscretize:
    def test_threshold_pool_count(self):
        # (n+1) thresholds x 3 x 3 thetas = 45 for a 4-point sample, step 1/2
        cls = BernoulliThresholdClass()
        pool = discretize(cls, 0.5, xs=np.array([0.1, 0.5, 0.9, 1.3]))
        assert len(pool) == 45

    def test_gaussian_weight_lattice(self):
        # resolution chosen so the lattice step is exactly 1: {-1, 0, 1}
        cls = GaussianLinearClass(dim=1, x_bound=1.0, w_bound=1.0, sigma=1.0)
        pool = discretize(cls, 1.0 / (2.0 * math.sqrt(2.0)))
        ws = sorted(m.w[0] for m in pool)
        np.testing.assert_allclose(ws, [-1.0, 0.0, 1.0], atol=1e-12)

    def test_bump_grid_patterns(self):
        pool = discretize(BumpGridClass(cells=3, gamma=1.0), None)
        assert len(pool) == 8

    def test_capacity_error(self):
        with pytest.raises(CapacityError):
            discretize(BumpGridClass(cells=20, gamma=1.0), None)

    def test_wiggle_pool_contains_constant_first(self):
        rng = np.random.default_rng(3)
        xs = rng.uniform(-0.5, 0.5, 200)
        pool = discretize(WiggleClass(0.25), None, xs=xs)
        assert pool[0].lam == 0.0
        assert len(pool) > 1


class TestClassInvariants:
    def test_members_produce_valid_densities(self):
        rng = np.random.default_rng(11)
        specs = [
            GaussianLinearClass(),
            PoissonLogLinearClass(),
            GammaInverseLinkClass(),
            BernoulliThresholdClass(),
        ]
        for spec in specs:
            if spec.tag == "bernoulli-threshold":
                model = spec.member(0.0, 0.25, 0.75)
                xs = rng.normal(size=20)
            else:
                w = rng.uniform(-1, 1, size=1)
                w = w / max(1.0, np.linalg.norm(w))
                model = spec.member(w)
                xs = sample_covariates(spec.default_covariates(), 20, rng)
            for x in np.atleast_1d(xs)[:5]:
                q = model.evaluate(float(x))
                assert abs(normalization(q, spec.ref) - 1.0) < 1e-8

    def test_gamma_scale_positive_over_domain(self):
        spec = GammaInverseLinkClass(x_bound=1.0, w_bound=1.0, shape=2.0, margin=0.5)
        rng = np.random.default_rng(12)
        for _ in range(100):
            w = rng.uniform(-1, 1, size=1)
            w = w / max(1.0, float(np.linalg.norm(w)))
            model = spec.member(w)
            xs = rng.uniform(-1, 1, 50)
            assert np.all(model.scale(xs) > 0)

    def test_density_bound_holds_at_random_covariates(self):
        # sup_y of the nu-density stays below the declared class bound B
        spec = GaussianLinearClass()
        model = spec.member([0.8])
        ys = np.linspace(-30, 30, 2001)
        for x in (-1.0, 0.0, 1.0):
            q = model.evaluate(x)
            nu_dens = np.exp(q.logpdf(ys) - spec.ref.log_weight(ys))
            assert nu_dens.max() <= spec.density_bound + 1e-9


class TestCovariates:
    def test_uniform_interval_endpoints(self):
        rng = np.random.default_rng(13)
        xs = sample_covariates(UniformInterval(-0.5, 0.5), 10_000, rng)
        assert xs.min() >= -0.5 and xs.max() <= 0.5

    def test_uniform_interval_clt(self):
        rng = np.random.default_rng(14)
        xs = sample_covariates(UniformInterval(-0.5, 0.5), 100_000, rng)
        assert abs(xs.mean()) <= 0.005

    def test_finite_set_hits_every_atom(self):
        # P(miss one of 3 atoms in 100 draws) < 3 (2/3)^100 < 1e-12
        rng = np.random.default_rng(15)
        xs = sample_covariates(FiniteSet((1.0, 2.0, 3.0)), 100, rng)
        assert set(np.unique(xs)) == {1.0, 2.0, 3.0}

    def test_ball_radius(self):
        rng = np.random.default_rng(16)
        xs = sample_covariates(UniformBall(3, 2.0), 1000, rng)
        assert np.all(np.linalg.norm(xs, axis=1) <= 2.0 + 1e-12)

    def test_gaussian_unbounded(self):
        rng = np.random.default_rng(17)
        xs = sample_covariates(GaussianCovariates(), 1000, rng)
        assert xs.std() == pytest.approx(1.0, abs=0.1)

    def test_determinism_under_seed(self):
        a = sample_covariates(UniformInterval(0, 1), 10, np.random.default_rng(99))
        b = sample_covariates(UniformInterval(0, 1), 10, np.random.default_rng(99))
        np.testing.assert_array_equal(a, b)


class TestPoolMeans:
    def test_bernoulli_profile_matrix(self):
        cls = BernoulliThresholdClass()
        xs = np.array([-1.0, 0.0, 1.0])
        pool = [cls.member(-np.inf, 0.2, 0.8), cls.member(0.5, 0.1, 0.9)]
        kind, mat, extra = pool_means(pool, xs)
        assert kind == "bernoulli-mean"
        np.testing.assert_allclose(mat, [[0.8, 0.8, 0.8], [0.1, 0.1, 0.9]])

    def test_gaussian_profile_matrix(self):
        cls = GaussianLinearClass(sigma=2.0)
        pool = [cls.member([0.5]), cls.member([-0.5])]
        kind, mat, sigma = pool_means(pool, np.array([1.0, -1.0]))
        assert kind == "gaussian-mean" and sigma == 2.0
        np.testing.assert_allclose(mat, [[0.5, -0.5], [-0.5, 0.5]])
