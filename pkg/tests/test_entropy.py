"""Empirical covers/packings, their exact small-instance oracles, entropy
profiles, critical radii, and localization machinery."""

import itertools
import math

import numpy as np
import pytest

from condest.bumps import BumpGridClass
from condest.divergences import ber_hellinger_sq
from condest.entropy import (
    EntropyProfile,
    MetricSpec,
    brute_max_local_pack,
    brute_max_pack,
    brute_min_cover,
    critical_radius,
    empirical_distance,
    entropy_profile,
    greedy_pack_cover,
    local_pack,
    localization_radius,
    profile_from_pool,
    rademacher_local,
    solve_fixed_point,
)
from condest.errors import CapacityError, DomainError
from condest.models import BernoulliThresholdClass

CLS = BernoulliThresholdClass()


def _random_pool(rng, size, xs):
    lo, hi = float(np.min(xs)) - 1.0, float(np.max(xs)) + 1.0
    pool = []
    for _ in range(size):
        pool.append(CLS.member(rng.uniform(lo, hi), rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)))
    return pool


class TestEmpiricalDistance:
    def test_identical_models(self):
        xs = np.array([0.0, 1.0, 2.0])
        m = CLS.member(0.5, 0.2, 0.8)
        assert empirical_distance(m, m, MetricSpec("hellinger", 2.0, xs)) == 0.0

    def test_single_point_equals_base_distance(self):
        xs = np.array([1.0])
        f = CLS.member(0.5, 0.2, 0.8)
        g = CLS.member(0.5, 0.2, 0.3)
        d = empirical_distance(f, g, MetricSpec("hellinger", 2.0, xs))
        assert d == pytest.approx(math.sqrt(ber_hellinger_sq(0.8, 0.3)), abs=1e-12)

    def test_one_of_four_points_differs(self):
        # thresholds 0.5 vs 1.5 on {0,1,2,3} disagree only at x = 1
        xs = np.array([0.0, 1.0, 2.0, 3.0])
        f = CLS.member(0.5, 0.2, 0.8)
        g = CLS.member(1.5, 0.2, 0.8)
        d = empirical_distance(f, g, MetricSpec("hellinger", 2.0, xs))
        assert d == pytest.approx(math.sqrt(ber_hellinger_sq(0.8, 0.2) / 4.0), abs=1e-12)
        # brute-force average over the sample agrees
        brute = math.sqrt(np.mean([ber_hellinger_sq(a, b) for a, b in zip(f.mean(xs), g.mean(xs))]))
        assert d == pytest.approx(brute, abs=1e-14)


class TestGreedyPackCover:
    def test_huge_scale_keeps_one(self):
        rng = np.random.default_rng(0)
        xs = rng.uniform(-1, 1, 6)
        pool = _random_pool(rng, 8, xs)
        cov = greedy_pack_cover(pool, MetricSpec("hellinger", 2.0, xs), 10.0)
        assert len(cov.members) == 1 and cov.certificate <= 10.0

    def test_tiny_scale_keeps_all(self):
        rng = np.random.default_rng(1)
        xs = rng.uniform(-1, 1, 6)
        pool = _random_pool(rng, 8, xs)
        cov = greedy_pack_cover(pool, MetricSpec("hellinger", 2.0, xs), 1e-12)
        assert len(cov.members) == len(pool)

    def test_output_is_packing_and_cover(self):
        rng = np.random.default_rng(2)
        xs = rng.uniform(-1, 1, 8)
        pool = _random_pool(rng, 12, xs)
        spec = MetricSpec("hellinger", 2.0, xs)
        eps = 0.2
        cov = greedy_pack_cover(pool, spec, eps)
        for i, j in itertools.combinations(cov.indices, 2):
            assert empirical_distance(pool[i], pool[j], spec) > eps
        assert cov.certificate <= eps


class TestSandwiches:
    """Exact pack/cover and local-entropy sandwiches on brute-forceable pools."""

    def test_cover_pack_sandwich(self):
        rng = np.random.default_rng(3)
        for trial in range(40):
            n = int(rng.integers(2, 9))
            xs = rng.uniform(-1, 1, n)
            pool = _random_pool(rng, int(rng.integers(3, 13)), xs)
            spec = MetricSpec("hellinger", 2.0, xs)
            eps = float(rng.uniform(0.05, 0.5))
            pack_2eps = len(brute_max_pack(pool, spec, 2 * eps))
            cover = len(brute_min_cover(pool, spec, eps).members)
            pack_eps = len(brute_max_pack(pool, spec, eps))
            assert pack_2eps <= cover <= pack_eps
            greedy = greedy_pack_cover(pool, spec, eps)
            assert cover <= len(greedy.members) <= pack_eps

    def test_local_entropy_sandwich(self):
        rng = np.random.default_rng(4)
        for trial in range(30):
            n = int(rng.integers(2, 7))
            xs = rng.uniform(-1, 1, n)
            pool = _random_pool(rng, int(rng.integers(3, 11)), xs)
            spec = MetricSpec("hellinger", 2.0, xs)
            eps = float(rng.uniform(0.05, 0.5))
            h_loc = max(len(brute_max_local_pack(pool, i, spec, eps)) for i in range(len(pool)))
            h_half = len(brute_max_pack(pool, spec, eps / 2.0))
            h_full = len(brute_max_pack(pool, spec, eps))
            #  H_pack(eps/2) - H_pack(eps) <= H_loc(eps) <= H_pack(eps/2)
            assert math.log(h_half) - math.log(h_full) <= math.log(h_loc) + 1e-12
            assert h_loc <= h_half

    def test_brute_force_capacity(self):
        rng = np.random.default_rng(5)
        xs = rng.uniform(-1, 1, 4)
        pool = _random_pool(rng, 21, xs)
        with pytest.raises(CapacityError):
            brute_min_cover(pool, MetricSpec("hellinger", 2.0, xs), 0.1)

    def test_empty_pool(self):
        spec = MetricSpec("hellinger", 2.0, np.array([0.0]))
        assert brute_max_pack([], spec, 0.5) == []
        assert brute_min_cover([], spec, 0.5).members == ()


class TestLocalPack:
    def test_singleton_pool(self):
        xs = np.array([0.0, 1.0])
        f = CLS.member(0.5, 0.3, 0.7)
        out = local_pack([f], f, MetricSpec("hellinger", 2.0, xs), 0.5)
        assert out == [f]

    def test_everything_far_keeps_reference_only(self):
        xs = np.array([0.0, 1.0])
        f = CLS.member(-np.inf, 0.5, 0.5)
        g = CLS.member(-np.inf, 0.99, 0.99)
        out = local_pack([f, g], f, MetricSpec("hellinger", 2.0, xs), 1e-6)
        assert out == [f]


class TestEntropyProfile:
    def test_finite_pool_extremes(self):
        rng = np.random.default_rng(6)
        xs = rng.uniform(-1, 1, 5)
        pool = _random_pool(rng, 7, xs)
        prof = profile_from_pool(pool, "hellinger", xs, [1e-9, 10.0])
        assert prof.log_cover[0] == pytest.approx(math.log(7))
        assert prof.log_cover[-1] == 0.0

    def test_monotone_nonincreasing(self):
        rng = np.random.default_rng(7)
        xs = rng.uniform(-1, 1, 6)
        pool = _random_pool(rng, 10, xs)
        prof = profile_from_pool(pool, "hellinger", xs, np.linspace(0.01, 1.0, 12))
        assert np.all(np.diff(prof.log_cover) <= 1e-12)

    def test_bump_grid_full_entropy_below_flip_scale(self):
        # the 2^M on/off patterns are pairwise separated; below the
        # single-cell flip scale the cover is the whole pool: M log 2
        spec = BumpGridClass(cells=3, gamma=1.0)
        pool = spec.discretize()
        xs = np.linspace(1.0 / 12, 11.0 / 12, 6)  # two points per cell
        mspec = MetricSpec("hellinger", 2.0, xs)
        flip = min(
            empirical_distance(pool[i], pool[j], mspec)
            for i, j in itertools.combinations(range(len(pool)), 2)
        )
        prof = profile_from_pool(pool, "hellinger", xs, [flip * 0.5])
        assert prof.log_cover[0] == pytest.approx(3 * math.log(2), abs=1e-12)
        assert len(brute_max_pack(pool, mspec, flip * 0.5)) == 8

    def test_entropy_profile_of_class(self):
        rng = np.random.default_rng(8)
        prof = entropy_profile(
            BumpGridClass(cells=3, gamma=1.0), 12, np.geomspace(0.005, 1.0, 8), rng, configs=2
        )
        assert prof.sup_attained is False
        assert np.all(np.diff(prof.log_cover) <= 1e-12)
        assert "epsilon,log_cover" in prof.to_csv()


class TestCriticalRadius:
    def test_power_law_closed_form(self):
        # H(eps) = eps^-2  =>  eps_n = n^(-1/4)
        eps = np.geomspace(1e-3, 1.0, 200)
        prof = EntropyProfile(eps, eps**-2.0)
        for n in (10, 100, 10_000):
            assert critical_radius(prof, n) == pytest.approx(n ** (-0.25), rel=1e-6)

    def test_constant_entropy(self):
        eps = np.geomspace(1e-3, 1.0, 50)
        prof = EntropyProfile(eps, np.full(len(eps), 4.0))
        assert critical_radius(prof, 100) == pytest.approx(0.2, rel=1e-9)

    def test_logarithmic_entropy_residual(self):
        eps = np.geomspace(1e-4, 0.999, 400)
        prof = EntropyProfile(eps, 2.0 * np.log(1.0 / eps))
        r = critical_radius(prof, 100)
        assert abs(prof.value(r) - 100 * r * r) <= 1e-9

    def test_out_of_range(self):
        eps = np.geomspace(0.5, 1.0, 10)
        prof = EntropyProfile(eps, np.full(10, 1e-12))
        with pytest.raises(DomainError):
            critical_radius(prof, 10_000_000)


class TestRademacherLocal:
    def test_zero_function_family(self):
        rng = np.random.default_rng(9)
        est, se = rademacher_local(np.zeros((1, 8)), 1.0, 64, rng)
        assert est == 0.0

    def test_single_function_bounds(self):
        rng = np.random.default_rng(10)
        h = np.abs(rng.normal(size=10))
        est, se = rademacher_local(h[None, :], np.inf, 256, rng)
        assert est <= h.max() + 1e-12

    def test_against_exact_sign_enumeration(self):
        rng = np.random.default_rng(11)
        V = rng.uniform(0.0, 1.0, size=(5, 4))
        exact = 0.0
        for signs in itertools.product((-1.0, 1.0), repeat=4):
            exact += np.max(V @ np.asarray(signs)) / 4.0
        exact /= 16.0
        est, se = rademacher_local(V, np.inf, 4000, rng)
        assert abs(est - exact) <= 3.0 * max(se, 1e-12)

    def test_localization_filters_rows(self):
        big = np.full((1, 4), 10.0)
        small = np.full((1, 4), 0.1)
        V = np.vstack([big, small])
        rng = np.random.default_rng(12)
        est_all, _ = rademacher_local(V, np.inf, 200, rng)
        est_loc, _ = rademacher_local(V, 0.5, 200, np.random.default_rng(12))
        assert est_loc < est_all


class TestLocalizationRadius:
    def test_finite_class_formula(self):
        v = localization_radius("finite", 1000, card=8)
        assert v == pytest.approx(289.0 * math.log(8) / 1000.0, rel=1e-12)
        assert v == pytest.approx(0.601, abs=5e-4)

    def test_singleton_class_is_zero(self):
        assert localization_radius("finite", 50, card=1) == 0.0

    def test_parametric_formula_and_precondition(self):
        n, p, C = 4096, 2.0, 1.0
        v = localization_radius("parametric", n, p=p, C=C)
        assert v == pytest.approx((289 * p / n) * math.log(4 * C * math.sqrt(n) / (17 * math.sqrt(p))), rel=1e-12)
        with pytest.raises(DomainError):
            localization_radius("parametric", 100, p=2.0, C=1.0)

    def test_fixed_point_closed_form(self):
        # phi(r) = sqrt(r)/2 has largest fixed point 1/4
        r = solve_fixed_point(lambda r: math.sqrt(r) / 2.0)
        assert r == pytest.approx(0.25, abs=1e-9)
        assert abs(r - math.sqrt(r) / 2.0) <= 1e-10

    def test_dudley_variant_positive(self):
        eps = np.geomspace(1e-3, 1.0, 100)
        prof = EntropyProfile(eps, 3.0 * np.log(1 / eps))
        v = localization_radius("dudley", 256, profile=prof)
        assert v > 0
