"""Aggregation, maximum-likelihood, sequential, and adaptive estimators."""

import json
import math

import numpy as np
import pytest
from scipy.special import logsumexp

from condest.densities import Bernoulli
from condest.errors import DegenerateFitError, PreconditionError
from condest.estimators import (
    MixturePredictor,
    estimator_to_json,
    fit_adaptive,
    fit_minimax,
    fit_mle,
    fit_sieve_mle,
    fit_smoothed_mle,
    loglik_sums,
    nu_loglik_matrix,
    sequential_predict,
    theoretical_rate,
)
from condest.models import BernoulliThresholdClass, GaussianLinearClass
from condest.reference import binary_uniform_reference, cauchy_reference

CLS = BernoulliThresholdClass()
BREF = binary_uniform_reference()


def _const(mean):
    """Constant-mean member of the threshold class (threshold at -inf)."""
    return CLS.member(-np.inf, mean, mean)


class TestFitMinimax:
    def test_singleton_cover_weights(self):
        pool = [_const(0.3)]
        xs = np.zeros(8)
        ys = np.array([1, 0, 1, 1, 0, 1, 0, 0], dtype=float)
        est = fit_minimax(pool, xs, ys, eps=2.0, alpha=0.25, ref=BREF)
        assert len(est.cover.members) == 1
        np.testing.assert_allclose(np.exp(est.log_weights), 1.0, atol=1e-12)
        np.testing.assert_allclose(est.cesaro, [1.0], atol=1e-12)
        # prediction is the single smoothed member
        q = est.predict(0.0)
        expect = (0.3 + 0.25 * 0.5) / 1.25
        assert q.mean == pytest.approx(expect, abs=1e-12)

    def test_two_member_hand_recursion(self):
        # n = 1 aggregation round: W(g1) = (1/2)(1/2 + L1/(L1+L2)) where
        # L_g is the smoothed likelihood at the observed point
        alpha = 0.125
        pool = [_const(0.3), _const(0.7)]
        xs = np.array([0.0, 0.0])
        ys = np.array([0.0, 1.0])  # second point is the aggregation round
        est = fit_minimax(pool, xs, ys, eps=1e-6, alpha=alpha, ref=BREF, force=True)
        assert len(est.cover.members) == 2
        sm = [(0.3 + alpha * 0.5) / (1 + alpha), (0.7 + alpha * 0.5) / (1 + alpha)]
        L = [m for m in sm]  # likelihood of y = 1 is the smoothed mean
        expect_w1 = 0.5 * (0.5 + L[0] / (L[0] + L[1]))
        assert est.cesaro[0] == pytest.approx(expect_w1, abs=1e-12)

    def test_posterior_rows_normalized(self):
        rng = np.random.default_rng(0)
        pool = [_const(m) for m in (0.2, 0.5, 0.8)]
        xs = rng.uniform(-1, 1, 40)
        ys = (rng.random(40) < 0.5).astype(float)
        est = fit_minimax(pool, xs, ys, eps=0.5, alpha=0.05, ref=BREF)
        sums = np.exp(est.log_weights).sum(axis=1)
        np.testing.assert_allclose(sums, 1.0, atol=1e-10)
        np.testing.assert_allclose(np.exp(est.log_weights[0]), 1.0 / len(est.cover.members), atol=1e-12)
        assert est.cesaro.sum() == pytest.approx(1.0, abs=1e-10)

    def test_telescoping_product_identity(self):
        # prod_t posterior-mixture likelihood equals the uniform mixture of
        # full-product likelihoods (checked in log space)
        rng = np.random.default_rng(1)
        pool = [_const(m) for m in (0.15, 0.4, 0.6, 0.85)]
        n = 24
        xs = rng.uniform(-1, 1, 2 * n)
        ys = (rng.random(2 * n) < 0.4).astype(float)
        alpha = 1.0 / n
        est = fit_minimax(pool, xs, ys, eps=1e-9, alpha=alpha, ref=BREF, force=True)
        ll = nu_loglik_matrix(list(est.cover.members), xs[n:], ys[n:], BREF, alpha)
        lhs = sum(float(logsumexp(est.log_weights[t] + ll[:, t])) for t in range(n))
        rhs = float(logsumexp(ll.sum(axis=1))) - math.log(len(est.cover.members))
        assert lhs == pytest.approx(rhs, abs=1e-8)

    def test_predictive_lower_bound(self):
        rng = np.random.default_rng(2)
        pool = [_const(m) for m in (0.05, 0.95)]
        xs = rng.uniform(-1, 1, 20)
        ys = np.ones(20)
        alpha = 0.1
        est = fit_minimax(pool, xs, ys, eps=0.5, alpha=alpha, ref=BREF)
        # nu-density of the predictive at any (x, y) >= alpha/(K(1+alpha))
        floor = alpha / (1.0 * (1 + alpha))
        for x in (-0.5, 0.0, 0.5):
            q = est.predict(x)
            for y in (0.0, 1.0):
                nu_dens = math.exp(q.logpdf(y) - BREF.log_weight(y))
                assert nu_dens >= floor - 1e-12

    def test_scale_precondition(self):
        pool = [_const(0.3), _const(0.7)]
        xs = np.zeros(8)
        ys = np.zeros(8)
        with pytest.raises(PreconditionError):
            fit_minimax(pool, xs, ys, eps=0.1, alpha=0.1, ref=BREF)  # 0.1 < 1/2

    def test_mixture_predictor_average(self):
        # equal-weight mixture of Bernoulli(0.2) and Bernoulli(0.8) smoothed
        # at alpha = 0 is Bernoulli(0.5)
        pred = MixturePredictor((_const(0.2), _const(0.8)), (0.0, 0.0), (0.5, 0.5), BREF)
        assert pred.mean_on(np.array([0.0]))[0] == pytest.approx(0.5, abs=1e-12)
        q = pred.predict(0.0)
        assert math.exp(q.logpdf(1.0)) == pytest.approx(0.5, abs=1e-12)


class TestMLE:
    def test_empirical_frequency_maximizes(self):
        # constant-covariate Bernoulli sample: grid MLE picks the grid theta
        # closest in likelihood to the empirical frequency (brute force)
        rng = np.random.default_rng(3)
        grid = np.linspace(0.0, 1.0, 21)
        pool = [_const(m) for m in grid]
        xs = np.zeros(40)
        ys = (rng.random(40) < 0.3).astype(float)
        best = fit_mle(pool, xs, ys, BREF)
        ll = loglik_sums(pool, xs, ys, BREF)
        assert best is pool[int(np.argmax(ll))]
        freq = ys.mean()
        brute = max(grid, key=lambda m: freq * math.log(m + 1e-300) + (1 - freq) * math.log(1 - m + 1e-300))
        assert best.theta0 == pytest.approx(brute, abs=1e-12)

    def test_empty_sample_tie_break(self):
        pool = [_const(0.2), _const(0.8)]
        assert fit_mle(pool, np.array([]), np.array([]), BREF) is pool[0]

    def test_degenerate_likelihood_raises(self):
        pool = [_const(0.0)]
        with pytest.raises(DegenerateFitError):
            fit_mle(pool, np.zeros(3), np.ones(3), BREF)

    def test_reorder_invariance_up_to_ties(self):
        rng = np.random.default_rng(4)
        pool = [_const(m) for m in (0.1, 0.35, 0.6, 0.9)]
        xs = rng.uniform(-1, 1, 30)
        ys = (rng.random(30) < 0.6).astype(float)
        a = fit_mle(pool, xs, ys, BREF)
        b = fit_mle(pool[::-1], xs, ys, BREF)
        assert a == b

    def test_smoothed_mle_reduces_and_bounds(self):
        rng = np.random.default_rng(5)
        pool = [_const(m) for m in (0.0, 0.5, 1.0)]
        xs = np.zeros(10)
        ys = np.ones(10)
        raw = fit_mle(pool, xs, ys, BREF)
        assert raw.theta0 == 1.0
        sm = fit_smoothed_mle(pool, xs, ys, BREF)  # alpha = 1/n
        q = sm.evaluate(0.0)
        # smoothed predictive has finite KL against any truth
        from condest.divergences import kl

        assert math.isfinite(kl(Bernoulli(0.5), q, BREF).value)
        assert fit_smoothed_mle(pool, xs, ys, BREF, alpha=0.0) is raw

    def test_sieve_output_within_cover(self):
        # the sieve MLE returns a cover member, so its loss is at least the
        # best cover-member approximation error by construction
        rng = np.random.default_rng(12)
        pool = [_const(m) for m in (0.1, 0.3, 0.5, 0.7, 0.9)]
        xs = rng.uniform(-1, 1, 40)
        ys = (rng.random(40) < 0.45).astype(float)
        from condest.entropy import MetricSpec, greedy_pack_cover
        from condest.divergences import ber_kl

        eps = 0.3
        cover = greedy_pack_cover(pool, MetricSpec("hellinger", 2.0, xs), eps, ref=BREF)
        fitted = fit_sieve_mle(pool, xs, ys, BREF, eps)
        assert fitted in cover.members
        loss = float(ber_kl(0.45, fitted.theta0))
        best = min(float(ber_kl(0.45, m.theta0)) for m in cover.members)
        assert loss >= best - 1e-15

    def test_sieve_mle_extremes(self):
        rng = np.random.default_rng(6)
        pool = [_const(m) for m in (0.1, 0.5, 0.9)]
        xs = rng.uniform(-1, 1, 30)
        ys = (rng.random(30) < 0.5).astype(float)
        assert fit_sieve_mle(pool, xs, ys, BREF, 1e-9) == fit_mle(pool, xs, ys, BREF)
        assert fit_sieve_mle(pool, xs, ys, BREF, 5.0) is pool[0]


class TestSequential:
    def _pool_supplier(self, xs_prev):
        return [_const(m) for m in (0.25, 0.5, 0.75)]

    def test_first_round_is_uniform_reference(self):
        xs = np.array([0.3])
        ys = np.array([1.0])
        out = sequential_predict(xs, ys, self._pool_supplier, BREF)
        assert out.per_round_lognu[0] == pytest.approx(-math.log(BREF.total_mass), abs=1e-12)
        assert out.boundaries == (1,)

    def test_epoch_boundaries(self):
        xs = np.zeros(11)
        ys = np.zeros(11)
        out = sequential_predict(xs, ys, self._pool_supplier, BREF, eps_rule=lambda n: 0.5)
        assert out.boundaries == (1, 2, 4, 8)

    def test_singleton_cover_constant_epoch_predictions(self):
        xs = np.zeros(7)
        ys = np.array([1, 0, 1, 1, 0, 0, 1], dtype=float)
        out = sequential_predict(xs, ys, lambda _: [_const(0.5)], BREF, eps_rule=lambda n: 2.0)
        # rounds 4..7 form one epoch with one cover member: equal lognu
        vals = out.per_round_lognu[3:]
        assert np.allclose(vals, vals[0])

    def test_predictions_measurable_in_prior_data(self):
        rng = np.random.default_rng(7)
        xs = rng.uniform(-1, 1, 16)
        ys = (rng.random(16) < 0.5).astype(float)
        out1 = sequential_predict(xs, ys, self._pool_supplier, BREF, eps_rule=lambda n: 0.5)
        ys2 = ys.copy()
        ys2[10:] = 1.0 - ys2[10:]
        out2 = sequential_predict(xs, ys2, self._pool_supplier, BREF, eps_rule=lambda n: 0.5)
        np.testing.assert_allclose(out1.per_round_lognu[:10], out2.per_round_lognu[:10], atol=0)

    def test_cesaro_weights_sum_to_one(self):
        rng = np.random.default_rng(8)
        xs = rng.uniform(-1, 1, 32)
        ys = (rng.random(32) < 0.4).astype(float)
        out = sequential_predict(xs, ys, self._pool_supplier, BREF, eps_rule=lambda n: 0.5)
        assert sum(out.cesaro.weights) == pytest.approx(1.0, abs=1e-10)


class TestAdaptive:
    def test_single_model_reduces_to_minimax(self):
        rng = np.random.default_rng(9)
        n3 = 12
        xs = rng.uniform(-1, 1, 3 * n3)
        ys = (rng.random(3 * n3) < 0.4).astype(float)
        pool = [_const(m) for m in (0.3, 0.5, 0.7)]
        ad = fit_adaptive([lambda _: pool], [1.0], xs, ys, BREF, eps_rule=lambda n: 0.5, alpha=0.05)
        est = fit_minimax(pool, xs[: 2 * n3], ys[: 2 * n3], eps=0.5, alpha=0.05, ref=BREF)
        np.testing.assert_allclose(ad.outer_cesaro, [1.0], atol=1e-12)
        np.testing.assert_allclose(ad.per_model[0].cesaro, est.cesaro, atol=1e-12)

    def test_identical_models_match_single(self):
        rng = np.random.default_rng(10)
        n3 = 10
        xs = rng.uniform(-1, 1, 3 * n3)
        ys = (rng.random(3 * n3) < 0.6).astype(float)
        pool = [_const(m) for m in (0.4, 0.6)]
        two = fit_adaptive([lambda _: pool, lambda _: pool], [0.5, 0.5], xs, ys, BREF,
                           eps_rule=lambda n: 0.5, alpha=0.1)
        one = fit_adaptive([lambda _: pool], [1.0], xs, ys, BREF, eps_rule=lambda n: 0.5, alpha=0.1)
        x0 = 0.2
        np.testing.assert_allclose(
            two.predictor().mean_on(np.array([x0])), one.predictor().mean_on(np.array([x0])), atol=1e-12
        )

    def test_zero_prior_rejected(self):
        from condest.errors import ConfigError

        with pytest.raises(ConfigError):
            fit_adaptive([lambda _: [_const(0.5)]], [0.0], np.zeros(9), np.zeros(9), BREF)


class TestTheoreticalRate:
    def test_nonparametric_upper_spot(self):
        # p = 2, C = 1, B = K = 1, n = 1e4: sqrt(log n) / 100
        v = theoretical_rate("upper-nonparametric", 10_000, p=2.0, C=1.0, B=1.0, K=1.0)
        assert v == pytest.approx(math.sqrt(math.log(10_000)) * 1e-2, rel=1e-12)

    def test_mle_middle_case(self):
        v = theoretical_rate("mle-upper-nonparametric", 10_000, p=2.0, B=1.0, K=1.0)
        assert v == pytest.approx(math.log(10_000) * 1e-2, rel=1e-12)

    def test_exponent_shrinks_with_p(self):
        vals = [theoretical_rate("upper-nonparametric", 4096, p=p) for p in (1.0, 2.0, 8.0, 64.0)]
        # larger p means slower decay, so the value grows toward n^0
        assert all(a < b for a, b in zip(vals, vals[1:]))


class TestGaussianPaths:
    def test_loglik_matrix_matches_scalar(self):
        cls = GaussianLinearClass()
        cref = cauchy_reference()
        pool = [cls.member([w]) for w in (-0.5, 0.5)]
        xs = np.array([0.3, -0.7])
        ys = np.array([0.1, 1.2])
        alpha = 0.2
        ll = nu_loglik_matrix(pool, xs, ys, cref, alpha)
        from condest.densities import smooth

        for g, m in enumerate(pool):
            for t in range(2):
                q = smooth(m.evaluate(xs[t]), alpha, cref)
                expect = q.logpdf(ys[t]) - cref.log_weight(ys[t])
                assert ll[g, t] == pytest.approx(expect, abs=1e-10)

    def test_serialization_round_trip(self):
        rng = np.random.default_rng(11)
        pool = [_const(m) for m in (0.3, 0.7)]
        xs = rng.uniform(-1, 1, 8)
        ys = (rng.random(8) < 0.5).astype(float)
        est = fit_minimax(pool, xs, ys, eps=0.6, alpha=0.25, ref=BREF)
        doc = json.loads(estimator_to_json(est))
        assert doc["alpha"] == 0.25
        assert sum(doc["cesaro_weights"]) == pytest.approx(1.0, abs=1e-9)
        assert all("class_tag" in m for m in doc["members"])


class TestPosteriorAgainstDirectProducts:
    def test_log_recursion_matches_direct_products(self):
        # w_t(g) computed by the log-space recursion equals the normalized
        # direct product of smoothed likelihoods (n <= 30)
        rng = np.random.default_rng(13)
        pool = [_const(m) for m in (0.2, 0.45, 0.7)]
        n = 30
        xs = rng.uniform(-1, 1, 2 * n)
        ys = (rng.random(2 * n) < 0.5).astype(float)
        alpha = 1.0 / n
        est = fit_minimax(pool, xs, ys, eps=1e-9, alpha=alpha, ref=BREF, force=True)
        ll = nu_loglik_matrix(list(est.cover.members), xs[n:], ys[n:], BREF, alpha)
        lik = np.exp(ll)
        direct = np.ones(len(est.cover.members)) / len(est.cover.members)
        for t in range(n):
            direct = direct * lik[:, t]
            direct = direct / direct.sum()
            np.testing.assert_allclose(np.exp(est.log_weights[t + 1]), direct, atol=1e-8)


class TestMultivariateLattice:
    def test_two_dimensional_pool_and_fit(self):
        import math

        from condest.harness import expected_losses, sample_covariates, sample_responses

        cls = GaussianLinearClass(dim=2, x_bound=1.0, w_bound=1.0, sigma=1.0)
        pool = cls.discretize(0.5 / (2 * math.sqrt(2)))
        assert all(np.linalg.norm(m.w) <= 1.0 + 1e-12 for m in pool)
        truth = cls.member([0.5, 0.0])
        rng = np.random.default_rng(21)
        xs = sample_covariates(cls.default_covariates(), 128, rng)
        ys = sample_responses(truth, xs, rng)
        est = fit_minimax(pool, xs, ys, ref=cls.ref)
        klv, hv, _ = expected_losses(truth, est, cls.default_covariates(), cls.ref, rng, 300)
        assert 0.0 <= klv < 1.0
