"""Estimators: cover aggregation, maximum likelihood, sequential, adaptive.

The central estimator splits its sample in half, builds an empirical
(Hellinger, 2) cover of the candidate pool on the first half's covariates,
and aggregates the alpha-smoothed cover members over the second half with
multiplicative posterior updates under a uniform prior,

    w_t(g)  propto  w_{t-1}(g) * [T_alpha g(x_t)](y_t),

finally averaging the posteriors over rounds t = 0..n (the per-round
mixtures share their components, so the averaged mixture is just the
mixture with averaged weights).  All likelihood arithmetic is in log space
with log-sum-exp normalization.

The sequential variant replaces the half split with doubling epochs: rounds
are 1-indexed, epoch m covers rounds [2^(m-1), 2^m - 1] (the last epoch is
truncated), the cover for epoch m+1 is built from epoch m's covariates
only, and round 1 predicts the normalized reference 1/K.

The adaptive estimator splits in thirds: covers from the first third,
per-model aggregation on the second, and a posterior over models (with a
user prior) aggregated on the final third.

Everything here is deterministic given (pool, sample); fitted objects are
immutable and safe to share.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import logsumexp

from .densities import Mixture, ReferenceUniform, smooth
from .entropy import EmpiricalCover, MetricSpec, PoolGeometry, critical_radius, greedy_pack_cover, profile_from_pool
from .errors import ConfigError, DegenerateFitError, DomainError, PreconditionError
from .models import pool_means

__all__ = [
    "FittedEstimator",
    "MixturePredictor",
    "SmoothedModel",
    "EpochPredictor",
    "AdaptiveEstimator",
    "default_scale",
    "fit_minimax",
    "predict",
    "loglik_sums",
    "fit_mle",
    "fit_smoothed_mle",
    "fit_sieve_mle",
    "sequential_predict",
    "fit_adaptive",
    "theoretical_rate",
    "nu_loglik_matrix",
    "estimator_to_json",
]


# ---------------------------------------------------------------------------
# likelihood matrices
# ---------------------------------------------------------------------------


def nu_loglik_matrix(models, xs, ys, ref, alpha: float) -> np.ndarray:
    """log nu-densities of the alpha-smoothed models at the sample points.

    Entry [g, t] = log [T_alpha g(x_t)](y_t) with respect to nu.  Uses the
    family parameter matrices when available; the smoothed nu-density is
    (nu-density + alpha/K)/(1 + alpha) with K folded in through the weights.
    """
    xs = np.atleast_1d(xs)
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    try:
        kind, mat, extra = pool_means(models, xs)
    except ConfigError:
        kind = None
    if kind == "bernoulli-mean":
        u1 = ref.weights[1] / ref.total_mass if hasattr(ref, "weights") else 0.5
        sm = (mat + alpha * u1) / (1.0 + alpha)
        from .divergences import ber_logpmf

        return ber_logpmf(sm, ys[None, :]) - ref.log_weight(ys)[None, :]
    if kind in ("gaussian-mean", "poisson-rate", "gamma-scale"):
        logw = np.asarray(ref.log_weight(ys), dtype=float)
        if kind == "gaussian-mean":
            sd = extra
            z = (ys[None, :] - mat) / sd
            base = -0.5 * z * z - math.log(sd) - 0.5 * math.log(2 * math.pi)
        elif kind == "poisson-rate":
            from scipy.special import gammaln

            base = ys[None, :] * np.log(mat) - mat - gammaln(ys + 1.0)[None, :]
        else:
            from scipy.special import gammaln

            shape = extra
            base = (
                (shape - 1.0) * np.log(ys)[None, :]
                - ys[None, :] / mat
                - gammaln(shape)
                - shape * np.log(mat)
            )
        nu_dens = np.exp(base - logw[None, :])
        if alpha == 0.0:
            return base - logw[None, :]
        return np.log((nu_dens + alpha / ref.total_mass) / (1.0 + alpha))
    out = np.empty((len(models), len(ys)))
    for g, m in enumerate(models):
        for t, (x, y) in enumerate(zip(xs, ys)):
            q = smooth(m.evaluate(float(x) if np.ndim(x) == 0 else x), alpha, ref)
            out[g, t] = q.logpdf(y) - ref.log_weight(y)
    return out


def loglik_sums(pool, xs, ys, ref) -> np.ndarray:
    """Total log likelihood of every pool member (natural base measure)."""
    if len(np.atleast_1d(xs)) == 0:
        return np.zeros(len(pool))
    ll = nu_loglik_matrix(pool, xs, ys, ref, 0.0)
    logw = np.asarray(ref.log_weight(np.atleast_1d(np.asarray(ys, dtype=float))), dtype=float)
    return ll.sum(axis=1) + logw.sum()


# ---------------------------------------------------------------------------
# fitted objects
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MixturePredictor:
    """A conditional density of the form sum_k w_k T_{alpha_k} g_k(x), with
    an optional reference-uniform part; shared by every aggregated object."""

    models: tuple  # conditional models; None entries stand for nu/K
    alphas: tuple
    weights: tuple
    ref: object

    def predict(self, x) -> Mixture:
        comps, wts = [], []
        for m, a, w in zip(self.models, self.alphas, self.weights):
            if w <= 0:
                continue
            comps.append(ReferenceUniform(self.ref) if m is None else smooth(m.evaluate(x), a, self.ref))
            wts.append(w)
        if len(comps) == 1:
            return comps[0]
        return Mixture(tuple(comps), tuple(np.asarray(wts) / np.sum(wts)))

    def mean_on(self, xs):
        """Predictive Bernoulli mean at each covariate (binary classes)."""
        xs = np.atleast_1d(xs)
        u1 = self.ref.weights[1] / self.ref.total_mass
        out = np.zeros(len(xs))
        for m, a, w in zip(self.models, self.alphas, self.weights):
            if m is None:
                out += w * u1
            else:
                out += w * (m.mean(xs) + a * u1) / (1.0 + a)
        return out

    def lognu_on(self, xs, ys) -> np.ndarray:
        """log predictive nu-density at the sample points."""
        xs = np.atleast_1d(xs)
        ys = np.atleast_1d(np.asarray(ys, dtype=float))
        real = [(m, a, w) for m, a, w in zip(self.models, self.alphas, self.weights) if m is not None]
        uni_w = sum(w for m, _, w in zip(self.models, self.alphas, self.weights) if m is None)
        pieces = []
        if real:
            groups: dict[float, list] = {}
            for m, a, w in real:
                groups.setdefault(a, []).append((m, w))
            for a, pairs in groups.items():
                ll = nu_loglik_matrix([m for m, _ in pairs], xs, ys, self.ref, a)
                lw = np.log([w for _, w in pairs])
                pieces.append(logsumexp(ll + lw[:, None], axis=0))
        if uni_w > 0:
            pieces.append(np.full(len(ys), math.log(uni_w) - math.log(self.ref.total_mass)))
        return logsumexp(np.stack(pieces), axis=0) if len(pieces) > 1 else pieces[0]


@dataclass(frozen=True)
class FittedEstimator:
    cover: EmpiricalCover
    alpha: float
    ref: object
    log_weights: np.ndarray  # (n+1, |G|) posterior log weights, w_0 uniform
    cesaro: np.ndarray  # (|G|,) round-averaged posterior weights

    @property
    def predictor(self) -> MixturePredictor:
        g = self.cover.members
        return MixturePredictor(tuple(g), (self.alpha,) * len(g), tuple(self.cesaro), self.ref)

    def predict(self, x):
        return self.predictor.predict(x)


@dataclass(frozen=True)
class SmoothedModel:
    """A conditional model post-composed with alpha-smoothing."""

    base: object
    alpha: float
    ref: object

    @property
    def class_tag(self):
        return getattr(self.base, "class_tag", "model") + "+smoothed"

    def evaluate(self, x):
        return smooth(self.base.evaluate(x), self.alpha, self.ref)

    @property
    def predictor(self) -> MixturePredictor:
        return MixturePredictor((self.base,), (self.alpha,), (1.0,), self.ref)


@dataclass(frozen=True)
class EpochPredictor:
    boundaries: tuple  # epoch start rounds (1-indexed)
    covers: tuple  # per epoch >= 2: the cover aggregated within it
    alphas: tuple
    per_round_lognu: np.ndarray  # log predictive nu-density at each round
    cesaro: MixturePredictor  # round-averaged predictor (online-to-batch)


@dataclass(frozen=True)
class AdaptiveEstimator:
    per_model: tuple  # FittedEstimator per candidate model
    prior: tuple
    outer_log_weights: np.ndarray  # (n3+1, M)
    outer_cesaro: np.ndarray

    def predictor(self) -> MixturePredictor:
        models, alphas, weights = [], [], []
        for W, est in zip(self.outer_cesaro, self.per_model):
            for g, a, w in zip(est.predictor.models, est.predictor.alphas, est.predictor.weights):
                models.append(g)
                alphas.append(a)
                weights.append(W * w)
        ref = self.per_model[0].ref
        return MixturePredictor(tuple(models), tuple(alphas), tuple(weights), ref)

    def predict(self, x):
        return self.predictor().predict(x)


# ---------------------------------------------------------------------------
# scale policy
# ---------------------------------------------------------------------------


def default_scale(pool, xs_cover, ref, n_agg: int, grid=None) -> float:
    """Default cover scale: max of (1 + 1e-6)/sqrt(n_agg) and the critical
    radius of the measured pool entropy profile on the cover covariates."""
    floor = (1.0 + 1e-6) / math.sqrt(n_agg)
    if len(pool) <= 1:
        return floor
    if grid is None:
        # no need to resolve the profile below the floor: the policy takes
        # the max of the floor and the measured critical radius
        grid = np.geomspace(0.98 * floor, 2.0, 8)
    prof = profile_from_pool(pool, "hellinger", xs_cover, grid, ref=ref)
    try:
        crit = critical_radius(prof, n_agg)
    except DomainError:
        crit = 0.0
    return max(floor, crit)


# ---------------------------------------------------------------------------
# batch estimators
# ---------------------------------------------------------------------------


def _posterior_rounds(loglik: np.ndarray):
    """Run the multiplicative update; returns (n+1, G) log weights."""
    G, n = loglik.shape
    logw = np.empty((n + 1, G))
    logw[0] = -math.log(G)
    cur = logw[0]
    for t in range(n):
        cur = cur + loglik[:, t]
        cur = cur - logsumexp(cur)
        logw[t + 1] = cur
    return logw


def fit_minimax(pool, xs, ys, eps: float | None = None, alpha: float | None = None, ref=None,
                force: bool = False) -> FittedEstimator:
    """Cover-aggregation estimator on a sample of size 2n.

    The first half of the covariates builds the empirical (H, 2) cover of
    the pool at scale eps; the second half is aggregated against the
    alpha-smoothed cover.  Defaults: eps by :func:`default_scale`, alpha =
    1/n for the aggregation half.  Requires eps > 1/sqrt(n) unless ``force``.
    """
    if not pool:
        raise ConfigError("empty candidate pool")
    xs = np.atleast_1d(xs)
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    n_cov = len(xs) // 2
    xs_cov, xs_agg = xs[:n_cov], xs[n_cov:]
    ys_agg = ys[n_cov:]
    n_agg = len(xs_agg)
    if alpha is None:
        alpha = 1.0 / max(n_agg, 1)
    if alpha <= 0:
        raise PreconditionError("smoothing level alpha must be positive")
    if eps is None:
        eps = default_scale(pool, xs_cov, ref, n_agg)
    if eps <= 1.0 / math.sqrt(n_agg) and not force:
        raise PreconditionError(f"cover scale {eps:.4g} must exceed 1/sqrt(n) = {1/math.sqrt(n_agg):.4g}")
    cover = greedy_pack_cover(pool, MetricSpec("hellinger", 2.0, xs_cov), eps, ref=ref)
    loglik = nu_loglik_matrix(list(cover.members), xs_agg, ys_agg, ref, alpha)
    logw = _posterior_rounds(loglik)
    cesaro = np.exp(logw).mean(axis=0)
    cesaro = cesaro / cesaro.sum()
    return FittedEstimator(cover, alpha, ref, logw, cesaro)


def predict(est, x):
    """Predictive response density at covariate x (exact weighted mixture)."""
    return est.predict(x)


def fit_mle(pool, xs, ys, ref):
    """Grid maximum likelihood: argmax of the sample log likelihood over the
    pool, ties resolved toward the lowest pool index."""
    if not pool:
        raise ConfigError("empty candidate pool")
    ll = loglik_sums(pool, xs, ys, ref)
    if np.all(np.isneginf(ll)):
        raise DegenerateFitError("every pool member has zero likelihood on this sample")
    return pool[int(np.argmax(ll))]


def fit_smoothed_mle(pool, xs, ys, ref, alpha: float | None = None) -> SmoothedModel:
    """MLE followed by alpha-smoothing; alpha defaults to 1/n."""
    if alpha is None:
        alpha = 1.0 / max(len(np.atleast_1d(xs)), 1)
    base = fit_mle(pool, xs, ys, ref)
    return SmoothedModel(base, alpha, ref) if alpha > 0 else base


def fit_sieve_mle(pool, xs, ys, ref, eps: float):
    """MLE restricted to a greedy eps-cover built on the sample covariates."""
    cover = greedy_pack_cover(pool, MetricSpec("hellinger", 2.0, np.atleast_1d(xs)), eps, ref=ref)
    return fit_mle(list(cover.members), xs, ys, ref)


# ---------------------------------------------------------------------------
# sequential (epoch-doubling) prediction
# ---------------------------------------------------------------------------


def sequential_predict(xs, ys, pool_supplier, ref, eps_rule=None, alpha_rule=None) -> EpochPredictor:
    """Per-round predictions with exponentially doubling epochs.

    Round 1 predicts the normalized reference (nu-density 1/K).  For each
    later epoch the cover is built solely from the previous epoch's
    covariates and the posterior restarts, updating only on current-epoch
    data, so every prediction is measurable with respect to strictly prior
    rounds.  ``pool_supplier`` maps the previous epoch's covariates to a
    candidate pool;  ``eps_rule``/``alpha_rule`` map the previous/current
    epoch lengths to the cover scale and smoothing level.
    """
    xs = np.atleast_1d(xs)
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    n = len(xs)
    if alpha_rule is None:
        alpha_rule = lambda length: 1.0 / max(length, 1)
    lognu = np.empty(n)
    lognu[0] = -math.log(ref.total_mass)
    boundaries = [1]
    covers = []
    alphas = []
    ces_models: list = [None]
    ces_alphas = [0.0]
    ces_weights = [1.0 / n]
    m = 2
    while 2 ** (m - 1) <= n:
        start = 2 ** (m - 1)  # 1-indexed start of epoch m; final epoch truncated
        end = min(2**m - 1, n)
        boundaries.append(start)
        prev = np.arange(2 ** (m - 2) - 1, start - 1)  # 0-based previous epoch
        cur = np.arange(start - 1, end)
        xs_prev = xs[prev]
        pool = pool_supplier(xs_prev)
        n_prev = len(prev)
        eps = eps_rule(n_prev) if eps_rule is not None else default_scale(pool, xs_prev, ref, n_prev)
        alpha = alpha_rule(len(cur))
        cover = greedy_pack_cover(pool, MetricSpec("hellinger", 2.0, xs_prev), eps, ref=ref)
        covers.append(cover)
        alphas.append(alpha)
        G = len(cover.members)
        ll = nu_loglik_matrix(list(cover.members), xs[cur], ys[cur], ref, alpha)
        logw = np.full(G, -math.log(G))
        acc = np.zeros(G)
        for k in range(len(cur)):
            lognu[cur[k]] = logsumexp(logw + ll[:, k])
            acc += np.exp(logw)
            logw = logw + ll[:, k]
            logw = logw - logsumexp(logw)
        for g, model in enumerate(cover.members):
            ces_models.append(model)
            ces_alphas.append(alpha)
            ces_weights.append(acc[g] / n)
        m += 1
    cesaro = MixturePredictor(tuple(ces_models), tuple(ces_alphas), tuple(ces_weights), ref)
    return EpochPredictor(tuple(boundaries), tuple(covers), tuple(alphas), lognu, cesaro)


# ---------------------------------------------------------------------------
# adaptive aggregation over candidate models
# ---------------------------------------------------------------------------


def fit_adaptive(pool_suppliers, prior, xs, ys, ref, eps_rule=None, alpha: float | None = None) -> AdaptiveEstimator:
    """Aggregate candidate model classes with a prior, splitting in thirds.

    Covers come from the first third's covariates, each candidate is
    aggregated on the second third, and the final third drives a posterior
    over candidates starting from the prior, averaged over rounds.
    """
    prior = np.asarray(prior, dtype=float)
    if abs(prior.sum() - 1.0) > 1e-9:
        raise ConfigError("candidate prior must sum to 1")
    if np.any(prior <= 0):
        raise ConfigError("zero-prior candidates are not allowed")
    if len(prior) != len(pool_suppliers):
        raise ConfigError("one prior weight per candidate model")
    xs = np.atleast_1d(xs)
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    n3 = len(xs) // 3
    xs1, xs2, xs3 = xs[:n3], xs[n3 : 2 * n3], xs[2 * n3 : 3 * n3]
    ys2, ys3 = ys[n3 : 2 * n3], ys[2 * n3 : 3 * n3]
    if alpha is None:
        alpha = 1.0 / max(n3, 1)
    fitted = []
    for supplier in pool_suppliers:
        pool = supplier(xs1)
        eps = eps_rule(n3) if eps_rule is not None else default_scale(pool, xs1, ref, n3)
        cover = greedy_pack_cover(pool, MetricSpec("hellinger", 2.0, xs1), eps, ref=ref)
        ll = nu_loglik_matrix(list(cover.members), xs2, ys2, ref, alpha)
        logw = _posterior_rounds(ll)
        ces = np.exp(logw).mean(axis=0)
        fitted.append(FittedEstimator(cover, alpha, ref, logw, ces / ces.sum()))
    outer_ll = np.stack([est.predictor.lognu_on(xs3, ys3) for est in fitted])
    M = len(fitted)
    logw = np.empty((n3 + 1, M))
    logw[0] = np.log(prior)
    cur = logw[0]
    for t in range(n3):
        cur = cur + outer_ll[:, t]
        cur = cur - logsumexp(cur)
        logw[t + 1] = cur
    cesaro = np.exp(logw).mean(axis=0)
    return AdaptiveEstimator(tuple(fitted), tuple(prior), logw, cesaro / cesaro.sum())


# ---------------------------------------------------------------------------
# closed-form rate overlays
# ---------------------------------------------------------------------------


def theoretical_rate(regime: str, n: int, p: float = 1.0, C: float = 1.0, B: float = 1.0, K: float = 1.0) -> float:
    """Closed-form risk/regret rate formulas used as plot overlays.

    regimes: upper-nonparametric, upper-parametric, lower-nonparametric,
    lower-parametric, mle-upper-nonparametric, mle-upper-parametric,
    regret-upper-nonparametric, regret-upper-parametric.
    """
    lognBK = math.log(n * B * K)
    if regime == "upper-nonparametric":
        return C ** (2.0 / (p + 2)) * lognBK ** (p / (p + 2)) * n ** (-2.0 / (p + 2))
    if regime == "upper-parametric":
        return (p / n) * (
            math.log(C * math.sqrt(n)) + lognBK * math.log(C * math.sqrt(n) / math.sqrt(p))
        ) + lognBK * math.log(n) / n
    if regime == "lower-nonparametric":
        return C ** (2.0 / (p + 2)) * lognBK ** (-2.0 / (p + 2)) * n ** (-2.0 / (p + 2))
    if regime == "lower-parametric":
        return p / (n * lognBK)
    if regime == "mle-upper-nonparametric":
        return lognBK * (n ** (-1.0 / p) if p > 2 else n ** (-2.0 / (2 + p)))
    if regime == "mle-upper-parametric":
        return lognBK * p * math.log(n) / n
    if regime == "regret-upper-nonparametric":
        return n ** (p / (p + 2)) * lognBK
    if regime == "regret-upper-parametric":
        return (p * math.log(n) + 1) * lognBK
    raise ConfigError(f"unknown rate regime {regime!r}")


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def estimator_to_json(est: FittedEstimator) -> str:
    """JSON document with cover member parameters, alpha, and weights."""
    members = []
    for m in est.cover.members:
        d = asdict(m)
        d["class_tag"] = m.class_tag
        members.append(d)
    doc = {
        "alpha": est.alpha,
        "scale": est.cover.scale,
        "certificate": est.cover.certificate,
        "cesaro_weights": [float(w) for w in est.cesaro],
        "members": members,
    }
    return json.dumps(doc, indent=1, default=float)
