"""Monte Carlo estimation of KL/Hellinger risk and regret, rate-slope fits,
and the MLE-suboptimality experiment.

Conventions
-----------
* ``n`` in every sweep is the *total* sample size handed to an estimator;
  the cover-aggregation estimator splits it into two halves internally.
* Replication r of the point n_i uses the dedicated generator
  ``default_rng(SeedSequence(seed, spawn_key=(i, r)))``, so parallel and
  serial runs agree bit for bit and reruns with one seed are reproducible.
* Losses are E_{x ~ mu_X} KL(truth(x) || predictive(x)) and the analogous
  squared-Hellinger average: exact atom sums for finite covariate supports,
  piecewise Gauss-Legendre panels on interval supports for Bernoulli-mean
  classes (the fitted mean maps are piecewise smooth), vectorized grid
  integration for the GLM families, and Monte Carlo (default 2000 draws)
  otherwise.

CSV rows follow the fixed schema
    experiment_id, class, estimator, n, rep, kl_loss, hellinger_loss,
    regret, lambda_bar, seed, wall_ms
with empty fields where a column does not apply.  wall_ms is measured
timing; every other column is deterministic given (config, seed).
"""

from __future__ import annotations

import json
import math
import os
import tempfile
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gammaln, logsumexp

from . import divergences as dv
from .bumps import WiggleClass, wiggle_grid_mle
from .densities import smooth
from .errors import ConfigError, DomainError
from .estimators import (
    MixturePredictor,
    SmoothedModel,
    default_scale,
    fit_minimax,
    fit_mle,
    fit_sieve_mle,
    fit_smoothed_mle,
    nu_loglik_matrix,
    sequential_predict,
    theoretical_rate,
)
from .models import FiniteSet, UniformInterval, sample_covariates

__all__ = [
    "CSV_COLUMNS",
    "RiskReport",
    "RateFit",
    "EstimatorSpec",
    "sample_responses",
    "kl_loss",
    "hellinger_loss",
    "expected_losses",
    "risk_sweep",
    "regret_sweep",
    "mle_gap_experiment",
    "rate_fit",
    "write_csv",
    "write_summary",
    "report_from_values",
]

CSV_COLUMNS = (
    "experiment_id",
    "class",
    "estimator",
    "n",
    "rep",
    "kl_loss",
    "hellinger_loss",
    "regret",
    "lambda_bar",
    "seed",
    "wall_ms",
)


@dataclass(frozen=True)
class RiskReport:
    class_tag: str
    estimator: str
    n: int
    replications: int
    kl_values: tuple
    hellinger_values: tuple
    seed: int

    @property
    def mean(self) -> float:
        return float(np.mean(self.kl_values))

    @property
    def ci_halfwidth(self) -> float:
        v = np.asarray(self.kl_values)
        return float(1.96 * v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0

    @property
    def hellinger_mean(self) -> float:
        return float(np.mean(self.hellinger_values))

    @property
    def hellinger_ci_halfwidth(self) -> float:
        v = np.asarray(self.hellinger_values)
        return float(1.96 * v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0


@dataclass(frozen=True)
class RateFit:
    ns: tuple
    means: tuple
    slope: float
    intercept: float
    residuals: tuple
    used_ns: tuple


@dataclass(frozen=True)
class EstimatorSpec:
    """How to fit: estimator kind plus scale/smoothing/pool policies.

    eps_policy: "default" (max of (1+1e-6)/sqrt(n) and the measured critical
    radius) or a fixed float.  alpha_policy: "1/n" or a fixed float.
    pool_resolution: grid resolution handed to discretize (None uses each
    class's sample-anchored default).
    """

    kind: str = "minimax"  # minimax | mle | smoothed-mle | sieve-mle
    eps_policy: object = "default"
    alpha_policy: object = "1/n"
    pool_resolution: float | None = 0.05
    pool_kwargs: dict = field(default_factory=dict)
    eval_draws: int = 2000

    def label(self) -> str:
        return self.kind


def _rng_for(seed: int, i: int, r: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i, r)))


def sample_responses(model, xs, rng):
    """Vectorized response draws y_t ~ model(x_t)."""
    xs = np.atleast_1d(xs)
    kind = getattr(model, "profile_kind", None)
    if kind == "bernoulli-mean":
        return (rng.random(len(xs)) < model.mean(xs)).astype(float)
    if kind == "gaussian-mean":
        return rng.normal(model.mean(xs), model.sigma)
    if kind == "poisson-rate":
        return rng.poisson(model.rate(xs)).astype(float)
    if kind == "gamma-scale":
        return rng.gamma(model.shape, model.scale(xs))
    return np.array([model.evaluate(float(x)).sample(rng) for x in xs])


# ---------------------------------------------------------------------------
# loss evaluation
# ---------------------------------------------------------------------------


def _as_predictor(predictive, ref) -> MixturePredictor:
    if isinstance(predictive, MixturePredictor):
        return predictive
    if hasattr(predictive, "predictor"):
        pred = predictive.predictor
        return pred() if callable(pred) else pred
    return MixturePredictor((predictive,), (0.0,), (1.0,), ref)


_GL_CACHE: dict = {}


def _gl_rule(order):
    if order not in _GL_CACHE:
        _GL_CACHE[order] = leggauss(order)
    return _GL_CACHE[order]


def _gl_nodes(lo, hi, order=16):
    z, w = _gl_rule(order)
    mid, half = (lo + hi) / 2.0, (hi - lo) / 2.0
    return mid + half * z, half * w


def _gl_panels(edges, order=8):
    """Gauss-Legendre nodes/weights on every panel between consecutive edges."""
    z, w = _gl_rule(order)
    lo, hi = edges[:-1], edges[1:]
    mid, half = (lo + hi) / 2.0, (hi - lo) / 2.0
    xs = (mid[:, None] + half[:, None] * z[None, :]).ravel()
    ws = (half[:, None] * w[None, :]).ravel()
    return xs, ws


def _bernoulli_losses_interval(truth, pred: MixturePredictor, lo, hi):
    """Exact-piecewise KL and Hellinger losses for Bernoulli-mean maps on a
    uniform covariate interval: Gauss-Legendre panels between all knots."""
    pts = {lo, hi}
    for m in (truth, *[m for m in pred.models if m is not None]):
        bp = getattr(m, "breakpoints", None)
        if bp is not None:
            pts.update(float(t) for t in bp())
        th = getattr(m, "threshold", None)
        if th is not None and np.isfinite(th):
            pts.add(float(th))
    edges = np.asarray(sorted(p for p in pts if lo - 1e-12 <= p <= hi + 1e-12))
    if len(edges) < 2:
        edges = np.asarray([lo, hi])
    edges = edges[np.concatenate(([True], np.diff(edges) > 0))]
    xs, ws = _gl_panels(edges, 8)
    ws = ws / (hi - lo)
    mt = truth.mean(xs)
    mp = pred.mean_on(xs)
    kl_vals = dv.ber_kl(mt, mp)
    h_vals = dv.ber_hellinger_sq(mt, mp)
    return float(np.sum(ws * kl_vals)), float(np.sum(ws * h_vals)), 0.0


def _glm_pointwise_losses(truth, pred: MixturePredictor, xs, ref):
    """KL and Hellinger between a named-family truth and the predictive
    mixture at each covariate, by vectorized grid integration."""
    xs = np.atleast_1d(xs)
    kind = truth.profile_kind
    real = [(m, a, w) for m, a, w in zip(pred.models, pred.alphas, pred.weights) if m is not None]
    cw = sum(w * a / (1 + a) for _, a, w in real) + sum(
        w for m, _, w in zip(pred.models, pred.alphas, pred.weights) if m is None
    )
    wts = np.asarray([w / (1 + a) for _, a, w in real])
    if kind == "gaussian-mean":
        sd = truth.sigma
        mu_t = truth.mean(xs)
        comp = np.stack([m.mean(xs) for m, _, _ in real], axis=1)  # (nx, G)
        z, gw = _gl_nodes(-10.0, 10.0, 160)
        ys = mu_t[:, None] + sd * z[None, :]  # (nx, ny)
        lp = -0.5 * z * z - math.log(sd) - 0.5 * math.log(2 * math.pi)
        p = np.exp(lp)[None, :]
        diff = ys[:, :, None] - comp[:, None, :]
        dens = np.exp(-0.5 * (diff / sd) ** 2) / (sd * math.sqrt(2 * math.pi))
        rho = np.exp(ref.log_weight(ys))
        q = dens @ wts + cw * rho
        w_int = (sd * gw)[None, :]
        kl_x = np.sum(w_int * p * (lp[None, :] - np.log(q)), axis=1)
        h_x = 1.0 - np.sum(w_int * np.sqrt(p * q), axis=1)
        # sqrt(p q) mass outside the grid window: bounded by the truth tail
        return kl_x, np.clip(h_x, 0.0, 1.0)
    if kind == "poisson-rate":
        r_t = truth.rate(xs)
        comp = np.stack([m.rate(xs) for m, _, _ in real], axis=1)
        cap = int(np.max(r_t) + 12 * math.sqrt(np.max(r_t)) + 40)
        ys = np.arange(cap + 1, dtype=float)
        lgy = gammaln(ys + 1.0)
        lp = ys[None, :] * np.log(r_t[:, None]) - r_t[:, None] - lgy[None, :]
        p = np.exp(lp)
        lq_comp = ys[None, None, :] * np.log(comp[:, :, None]) - comp[:, :, None] - lgy[None, None, :]
        rho = np.exp(ref.log_weight(ys))
        q = np.einsum("g,xgy->xy", wts, np.exp(lq_comp)) + cw * rho[None, :]
        kl_x = np.sum(p * (lp - np.log(q)), axis=1)
        h_x = 1.0 - np.sum(np.sqrt(p * q), axis=1)
        return kl_x, np.clip(h_x, 0.0, 1.0)
    if kind == "gamma-scale":
        shape = truth.shape
        b_t = truth.scale(xs)
        comp = np.stack([m.scale(xs) for m, _, _ in real], axis=1)
        from scipy import stats

        lo = stats.gamma.ppf(1e-13, shape)
        hi = stats.gamma.isf(1e-13, shape)
        z, gw = _gl_nodes(max(lo, 1e-13), hi, 240)  # standard-scale nodes
        ys = b_t[:, None] * z[None, :]
        lp = (shape - 1.0) * np.log(ys) - ys / b_t[:, None] - gammaln(shape) - shape * np.log(b_t)[:, None]
        p = np.exp(lp)
        lq = (
            (shape - 1.0) * np.log(ys[:, :, None])
            - ys[:, :, None] / comp[:, None, :]
            - gammaln(shape)
            - shape * np.log(comp[:, None, :])
        )
        rho = np.exp(ref.log_weight(ys))
        q = np.einsum("g,xyg->xy", wts, np.exp(lq)) + cw * rho
        w_int = b_t[:, None] * gw[None, :]
        kl_x = np.sum(w_int * p * (lp - np.log(q)), axis=1)
        h_x = 1.0 - np.sum(w_int * np.sqrt(p * q), axis=1)
        return kl_x, np.clip(h_x, 0.0, 1.0)
    raise ConfigError(f"no pointwise loss path for profile kind {kind!r}")


def expected_losses(truth, predictive, mu_x, ref, rng=None, draws: int = 2000):
    """(kl, hellinger, mc standard error of the kl term).

    Exact for finite covariate supports; exact-piecewise for Bernoulli-mean
    classes on uniform intervals; Monte Carlo over covariates otherwise.
    """
    pred = _as_predictor(predictive, ref)
    kind = truth.profile_kind
    if isinstance(mu_x, FiniteSet):
        xs = np.asarray(mu_x.points, dtype=float)
        probs = mu_x.probabilities()
        if kind == "bernoulli-mean":
            kl_x = dv.ber_kl(truth.mean(xs), pred.mean_on(xs))
            h_x = dv.ber_hellinger_sq(truth.mean(xs), pred.mean_on(xs))
        else:
            kl_x, h_x = _glm_pointwise_losses(truth, pred, xs, ref)
        return float(probs @ kl_x), float(probs @ h_x), 0.0
    if kind == "bernoulli-mean" and isinstance(mu_x, UniformInterval):
        return _bernoulli_losses_interval(truth, pred, mu_x.lo, mu_x.hi)
    if rng is None:
        raise ConfigError("Monte Carlo loss evaluation needs a generator")
    xs = sample_covariates(mu_x, draws, rng)
    if kind == "bernoulli-mean":
        kl_x = dv.ber_kl(truth.mean(xs), pred.mean_on(xs))
        h_x = dv.ber_hellinger_sq(truth.mean(xs), pred.mean_on(xs))
    else:
        kl_x, h_x = _glm_pointwise_losses(truth, pred, xs, ref)
    se = float(np.std(kl_x, ddof=1) / math.sqrt(len(kl_x)))
    return float(np.mean(kl_x)), float(np.mean(h_x)), se


def kl_loss(truth, predictive, mu_x, ref, rng=None, draws: int = 2000) -> float:
    """E_{x ~ mu_X} KL(truth(x) || predictive(x)); +inf is reported as is."""
    return expected_losses(truth, predictive, mu_x, ref, rng, draws)[0]


def hellinger_loss(truth, predictive, mu_x, ref, rng=None, draws: int = 2000) -> float:
    return expected_losses(truth, predictive, mu_x, ref, rng, draws)[1]


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


def _resolve_alpha(policy, n):
    return 1.0 / max(n, 1) if policy == "1/n" else float(policy)


def _fit(espec: EstimatorSpec, class_spec, pool_xs_cov, xs, ys, ref):
    n = len(xs)
    if espec.kind == "minimax":
        pool = class_spec.discretize(espec.pool_resolution, xs=pool_xs_cov, **espec.pool_kwargs)
        alpha = _resolve_alpha(espec.alpha_policy, n - len(xs) // 2)
        eps = None if espec.eps_policy == "default" else float(espec.eps_policy)
        return fit_minimax(pool, xs, ys, eps=eps, alpha=alpha, ref=ref)
    pool = class_spec.discretize(espec.pool_resolution, xs=xs, **espec.pool_kwargs)
    if espec.kind == "mle":
        return fit_mle(pool, xs, ys, ref)
    if espec.kind == "smoothed-mle":
        alpha = _resolve_alpha(espec.alpha_policy, n)
        return fit_smoothed_mle(pool, xs, ys, ref, alpha=alpha)
    if espec.kind == "sieve-mle":
        eps = default_scale(pool, xs, ref, n) if espec.eps_policy == "default" else float(espec.eps_policy)
        return fit_sieve_mle(pool, xs, ys, ref, eps)
    raise ConfigError(f"unknown estimator kind {espec.kind!r}")


def report_from_values(class_tag, estimator, n, kl_vals, h_vals, seed) -> RiskReport:
    return RiskReport(class_tag, estimator, int(n), len(kl_vals), tuple(kl_vals), tuple(h_vals), seed)


def _risk_rep(task):
    """One replication; module-level so worker pools can pickle it.  The
    generator substream depends only on (seed, grid index, rep), so results
    do not depend on scheduling."""
    class_spec, truth, espec, n, i, r, seed, mu_x = task
    t0 = time.perf_counter()
    rng = _rng_for(seed, i, r)
    xs = sample_covariates(mu_x, int(n), rng)
    ys = sample_responses(truth, xs, rng)
    try:
        fitted = _fit(espec, class_spec, xs[: int(n) // 2], xs, ys, class_spec.ref)
        klv, hv, _ = expected_losses(truth, fitted, mu_x, class_spec.ref, rng, espec.eval_draws)
    except DomainError as exc:  # recorded, not fatal
        warnings.warn(f"replication ({n}, {r}) failed: {exc}")
        klv, hv = math.inf, math.inf
    return i, r, klv, hv, int(1000 * (time.perf_counter() - t0))


def risk_sweep(class_spec, truth, espec: EstimatorSpec, n_grid, R: int, seed: int,
               covariates=None, experiment_id: str = "risk-sweep", workers: int = 1):
    """Monte Carlo KL/Hellinger risk across a sample-size grid.

    Returns (reports, rate_fit, rows): one ``RiskReport`` per grid point, an
    OLS slope fit of log mean risk on log n, and the per-replication CSV
    rows.  Failed replications record +inf losses rather than aborting.
    ``workers > 1`` distributes replications over a process pool; results
    are identical to the serial run because every replication derives its
    own generator substream.
    """
    if R < 2:
        raise ConfigError("need at least two replications for confidence intervals")
    mu_x = covariates if covariates is not None else class_spec.default_covariates()
    tasks = [
        (class_spec, truth, espec, int(n), i, r, seed, mu_x)
        for i, n in enumerate(n_grid)
        for r in range(R)
    ]
    if workers and workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_risk_rep, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        results = [_risk_rep(t) for t in tasks]
    by_point = {}
    for i, r, klv, hv, ms in results:
        by_point.setdefault(i, {})[r] = (klv, hv, ms)
    reports, rows = [], []
    for i, n in enumerate(n_grid):
        kl_vals, h_vals = [], []
        for r in range(R):
            klv, hv, ms = by_point[i][r]
            rows.append(
                {
                    "experiment_id": experiment_id,
                    "class": class_spec.tag,
                    "estimator": espec.label(),
                    "n": int(n),
                    "rep": r,
                    "kl_loss": klv,
                    "hellinger_loss": hv,
                    "regret": "",
                    "lambda_bar": "",
                    "seed": seed,
                    "wall_ms": ms,
                }
            )
            kl_vals.append(klv)
            h_vals.append(hv)
        reports.append(report_from_values(class_spec.tag, espec.label(), n, kl_vals, h_vals, seed))
    fit = rate_fit(list(n_grid), [rep.mean for rep in reports]) if len(n_grid) >= 3 else None
    return reports, fit, rows


def regret_sweep(class_spec, truth, n_grid, R: int, seed: int, covariates=None,
                 pool_resolution: float | None = 0.05, pool_kwargs: dict | None = None,
                 eps_rule=None, experiment_id: str = "regret-sweep"):
    """Cumulative log-loss regret of the epoch-doubling predictor, with the
    KL risk of each run's round-averaged (online-to-batch) predictor."""
    mu_x = covariates if covariates is not None else class_spec.default_covariates()
    reports, rows = [], []
    for i, n in enumerate(n_grid):
        regrets, ces_kl, ces_h = [], [], []
        for r in range(R):
            t0 = time.perf_counter()
            rng = _rng_for(seed, i, r)
            xs = sample_covariates(mu_x, int(n), rng)
            ys = sample_responses(truth, xs, rng)
            supplier = lambda xs_prev: class_spec.discretize(pool_resolution, xs=xs_prev, **(pool_kwargs or {}))
            out = sequential_predict(xs, ys, supplier, class_spec.ref, eps_rule=eps_rule)
            truth_lognu = nu_loglik_matrix([truth], xs, ys, class_spec.ref, 0.0)[0]
            regret = float(np.sum(truth_lognu - out.per_round_lognu))
            klv, hv, _ = expected_losses(truth, out.cesaro, mu_x, class_spec.ref, rng, 2000)
            regrets.append(regret)
            ces_kl.append(klv)
            ces_h.append(hv)
            rows.append(
                {
                    "experiment_id": experiment_id,
                    "class": class_spec.tag,
                    "estimator": "sequential",
                    "n": int(n),
                    "rep": r,
                    "kl_loss": klv,
                    "hellinger_loss": hv,
                    "regret": regret,
                    "lambda_bar": "",
                    "seed": seed,
                    "wall_ms": int(1000 * (time.perf_counter() - t0)),
                }
            )
        reports.append(
            {
                "n": int(n),
                "mean_regret": float(np.mean(regrets)),
                "regret_ci": float(1.96 * np.std(regrets, ddof=1) / math.sqrt(R)) if R > 1 else 0.0,
                "cesaro_kl_mean": float(np.mean(ces_kl)),
                "cesaro_kl_ci": float(1.96 * np.std(ces_kl, ddof=1) / math.sqrt(R)) if R > 1 else 0.0,
                "cesaro_hellinger_mean": float(np.mean(ces_h)),
            }
        )
    return reports, rows


def mle_gap_experiment(gamma: float, n_grid, R: int, seed: int, levels: int = 13,
                       experiment_id: str = "mle-gap"):
    """Paired risks of the exact grid MLE and the cover-aggregation
    estimator over the wiggle class, truth = constant 1/2.

    Protocol: x ~ Unif[-1/2, 1/2], y ~ Bernoulli(1/2).  At grid point n the
    MLE consumes (x_{1:n}, y_{1:n}) while the aggregation estimator consumes
    the size-2n sample its definition requires (the first n points double as
    its cover half), both drawn from one stream.  Reports per-rep Hellinger
    and KL losses for both estimators plus the MLE's fitted offset lam.
    """
    if not 0.0 < gamma < 0.5:
        raise ConfigError("gamma must lie in (0, 1/2)")
    cls = WiggleClass(gamma)
    truth = cls.constant()
    mu_x = UniformInterval(-0.5, 0.5)
    mle_reports, agg_reports, rows = [], [], []
    for i, n in enumerate(n_grid):
        mk, mh, ak, ah, lams = [], [], [], [], []
        for r in range(R):
            rng = _rng_for(seed, i, r)
            xs = sample_covariates(mu_x, 2 * int(n), rng)
            ys = (rng.random(2 * int(n)) < 0.5).astype(float)
            t0 = time.perf_counter()
            mle_model, lam_hat = wiggle_grid_mle(cls, xs[: int(n)], ys[: int(n)], levels=levels)
            klv, hv, _ = expected_losses(truth, mle_model, mu_x, cls.ref)
            dt_mle = time.perf_counter() - t0
            mk.append(klv)
            mh.append(hv)
            lams.append(lam_hat)
            t0 = time.perf_counter()
            pool = cls.discretize(None, xs=xs[: int(n)], levels=levels)
            est = fit_minimax(pool, xs, ys, ref=cls.ref)
            akl, ahl, _ = expected_losses(truth, est, mu_x, cls.ref)
            dt_agg = time.perf_counter() - t0
            ak.append(akl)
            ah.append(ahl)
            rows.append(
                {
                    "experiment_id": experiment_id,
                    "class": cls.tag,
                    "estimator": "grid-mle",
                    "n": int(n),
                    "rep": r,
                    "kl_loss": klv,
                    "hellinger_loss": hv,
                    "regret": "",
                    "lambda_bar": lam_hat,
                    "seed": seed,
                    "wall_ms": int(1000 * dt_mle),
                }
            )
            rows.append(
                {
                    "experiment_id": experiment_id,
                    "class": cls.tag,
                    "estimator": "minimax",
                    "n": int(n),
                    "rep": r,
                    "kl_loss": akl,
                    "hellinger_loss": ahl,
                    "regret": "",
                    "lambda_bar": "",
                    "seed": seed,
                    "wall_ms": int(1000 * dt_agg),
                }
            )
        mle_reports.append(report_from_values(cls.tag, "grid-mle", n, mk, mh, seed))
        agg_reports.append(report_from_values(cls.tag, "minimax", n, ak, ah, seed))
    return mle_reports, agg_reports, rows


def rate_fit(n_grid, means) -> RateFit:
    """OLS slope of log(mean risk) on log(n), upper half of the grid only
    (burn-in discard); nonpositive or non-finite risks are excluded."""
    ns = np.asarray(n_grid, dtype=float)
    ms = np.asarray(means, dtype=float)
    if len(ns) < 3:
        raise ConfigError("rate fits need at least three grid points")
    if np.any(np.diff(ns) <= 0):
        raise ConfigError("the sample-size grid must be strictly increasing")
    start = len(ns) // 2
    ns_u, ms_u = ns[start:], ms[start:]
    good = np.isfinite(ms_u) & (ms_u > 0)
    if not np.all(good):
        warnings.warn("excluding nonpositive mean risks from the rate fit")
    ns_u, ms_u = ns_u[good], ms_u[good]
    if len(ns_u) < 2:
        raise ConfigError("not enough positive risks to fit a slope")
    A = np.stack([np.log(ns_u), np.ones(len(ns_u))], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.log(ms_u), rcond=None)
    resid = np.log(ms_u) - A @ coef
    return RateFit(tuple(n_grid), tuple(means), float(coef[0]), float(coef[1]), tuple(resid), tuple(ns_u))


# ---------------------------------------------------------------------------
# artifacts
# ---------------------------------------------------------------------------


def _atomic_write(path: str, data: str):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(data)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: str, rows):
    """Atomically write rows in the canonical schema."""
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(row.get(c, "")) for c in CSV_COLUMNS))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_summary(path: str, payload: dict):
    _atomic_write(path, json.dumps(payload, indent=1, sort_keys=True, default=float) + "\n")


def summary_payload(experiment_id, reports, fit: RateFit | None, overlays: dict | None = None) -> dict:
    out = {
        "experiment_id": experiment_id,
        "reports": [
            {
                "class": rep.class_tag,
                "estimator": rep.estimator,
                "n": rep.n,
                "kl_mean": rep.mean,
                "kl_ci_halfwidth": rep.ci_halfwidth,
                "hellinger_mean": rep.hellinger_mean,
                "hellinger_ci_halfwidth": rep.hellinger_ci_halfwidth,
                "replications": rep.replications,
            }
            for rep in reports
        ],
    }
    if fit is not None:
        out["rate_fit"] = {
            "slope": fit.slope,
            "intercept": fit.intercept,
            "ns": list(fit.ns),
            "means": list(fit.means),
            "used_ns": list(fit.used_ns),
        }
    if overlays:
        out["overlays"] = overlays
    return out


def overlay_curves(regimes, n_grid, **params) -> dict:
    return {
        regime: [theoretical_rate(regime, int(n), **params) for n in n_grid] for regime in regimes
    }
