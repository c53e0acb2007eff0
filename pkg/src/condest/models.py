"""Conditional model classes, their discretizations, and covariate samplers.

A conditional model maps a covariate x to a response density; a model class
bundles a family of such maps with its reference measure, density bound, and
a ``discretize`` procedure that produces the finite candidate pools used by
covers and grid maximum likelihood.

Concrete classes:

* ``GaussianLinearClass``   x -> Gaussian(<x, w>, sigma^2), ||x|| <= X, ||w|| <= W
* ``PoissonLogLinearClass`` x -> Poisson(exp <x, w>)
* ``GammaInverseLinkClass`` x -> Gamma(shape, -1/(shape (<x,w> - XW - margin)))
* ``BernoulliThresholdClass`` x -> Bernoulli(theta_{1[x > t]}) on the line
* ``BumpGridClass`` / ``WiggleClass`` (see :mod:`condest.bumps`)

Parameter-grid steps are derived from per-family Lipschitz bounds of the
Hellinger distance in the link, so a grid at resolution eps approximates
the continuum at empirical-(H, 2) scale eps on any sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .densities import Bernoulli, Gamma, Gaussian, Poisson
from .errors import CapacityError, ConfigError, DomainError
from .reference import binary_uniform_reference, cauchy_reference, gamma_reference, poisson_reference

__all__ = [
    "UniformInterval",
    "FiniteSet",
    "UniformBall",
    "GaussianCovariates",
    "sample_covariates",
    "GaussianLinearModel",
    "GaussianLinearClass",
    "PoissonLogLinearModel",
    "PoissonLogLinearClass",
    "GammaInverseLinkModel",
    "GammaInverseLinkClass",
    "ThresholdModel",
    "BernoulliThresholdClass",
    "discretize",
    "pool_means",
    "CLASS_TAGS",
]


# ---------------------------------------------------------------------------
# covariate distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UniformInterval:
    lo: float
    hi: float

    kind = "uniform-interval"

    def sample(self, n, rng):
        return rng.uniform(self.lo, self.hi, size=n)


@dataclass(frozen=True)
class FiniteSet:
    """Uniform or weighted distribution on an explicit covariate grid."""

    points: tuple
    weights: tuple | None = None

    kind = "finite-set"

    def probabilities(self):
        if self.weights is None:
            return np.full(len(self.points), 1.0 / len(self.points))
        w = np.asarray(self.weights, dtype=float)
        return w / w.sum()

    def sample(self, n, rng):
        pts = np.asarray(self.points, dtype=float)
        idx = rng.choice(len(pts), size=n, p=self.probabilities())
        return pts[idx]


@dataclass(frozen=True)
class UniformBall:
    """Uniform distribution on the Euclidean ball of the given radius."""

    dim: int
    radius: float

    kind = "uniform-ball"

    def sample(self, n, rng):
        g = rng.normal(size=(n, self.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = self.radius * rng.random(n) ** (1.0 / self.dim)
        out = g * r[:, None]
        return out[:, 0] if self.dim == 1 else out


@dataclass(frozen=True)
class GaussianCovariates:
    """Unbounded covariate support on the line (threshold-class experiments)."""

    loc: float = 0.0
    scale: float = 1.0

    kind = "gaussian"

    def sample(self, n, rng):
        return rng.normal(self.loc, self.scale, size=n)


def sample_covariates(dist, n, rng):
    """Draw n covariates; deterministic under a fixed generator state."""
    return dist.sample(n, rng)


# ---------------------------------------------------------------------------
# generalized linear model classes
# ---------------------------------------------------------------------------


def _dot(xs, w):
    xs = np.asarray(xs, dtype=float)
    w = np.asarray(w, dtype=float)
    if xs.ndim <= 1 and w.size == 1:
        return xs * w[0] if w.ndim else xs * float(w)
    return xs @ w


def _weight_grid(w_bound, dim, step, cap):
    """Lattice of weight vectors inside the W-ball, lexicographic order."""
    axis = np.arange(-w_bound, w_bound + step / 2, step)
    if len(axis) ** dim > cap:
        raise CapacityError(
            f"weight lattice of {len(axis)}^{dim} points exceeds the {cap}-member pool cap"
        )
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    keep = np.linalg.norm(pts, axis=1) <= w_bound + 1e-12
    return [tuple(p) for p in pts[keep]]


@dataclass(frozen=True)
class GaussianLinearModel:
    w: tuple
    sigma: float

    class_tag = "gaussian-linear"
    profile_kind = "gaussian-mean"

    def mean(self, xs):
        return _dot(np.atleast_1d(xs), self.w)

    def evaluate(self, x):
        return Gaussian(float(_dot(x, self.w)), self.sigma)


@dataclass(frozen=True)
class GaussianLinearClass:
    dim: int = 1
    x_bound: float = 1.0
    w_bound: float = 1.0
    sigma: float = 1.0

    tag = "gaussian-linear"
    profile_kind = "gaussian-mean"

    @property
    def ref(self):
        return cauchy_reference()

    @property
    def density_bound(self) -> float:
        # true sup over y and |theta| <= XW of the nu-density
        # phi_sigma(y - theta) * pi (1 + y^2); the max sits off-mode because
        # of the heavy reference tail, so it is located numerically
        from scipy.optimize import minimize_scalar

        theta = self.x_bound * self.w_bound

        def neg(y):
            return -(
                math.log(math.pi)
                + math.log1p(y * y)
                - 0.5 * ((y - theta) / self.sigma) ** 2
                - 0.5 * math.log(2 * math.pi * self.sigma**2)
            )

        res = minimize_scalar(neg, bounds=(theta, theta + 3 * self.sigma + 3), method="bounded")
        return math.exp(-res.fun) * (1.0 + 1e-9)

    def default_covariates(self):
        if self.dim == 1:
            return UniformInterval(-self.x_bound, self.x_bound)
        return UniformBall(self.dim, self.x_bound)

    def member(self, w) -> GaussianLinearModel:
        w = np.atleast_1d(np.asarray(w, dtype=float))
        if np.linalg.norm(w) > self.w_bound + 1e-9:
            raise DomainError("weight norm exceeds the class bound")
        return GaussianLinearModel(tuple(w), self.sigma)

    def discretize(self, resolution, xs=None, cap: int = 1 << 14):
        # d_H <= X ||dw|| / (2 sqrt(2) sigma), so a lattice at this step is
        # an eps-grid in empirical Hellinger distance on any sample
        step = resolution * 2.0 * math.sqrt(2.0) * self.sigma / self.x_bound
        return [self.member(w) for w in _weight_grid(self.w_bound, self.dim, step, cap)]


@dataclass(frozen=True)
class PoissonLogLinearModel:
    w: tuple

    class_tag = "poisson-loglinear"
    profile_kind = "poisson-rate"

    def rate(self, xs):
        return np.exp(_dot(np.atleast_1d(xs), self.w))

    def evaluate(self, x):
        return Poisson(float(np.exp(_dot(x, self.w))))


@dataclass(frozen=True)
class PoissonLogLinearClass:
    dim: int = 1
    x_bound: float = 1.0
    w_bound: float = 1.0

    tag = "poisson-loglinear"
    profile_kind = "poisson-rate"

    @property
    def ref(self):
        return poisson_reference()

    @property
    def density_bound(self) -> float:
        # sup over y and rates up to exp(XW) of
        # rate^y e^{-rate} / y! * pi (1 + y^2) / 2, rate maximizer min(y, e^XW)
        from scipy.special import gammaln

        rmax = math.exp(self.x_bound * self.w_bound)
        ys = np.arange(0, int(rmax + 12 * math.sqrt(rmax) + 30))
        rstar = np.minimum(np.maximum(ys, 1e-12), rmax)
        logs = ys * np.log(rstar) - rstar - gammaln(ys + 1) + np.log(np.pi * (1 + ys**2) / 2.0)
        return float(np.exp(logs.max())) * (1.0 + 1e-9)

    def default_covariates(self):
        if self.dim == 1:
            return UniformInterval(-self.x_bound, self.x_bound)
        return UniformBall(self.dim, self.x_bound)

    def member(self, w) -> PoissonLogLinearModel:
        w = np.atleast_1d(np.asarray(w, dtype=float))
        if np.linalg.norm(w) > self.w_bound + 1e-9:
            raise DomainError("weight norm exceeds the class bound")
        return PoissonLogLinearModel(tuple(w))

    def discretize(self, resolution, xs=None, cap: int = 1 << 14):
        # d_H <= exp(XW/2) |dtheta| / 2 with theta = <x, w>
        xw = self.x_bound * self.w_bound
        step = resolution * 2.0 * math.exp(-xw / 2.0) / self.x_bound
        return [self.member(w) for w in _weight_grid(self.w_bound, self.dim, step, cap)]


@dataclass(frozen=True)
class GammaInverseLinkModel:
    w: tuple
    shape: float
    link_shift: float  # XW + margin

    class_tag = "gamma-inverse"
    profile_kind = "gamma-scale"

    def scale(self, xs):
        theta = _dot(np.atleast_1d(xs), self.w) - self.link_shift
        return -1.0 / (self.shape * theta)

    def evaluate(self, x):
        theta = float(_dot(x, self.w)) - self.link_shift
        return Gamma(self.shape, -1.0 / (self.shape * theta))


@dataclass(frozen=True)
class GammaInverseLinkClass:
    dim: int = 1
    x_bound: float = 1.0
    w_bound: float = 1.0
    shape: float = 2.0
    margin: float = 0.5  # keeps the link below -margin, so scales stay positive

    tag = "gamma-inverse"
    profile_kind = "gamma-scale"

    @property
    def ref(self):
        return gamma_reference(self.shape, 1.0 / (self.shape * self.margin))

    @property
    def density_bound(self) -> float:
        # nu-density is ((-theta)/margin)^shape exp(-y shape(-theta - margin))
        # with -theta in [margin, 2 XW + margin]: sup at y = 0, extreme link
        xw = self.x_bound * self.w_bound
        return ((2.0 * xw + self.margin) / self.margin) ** self.shape

    def default_covariates(self):
        if self.dim == 1:
            return UniformInterval(-self.x_bound, self.x_bound)
        return UniformBall(self.dim, self.x_bound)

    def member(self, w) -> GammaInverseLinkModel:
        w = np.atleast_1d(np.asarray(w, dtype=float))
        if np.linalg.norm(w) > self.w_bound + 1e-9:
            raise DomainError("weight norm exceeds the class bound")
        return GammaInverseLinkModel(tuple(w), self.shape, self.x_bound * self.w_bound + self.margin)

    def discretize(self, resolution, xs=None, cap: int = 1 << 14):
        # d_H is Lipschitz in the link with constant sqrt(max(shape,1))/(2 margin)
        step = resolution * 2.0 * self.margin / (math.sqrt(max(self.shape, 1.0)) * self.x_bound)
        return [self.member(w) for w in _weight_grid(self.w_bound, self.dim, step, cap)]


# ---------------------------------------------------------------------------
# threshold classification class
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThresholdModel:
    """x -> Bernoulli(theta1 if x > threshold else theta0)."""

    threshold: float
    theta0: float
    theta1: float

    class_tag = "bernoulli-threshold"
    profile_kind = "bernoulli-mean"

    def mean(self, xs):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        return np.where(xs > self.threshold, self.theta1, self.theta0)

    def evaluate(self, x):
        return Bernoulli(self.theta1 if x > self.threshold else self.theta0)


@dataclass(frozen=True)
class BernoulliThresholdClass:
    """Half-line threshold class on R; VC dimension of the cell family is 1."""

    tag = "bernoulli-threshold"
    profile_kind = "bernoulli-mean"

    @property
    def ref(self):
        return binary_uniform_reference()

    @property
    def density_bound(self) -> float:
        return 2.0

    def default_covariates(self):
        return GaussianCovariates()

    def member(self, threshold, theta0, theta1) -> ThresholdModel:
        for th in (theta0, theta1):
            if not 0.0 <= th <= 1.0:
                raise DomainError("theta parameters must lie in [0, 1]")
        return ThresholdModel(float(threshold), float(theta0), float(theta1))

    def discretize(self, resolution, xs=None, cap: int = 1 << 16, threshold_cap: int | None = None):
        """Thresholds at midpoints between sorted sample covariates plus
        +-inf; uniform theta grid with step = resolution.  Empirical
        distances depend only on the induced labeling of the sample, so
        these thresholds realize every labeling."""
        if xs is None:
            raise DomainError("threshold pools need sample covariates")
        pts = np.unique(np.asarray(xs, dtype=float))
        mids = (pts[1:] + pts[:-1]) / 2.0 if len(pts) > 1 else np.asarray([])
        thresholds = np.concatenate(([-np.inf], mids, [np.inf]))
        if threshold_cap is not None and len(thresholds) > threshold_cap:
            idx = np.unique(np.linspace(0, len(thresholds) - 1, threshold_cap).round().astype(int))
            thresholds = thresholds[idx]
        k = int(round(1.0 / resolution))
        thetas = np.linspace(0.0, 1.0, k + 1)
        if len(thresholds) * len(thetas) ** 2 > cap:
            raise CapacityError(
                f"threshold pool of {len(thresholds)}x{len(thetas)}^2 members exceeds the cap {cap}"
            )
        return [
            ThresholdModel(float(t), float(a), float(b))
            for t in thresholds
            for a in thetas
            for b in thetas
        ]


# ---------------------------------------------------------------------------
# pool utilities
# ---------------------------------------------------------------------------

CLASS_TAGS = (
    "gaussian-linear",
    "poisson-loglinear",
    "gamma-inverse",
    "bernoulli-threshold",
    "holder-bump",
    "wiggle",
)


def discretize(spec, resolution, xs=None, **kwargs):
    """Finite candidate pool for a model class at the given grid resolution."""
    return spec.discretize(resolution, xs=xs, **kwargs)


def pool_means(pool, xs):
    """Stack the per-sample family parameter of every pool member.

    Returns (kind, matrix, extra): Bernoulli means, Gaussian means (extra is
    sigma), Poisson rates, or Gamma scales (extra is the shape).  The matrix
    is |pool| x n and backs all vectorized empirical-distance computations.
    """
    if not pool:
        raise ConfigError("empty pool")
    kind = pool[0].profile_kind
    if any(m.profile_kind != kind for m in pool):
        raise ConfigError("mixed profile kinds in one pool")
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if kind == "bernoulli-mean":
        mat = np.stack([m.mean(xs) for m in pool])
        return kind, mat, None
    if kind == "gaussian-mean":
        mat = np.stack([m.mean(xs) for m in pool])
        return kind, mat, pool[0].sigma
    if kind == "poisson-rate":
        mat = np.stack([m.rate(xs) for m in pool])
        return kind, mat, None
    if kind == "gamma-scale":
        mat = np.stack([m.scale(xs) for m in pool])
        return kind, mat, pool[0].shape
    raise ConfigError(f"unsupported profile kind {kind!r}")
