"""Response-space probability densities.

A ``ResponseDensity`` is a probability distribution on the response space Y,
used throughout as a density with respect to a reference measure nu (see
:mod:`condest.reference`).  Concrete families:

* ``Bernoulli(mean)``, ``Multinomial(probs)`` -- finite responses;
* ``Gaussian(mean, sd)``, ``Gamma(shape, scale)`` -- continuous responses;
* ``Poisson(rate)`` -- counts;
* ``Tabulated(ref, values)`` -- nu-density values on a finite grid, atoms for
  a counting reference and piecewise-constant cells for a Lebesgue interval;
* ``Mixture(components, weights)`` -- exact finite mixtures (smoothed
  densities and posterior predictives are represented this way);
* ``ReferenceUniform(ref)`` -- the normalized reference nu/K itself.

``logpdf`` is always with respect to the *natural base measure* (Lebesgue on
the continuum, unit counting on atoms), so for discrete families it is the
log probability mass.  Log densities with respect to nu are obtained by
subtracting ``ref.log_weight``; ratios of nu-densities equal ratios of
natural densities, which is what every aggregation routine relies on.

All densities are immutable and safe to share across workers.  Likelihood
arithmetic everywhere is in natural-log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ConfigError, DomainError
from .reference import (
    CountingMeasure,
    LebesgueInterval,
    ReferenceMeasure,
    WeightedCounting,
    WeightedLebesgue,
)

__all__ = [
    "ResponseDensity",
    "Bernoulli",
    "Gaussian",
    "Poisson",
    "Gamma",
    "Multinomial",
    "Tabulated",
    "Mixture",
    "ReferenceUniform",
    "smooth",
    "log_density",
    "nu_log_density",
    "sample_response",
    "normalization",
]

_NORM_TOL = 1e-8


class ResponseDensity:
    """Base class; subclasses are frozen dataclasses."""

    family: str = "abstract"

    # -- evaluation ---------------------------------------------------------
    def logpdf(self, y):
        raise NotImplementedError

    def pdf(self, y):
        return np.exp(self.logpdf(y))

    # -- sampling -----------------------------------------------------------
    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    # -- structure ----------------------------------------------------------
    @property
    def is_discrete(self) -> bool:
        raise NotImplementedError

    def support_interval(self):
        """(lo, hi) hull of the support; only meaningful when continuous."""
        raise NotImplementedError

    def atoms(self):
        """Finite atom list, or None when the support is infinite/continuous."""
        return None

    def count_cap(self, eps: float = 1e-14) -> int:
        """For integer-supported densities: index beyond which the tail mass
        is below ``eps``."""
        raise NotImplementedError


@dataclass(frozen=True)
class Bernoulli(ResponseDensity):
    mean: float

    family = "bernoulli"

    def __post_init__(self):
        if not 0.0 <= self.mean <= 1.0:
            raise DomainError(f"Bernoulli mean {self.mean} outside [0, 1]")

    def logpdf(self, y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            out = np.where(y == 1.0, _safe_log(self.mean), np.where(y == 0.0, _safe_log(1.0 - self.mean), -np.inf))
        return out if out.shape else float(out)

    def sample(self, rng, size=None):
        return (rng.random(size) < self.mean).astype(float)

    @property
    def is_discrete(self):
        return True

    def atoms(self):
        return (0.0, 1.0)


@dataclass(frozen=True)
class Gaussian(ResponseDensity):
    mean: float
    sd: float

    family = "gaussian"

    def __post_init__(self):
        if not self.sd > 0:
            raise DomainError("Gaussian sd must be positive")

    def logpdf(self, y):
        if np.ndim(y) == 0:
            z = (float(y) - self.mean) / self.sd
            return -0.5 * z * z - math.log(self.sd) - 0.5 * math.log(2 * math.pi)
        y = np.asarray(y, dtype=float)
        z = (y - self.mean) / self.sd
        return -0.5 * z * z - math.log(self.sd) - 0.5 * math.log(2 * math.pi)

    def sample(self, rng, size=None):
        return rng.normal(self.mean, self.sd, size=size)

    @property
    def is_discrete(self):
        return False

    def support_interval(self):
        return (-np.inf, np.inf)


@dataclass(frozen=True)
class Poisson(ResponseDensity):
    rate: float

    family = "poisson"

    def __post_init__(self):
        if not self.rate > 0:
            raise DomainError("Poisson rate must be positive")

    def logpdf(self, y):
        from scipy.special import gammaln

        y = np.asarray(y, dtype=float)
        valid = (y >= 0) & (y == np.floor(y))
        yy = np.where(valid, y, 0.0)
        out = np.where(valid, yy * math.log(self.rate) - self.rate - gammaln(yy + 1.0), -np.inf)
        return out if out.shape else float(out)

    def sample(self, rng, size=None):
        return rng.poisson(self.rate, size=size).astype(float)

    @property
    def is_discrete(self):
        return True

    def count_cap(self, eps=1e-14):
        cap = stats.poisson.isf(eps, self.rate)
        if not np.isfinite(cap):
            cap = self.rate + 60.0 * math.sqrt(self.rate) + 60.0
        return int(cap) + 10


@dataclass(frozen=True)
class Gamma(ResponseDensity):
    shape: float
    scale: float

    family = "gamma"

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise DomainError("Gamma shape and scale must be positive")

    def logpdf(self, y):
        a, b = self.shape, self.scale
        norm = math.lgamma(a) + a * math.log(b)
        if np.ndim(y) == 0:  # scalar fast path: quadrature calls this a lot
            y = float(y)
            if y < 0 or (y == 0 and a > 1):
                return -math.inf
            if y == 0:
                return math.inf if a < 1 else -norm
            return (a - 1.0) * math.log(y) - y / b - norm
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(y > 0, (a - 1.0) * np.log(np.where(y > 0, y, 1.0)) - y / b - norm, -np.inf)
        return out

    def sample(self, rng, size=None):
        return rng.gamma(self.shape, self.scale, size=size)

    @property
    def is_discrete(self):
        return False

    def support_interval(self):
        return (0.0, np.inf)


@dataclass(frozen=True)
class Multinomial(ResponseDensity):
    """Distribution on the atoms {0, ..., k-1} with probability vector probs."""

    probs: tuple

    family = "multinomial"

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if np.any(p < 0) or abs(p.sum() - 1.0) > _NORM_TOL:
            raise DomainError("Multinomial probs must be nonnegative and sum to 1")

    def logpdf(self, y):
        p = np.asarray(self.probs, dtype=float)
        y = np.asarray(y)
        idx = y.astype(int)
        valid = (y == np.floor(np.asarray(y, dtype=float))) & (idx >= 0) & (idx < len(p))
        with np.errstate(divide="ignore"):
            out = np.where(valid, _safe_log(p[np.clip(idx, 0, len(p) - 1)]), -np.inf)
        return out if out.shape else float(out)

    def sample(self, rng, size=None):
        return rng.choice(len(self.probs), size=size, p=np.asarray(self.probs, dtype=float)).astype(float)

    @property
    def is_discrete(self):
        return True

    def atoms(self):
        return tuple(float(i) for i in range(len(self.probs)))


@dataclass(frozen=True)
class Tabulated(ResponseDensity):
    """Grid density: nu-density values tied to a counting or interval reference.

    For a ``CountingMeasure`` reference, ``values[i]`` is the nu-density at
    atom i, so the probability mass there is ``values[i] * weights[i]``.  For
    a ``LebesgueInterval``, the interval is split into ``len(values)`` equal
    cells and the density is piecewise constant.
    """

    ref: ReferenceMeasure
    values: tuple

    family = "tabulated"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.any(v < 0):
            raise DomainError("tabulated density values must be nonnegative")
        if isinstance(self.ref, CountingMeasure):
            if len(v) != len(self.ref.atoms):
                raise ConfigError("tabulated values must match the reference atoms")
            total = float(v @ self.ref.weight_array())
        elif isinstance(self.ref, LebesgueInterval):
            cell = (self.ref.hi - self.ref.lo) / len(v)
            total = float(v.sum() * cell)
        else:
            raise ConfigError("tabulated densities need a counting or interval reference")
        if abs(total - 1.0) > _NORM_TOL:
            raise DomainError(f"tabulated density integrates to {total}, not 1")

    def _masses(self):
        v = np.asarray(self.values, dtype=float)
        if isinstance(self.ref, CountingMeasure):
            return v * self.ref.weight_array()
        cell = (self.ref.hi - self.ref.lo) / len(v)
        return v * cell

    def logpdf(self, y):
        y = np.asarray(y, dtype=float)
        if isinstance(self.ref, CountingMeasure):
            atoms = self.ref.atom_array()
            masses = self._masses()
            out = np.full(y.shape, -np.inf, dtype=float)
            for a, m in zip(atoms, masses):
                out = np.where(y == a, _safe_log(m), out)
            return out if out.shape else float(out)
        v = np.asarray(self.values, dtype=float)
        lo, hi = self.ref.lo, self.ref.hi
        cell = (hi - lo) / len(v)
        idx = np.clip(((y - lo) / cell).astype(int), 0, len(v) - 1)
        out = np.where((y >= lo) & (y <= hi), _safe_log(v[idx]), -np.inf)
        return out if out.shape else float(out)

    def sample(self, rng, size=None):
        masses = self._masses()
        p = masses / masses.sum()
        idx = rng.choice(len(p), size=size, p=p)
        if isinstance(self.ref, CountingMeasure):
            return self.ref.atom_array()[idx]
        cell = (self.ref.hi - self.ref.lo) / len(p)
        return self.ref.lo + (idx + rng.random(np.shape(idx) or None)) * cell

    @property
    def is_discrete(self):
        return isinstance(self.ref, CountingMeasure)

    def support_interval(self):
        if isinstance(self.ref, LebesgueInterval):
            return (self.ref.lo, self.ref.hi)
        raise DomainError("atomic tabulated density has no interval support")

    def atoms(self):
        if isinstance(self.ref, CountingMeasure):
            return tuple(self.ref.atoms)
        return None


@dataclass(frozen=True)
class ReferenceUniform(ResponseDensity):
    """The normalized reference measure nu/K as a response density."""

    ref: ReferenceMeasure

    family = "reference-uniform"

    def logpdf(self, y):
        return self.ref.log_weight(y) - math.log(self.ref.total_mass)

    def sample(self, rng, size=None):
        return self.ref.sample_normalized(rng, size=size)

    @property
    def is_discrete(self):
        return self.ref.is_discrete

    def support_interval(self):
        if isinstance(self.ref, LebesgueInterval):
            return (self.ref.lo, self.ref.hi)
        if isinstance(self.ref, WeightedLebesgue):
            return self.ref.support
        raise DomainError("discrete reference has no interval support")

    def atoms(self):
        if isinstance(self.ref, CountingMeasure):
            return tuple(self.ref.atoms)
        return None

    def count_cap(self, eps=1e-14):
        if isinstance(self.ref, WeightedCounting):
            # tail of 2/(pi(1+y^2)) beyond T is ~ 2/(pi T)
            return int(2.0 / (math.pi * eps * self.ref.total_mass)) + 1
        raise DomainError("count_cap only defined for integer-supported references")


@dataclass(frozen=True)
class Mixture(ResponseDensity):
    """Finite mixture, kept exact (no grid collapse).  Nested mixtures are
    flattened at construction so smoothing then mixing stays flat."""

    components: tuple
    weights: tuple

    family = "mixture"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise DomainError("mixture weights must be a probability vector")
        if len(self.components) != len(w):
            raise ConfigError("components and weights must have equal length")
        comps, wts = [], []
        for c, wi in zip(self.components, w):
            if isinstance(c, Mixture):
                comps.extend(c.components)
                wts.extend(wi * np.asarray(c.weights, dtype=float))
            else:
                comps.append(c)
                wts.append(float(wi))
        object.__setattr__(self, "components", tuple(comps))
        object.__setattr__(self, "weights", tuple(float(x) for x in wts))

    def logpdf(self, y):
        y = np.asarray(y, dtype=float)
        logs = np.stack([np.broadcast_to(c.logpdf(y), y.shape) for c in self.components])
        logw = _safe_log(np.asarray(self.weights, dtype=float))[:, None] if y.shape else _safe_log(
            np.asarray(self.weights, dtype=float)
        )
        if y.shape:
            from scipy.special import logsumexp

            return logsumexp(logs + logw, axis=0)
        from scipy.special import logsumexp

        return float(logsumexp(logs.ravel() + logw))

    def sample(self, rng, size=None):
        w = np.asarray(self.weights, dtype=float)
        if size is None:
            return self.components[rng.choice(len(w), p=w)].sample(rng)
        n = int(np.prod(size))
        idx = rng.choice(len(w), size=n, p=w)
        out = np.empty(n, dtype=float)
        for k, c in enumerate(self.components):
            mask = idx == k
            if mask.any():
                out[mask] = np.asarray(c.sample(rng, size=int(mask.sum())), dtype=float)
        return out.reshape(size)

    @property
    def is_discrete(self):
        return all(c.is_discrete for c in self.components)

    def support_interval(self):
        los, his = zip(*(c.support_interval() for c in self.components))
        return (min(los), max(his))

    def atoms(self):
        out = set()
        for c in self.components:
            a = c.atoms()
            if a is None:
                return None
            out.update(a)
        return tuple(sorted(out))

    def count_cap(self, eps=1e-14):
        return max(c.count_cap(eps) for c in self.components)


# ---------------------------------------------------------------------------
# module-level operations
# ---------------------------------------------------------------------------


def smooth(q: ResponseDensity, alpha: float, ref: ReferenceMeasure) -> ResponseDensity:
    """alpha-smoothing: the density (q + alpha/K)/(1 + alpha) w.r.t. nu.

    Equivalently the mixture (1/(1+alpha)) q + (alpha/(1+alpha)) nu/K, which
    is how general families are represented.  Families that are closed under
    mixing with nu/K (Bernoulli/Multinomial on matching atoms, Tabulated)
    stay in their family.  The result is bounded below by alpha/(K(1+alpha))
    in nu-density; alpha = 0 returns q unchanged.
    """
    if alpha < 0:
        raise DomainError("smoothing level must be nonnegative")
    if alpha == 0:
        return q
    lam = 1.0 / (1.0 + alpha)
    if isinstance(q, Bernoulli) and isinstance(ref, CountingMeasure) and tuple(ref.atoms) == (0, 1):
        u1 = ref.weights[1] / ref.total_mass
        return Bernoulli(lam * q.mean + (1 - lam) * u1)
    if isinstance(q, Multinomial) and isinstance(ref, CountingMeasure) and len(ref.atoms) == len(q.probs):
        u = ref.weight_array() / ref.total_mass
        return Multinomial(tuple(lam * np.asarray(q.probs) + (1 - lam) * u))
    if isinstance(q, Tabulated) and q.ref == ref:
        vals = (np.asarray(q.values, dtype=float) + alpha / ref.total_mass) / (1.0 + alpha)
        return Tabulated(ref, tuple(vals))
    return Mixture((q, ReferenceUniform(ref)), (lam, 1.0 - lam))


def log_density(q: ResponseDensity, y) -> float:
    """Natural-log density of q at y w.r.t. the natural base measure.

    Raises ``DomainError`` when y is outside the support of q.
    """
    v = q.logpdf(y)
    if np.ndim(v) == 0 and not np.isfinite(v):
        raise DomainError(f"response {y!r} outside the support")
    return v


def nu_log_density(q: ResponseDensity, y, ref: ReferenceMeasure):
    """Log density of q at y with respect to the reference measure nu."""
    return q.logpdf(y) - ref.log_weight(y)


def sample_response(q: ResponseDensity, rng: np.random.Generator, size=None):
    """Draw from q; exact samplers for named families, inverse-CDF on grids."""
    return q.sample(rng, size=size)


def normalization(q: ResponseDensity, ref: ReferenceMeasure) -> float:
    """Integral/sum of q against its base measure over the support of nu.

    Used by validity checks: must be 1 within 1e-8 for every constructed
    density.  Continuous families are integrated by adaptive quadrature.
    """
    if q.is_discrete:
        a = q.atoms()
        if a is not None:
            return float(np.sum(q.pdf(np.asarray(a))))
        cap = q.count_cap(1e-14)
        ys = np.arange(cap + 1, dtype=float)
        return float(np.sum(q.pdf(ys)))
    from scipy.integrate import quad

    lo, hi = q.support_interval()
    val, _ = quad(q.pdf, lo, hi, epsabs=1e-11, epsrel=1e-11, limit=200)
    return float(val)


def _safe_log(x):
    with np.errstate(divide="ignore"):
        return np.log(x)
