"""Reference measures on the response space.

Every response density in this package is a probability distribution on a
response space Y, understood as a density with respect to a fixed reference
measure nu.  The divergences (KL, Hellinger, L1) do not depend on the choice
of nu, but three things do:

* the total mass K = nu(Y), which enters the smoothing operator
  T_alpha q = (q + alpha/K) / (1 + alpha);
* the normalized reference nu/K, the density the smoother mixes in;
* log densities with respect to nu, which appear in absolute log-loss
  bookkeeping (a ratio of two nu-densities is again measure independent).

Four kinds of reference measure cover every model class in the package:

* ``CountingMeasure`` -- a finite set of atoms with positive weights
  (classification responses; K = sum of weights);
* ``LebesgueInterval`` -- Lebesgue measure on a bounded interval (K = length);
* ``WeightedLebesgue``  -- a weight density on R or [0, inf); instances are
  provided for the Cauchy weight used with Gaussian responses and a Gamma
  weight used with Gamma responses (both have K = 1 and slightly heavier
  tails than the model family, which is what keeps densities bounded);
* ``WeightedCounting`` -- summable weights on the nonnegative integers,
  covering Poisson responses with the heavy-tailed weight 2/(pi(1+y^2)).

All instances are immutable and hashable; measure equality is structural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

__all__ = [
    "ReferenceMeasure",
    "CountingMeasure",
    "LebesgueInterval",
    "WeightedLebesgue",
    "WeightedCounting",
    "cauchy_reference",
    "gamma_reference",
    "poisson_reference",
    "binary_uniform_reference",
]


class ReferenceMeasure:
    """Common API for reference measures.

    Subclasses provide ``total_mass``, ``log_weight`` (log density of nu with
    respect to the natural base measure: Lebesgue for continuous kinds, unit
    counting for discrete kinds), ``sample_normalized`` (draws from nu/K), and
    support predicates.
    """

    kind: str = "abstract"

    @property
    def total_mass(self) -> float:
        raise NotImplementedError

    @property
    def is_discrete(self) -> bool:
        raise NotImplementedError

    def log_weight(self, y):
        raise NotImplementedError

    def weight(self, y):
        return np.exp(self.log_weight(y))

    def sample_normalized(self, rng: np.random.Generator, size=None):
        """Sample from the probability measure nu / K."""
        raise NotImplementedError

    def contains(self, y) -> bool:
        raise NotImplementedError


@dataclass(frozen=True)
class CountingMeasure(ReferenceMeasure):
    """Weighted counting measure on a finite set of atoms."""

    atoms: tuple
    weights: tuple

    kind = "counting"

    def __post_init__(self):
        if len(self.atoms) != len(self.weights):
            raise ValueError("atoms and weights must have equal length")
        if any(w <= 0 for w in self.weights):
            raise ValueError("atom weights must be positive")

    @property
    def total_mass(self) -> float:
        return float(sum(self.weights))

    @property
    def is_discrete(self) -> bool:
        return True

    def atom_array(self):
        return np.asarray(self.atoms, dtype=float)

    def weight_array(self):
        return np.asarray(self.weights, dtype=float)

    def log_weight(self, y):
        y = np.asarray(y)
        out = np.full(y.shape, -np.inf, dtype=float)
        for a, w in zip(self.atoms, self.weights):
            out = np.where(y == a, math.log(w), out)
        return out if out.shape else float(out)

    def sample_normalized(self, rng, size=None):
        w = self.weight_array()
        idx = rng.choice(len(self.atoms), size=size, p=w / w.sum())
        return self.atom_array()[idx]

    def contains(self, y) -> bool:
        return bool(np.all(np.isin(np.asarray(y), self.atom_array())))


@dataclass(frozen=True)
class LebesgueInterval(ReferenceMeasure):
    """Lebesgue measure on [lo, hi]."""

    lo: float
    hi: float

    kind = "lebesgue"

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError("interval must have positive length")

    @property
    def total_mass(self) -> float:
        return self.hi - self.lo

    @property
    def is_discrete(self) -> bool:
        return False

    def log_weight(self, y):
        y = np.asarray(y, dtype=float)
        out = np.where((y >= self.lo) & (y <= self.hi), 0.0, -np.inf)
        return out if out.shape else float(out)

    def sample_normalized(self, rng, size=None):
        return rng.uniform(self.lo, self.hi, size=size)

    def contains(self, y) -> bool:
        y = np.asarray(y, dtype=float)
        return bool(np.all((y >= self.lo) & (y <= self.hi)))


@dataclass(frozen=True)
class WeightedLebesgue(ReferenceMeasure):
    """A named weight density on a continuous support.

    ``shape`` parametrizes the family: ``cauchy`` is 1/(pi(1+y^2)) on R and
    ``gamma`` is the Gamma(a, b) density on [0, inf).  Both integrate to 1,
    so ``total_mass`` is 1 and nu is itself a probability measure.
    """

    shape: str
    params: tuple = field(default=())

    kind = "weighted-lebesgue"

    @property
    def total_mass(self) -> float:
        return 1.0

    @property
    def is_discrete(self) -> bool:
        return False

    @property
    def support(self):
        return (-np.inf, np.inf) if self.shape == "cauchy" else (0.0, np.inf)

    def log_weight(self, y):
        if self.shape == "cauchy":
            if np.ndim(y) == 0:
                return -math.log(math.pi) - math.log1p(float(y) ** 2)
            y = np.asarray(y, dtype=float)
            return -np.log(np.pi) - np.log1p(y * y)
        if self.shape == "gamma":
            a, scale = self.params
            norm = math.lgamma(a) + a * math.log(scale)
            if np.ndim(y) == 0:
                y = float(y)
                if y < 0 or (y == 0 and a > 1):
                    return -math.inf
                if y == 0:
                    return math.inf if a < 1 else -norm
                return (a - 1.0) * math.log(y) - y / scale - norm
            y = np.asarray(y, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(
                    y > 0, (a - 1.0) * np.log(np.where(y > 0, y, 1.0)) - y / scale - norm, -np.inf
                )
        raise ValueError(f"unknown weight shape {self.shape!r}")

    def sample_normalized(self, rng, size=None):
        if self.shape == "cauchy":
            return rng.standard_cauchy(size=size)
        a, scale = self.params
        return rng.gamma(a, scale, size=size)

    def contains(self, y) -> bool:
        if self.shape == "cauchy":
            return True
        return bool(np.all(np.asarray(y, dtype=float) >= 0))


# Tail cutoff for enumerating the weighted counting measure: atoms beyond
# this index carry total nu-mass < 1e-13 for the 2/(pi(1+y^2)) weight only
# after ~1e13 terms, so the cumulative table is capped and the remainder is
# folded into the cap atom when sampling (never when integrating: series
# summation for divergences uses the model tails, which decay fast).
_WC_SAMPLE_CAP = 100_000


@dataclass(frozen=True)
class WeightedCounting(ReferenceMeasure):
    """Heavy-tailed weights w(y) = 2/(pi(1+y^2)) on y = 0, 1, 2, ...

    The total mass has the closed form 1/pi + coth(pi) via the classical
    series sum_{y>=1} 1/(1+y^2) = (pi coth(pi) - 1)/2.
    """

    kind = "weighted-counting"

    @property
    def total_mass(self) -> float:
        return 1.0 / math.pi + 1.0 / math.tanh(math.pi)

    @property
    def is_discrete(self) -> bool:
        return True

    def log_weight(self, y):
        y = np.asarray(y, dtype=float)
        out = np.where(
            (y >= 0) & (y == np.floor(y)),
            math.log(2.0 / math.pi) - np.log1p(y * y),
            -np.inf,
        )
        return out if out.shape else float(out)

    def sample_normalized(self, rng, size=None):
        ys = np.arange(_WC_SAMPLE_CAP)
        w = (2.0 / np.pi) / (1.0 + ys.astype(float) ** 2)
        p = w / self.total_mass
        p[-1] += 1.0 - p.sum()  # fold the truncated tail into the cap atom
        return rng.choice(ys, size=size, p=p)

    def contains(self, y) -> bool:
        y = np.asarray(y, dtype=float)
        return bool(np.all((y >= 0) & (y == np.floor(y))))


def cauchy_reference() -> WeightedLebesgue:
    """The t_1 weight used with Gaussian response families (K = 1)."""
    return WeightedLebesgue("cauchy")


def gamma_reference(shape: float, scale: float) -> WeightedLebesgue:
    """Gamma(shape, scale) weight used with Gamma response families (K = 1)."""
    return WeightedLebesgue("gamma", (float(shape), float(scale)))


def poisson_reference() -> WeightedCounting:
    """Heavy-tailed counting weight used with Poisson response families."""
    return WeightedCounting()


def binary_uniform_reference() -> CountingMeasure:
    """Uniform probability reference on {0, 1}: K = 1, density bound B = 2."""
    return CountingMeasure(atoms=(0, 1), weights=(0.5, 0.5))
