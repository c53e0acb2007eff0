"""Bernoulli-mean model classes built from localized bumps.

Two families live here.

``BumpGridClass``
    Means 1/2 + level * phi(.) on a uniform grid of M cells over [0, 1],
    one on/off bump per cell, with the Hoelder-gamma profile
    phi(u) = 2^(2 gamma) u^gamma (1-u)^gamma.  With level = (1/M)^gamma the
    class is gamma-Hoelder with constant 1, and the 2^M on/off patterns are
    pairwise separated in empirical Hellinger distance, which makes the
    class a measurable stand-in for a nonparametric smoothness ball at grid
    resolution M.

``WiggleClass``
    The hard class for maximum likelihood: means

        1/2 + (lam/2) zigzag(x) + lam^2 * sum_i sign_i * pulse_eta(z_i - x)

    on [-1/2, 1/2], where zigzag is a fixed plateau/ramp profile, pulse_eta
    is an odd triangular wiggle supported on [-eta, eta], the bump width is
    tied to the offset by eta^gamma = 2^(1-gamma) lam^2, and the centers
    z_i must keep the bumps disjoint and inside the plateau regions
    [-3/8, -1/8] u [1/8, 3/8] (the ``admissible_centers`` predicate).  Every
    member maps into [7/16, 9/16] and is gamma-Hoelder with constant 1; the
    zigzag ramp gives any nonzero offset a detectable Hellinger cost, while
    the per-sample-point wiggles let the likelihood be inflated for free,
    which is exactly how the MLE is lured into overfitting.

Both classes use the uniform binary reference (K = 1, density bound B = 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .densities import Bernoulli
from .errors import CapacityError, DomainError
from .reference import binary_uniform_reference

__all__ = [
    "zigzag",
    "triangle_pulse",
    "eta_for",
    "admissible_centers",
    "separated_centers",
    "BumpGridModel",
    "BumpGridClass",
    "WiggleModel",
    "WiggleComponent",
    "WiggleBundle",
    "wiggle_bundle_mean",
    "WiggleClass",
]

PLATEAU_REGIONS = ((-3.0 / 8.0, -1.0 / 8.0), (1.0 / 8.0, 3.0 / 8.0))


def zigzag(x):
    """Plateau/ramp profile on [-1/2, 1/2]: ramps of slope +-2 joining
    plateaus at -1/4 and +1/4, zero at the endpoints; integral of its
    square is 1/24."""
    x = np.asarray(x, dtype=float)
    if np.any((x < -0.5 - 1e-12) | (x > 0.5 + 1e-12)):
        raise DomainError("zigzag argument outside [-1/2, 1/2]")
    out = np.select(
        [x <= -3.0 / 8.0, x <= -1.0 / 8.0, x <= 1.0 / 8.0, x <= 3.0 / 8.0],
        [-2.0 * x - 1.0, np.full_like(x, -0.25), 2.0 * x, np.full_like(x, 0.25)],
        default=-2.0 * x + 1.0,
    )
    return out if out.shape else float(out)


def triangle_pulse(eta: float, x):
    """Odd triangular wiggle: 0 outside [-eta, eta], piecewise linear with
    extrema -+1/2 at +-eta/2 and pulse(0) = 0; integrates to zero against
    any function constant on [-eta, eta]."""
    if eta <= 0:
        raise DomainError("pulse width eta must be positive")
    x = np.asarray(x, dtype=float)
    out = np.select(
        [x < -eta, x <= -eta / 2, x <= eta / 2, x <= eta],
        [np.zeros_like(x), 1.0 + x / eta, -x / eta, x / eta - 1.0],
        default=np.zeros_like(x),
    )
    return out if out.shape else float(out)


def eta_for(lam: float, gamma: float) -> float:
    """Bump width tied to the offset: eta^gamma = 2^(1-gamma) lam^2."""
    if lam <= 0:
        raise DomainError("offset lam must be positive to carry bumps")
    return (2.0 ** (1.0 - gamma) * lam * lam) ** (1.0 / gamma)


def admissible_centers(centers, eta: float) -> bool:
    """True when every (z - eta, z + eta) sits inside a plateau region and
    the intervals are pairwise disjoint."""
    zs = np.sort(np.asarray(centers, dtype=float))
    if zs.size == 0:
        return True
    inside = np.zeros(zs.shape, dtype=bool)
    for lo, hi in PLATEAU_REGIONS:
        inside |= (zs - eta >= lo) & (zs + eta <= hi)
    if not inside.all():
        return False
    return bool(np.all(np.diff(zs) >= 2 * eta))


def separated_centers(xs, eta: float, max_count: int | None = None):
    """Greedy left-to-right selection of centers z = x + eta/2 anchored at
    sample points, keeping bump intervals disjoint and inside the plateau
    regions.  Deterministic given the sample."""
    zs = []
    for lo, hi in PLATEAU_REGIONS:
        pts = np.sort(np.asarray(xs, dtype=float))
        pts = pts[(pts - eta / 2 >= lo) & (pts + 3 * eta / 2 <= hi)]
        last = -np.inf
        for x in pts:
            z = x + eta / 2
            if z - eta >= last:
                zs.append(z)
                last = z + eta
                if max_count is not None and len(zs) >= max_count:
                    return np.asarray(zs)
    return np.asarray(zs)


# ---------------------------------------------------------------------------
# on/off bump grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BumpGridModel:
    """Bernoulli-mean map 1/2 + sum_i bit_i * level * phi(cell coordinate)."""

    cells: int
    gamma: float
    level: float
    pattern: tuple  # bits, one per cell

    class_tag = "holder-bump"
    profile_kind = "bernoulli-mean"

    def mean(self, xs):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        h = 1.0 / self.cells
        idx = np.clip((xs / h).astype(int), 0, self.cells - 1)
        centers = (idx + 0.5) * h
        u = (np.abs(xs - centers) + h / 2) / h
        u = np.clip(u, 0.0, 1.0)
        phi = (2.0 ** (2 * self.gamma)) * (u**self.gamma) * ((1.0 - u) ** self.gamma)
        bits = np.asarray(self.pattern, dtype=float)[idx]
        return 0.5 + bits * self.level * phi

    def evaluate(self, x):
        return Bernoulli(float(self.mean(np.asarray([x]))[0]))

    def breakpoints(self):
        """Knots of the (generally non-linear) mean map: cell edges/centers."""
        h = 1.0 / self.cells
        pts = [0.0]
        for i in range(self.cells):
            pts.extend([(i + 0.5) * h, (i + 1.0) * h])
        return np.asarray(pts)


@dataclass(frozen=True)
class BumpGridClass:
    """On/off bump means over [0, 1]; effective entropy exponent 1/gamma."""

    cells: int
    gamma: float = 1.0
    level: float | None = None

    tag = "holder-bump"
    profile_kind = "bernoulli-mean"

    def __post_init__(self):
        if self.cells < 1:
            raise DomainError("need at least one cell")
        if not 0 < self.gamma <= 1:
            raise DomainError("gamma must lie in (0, 1]")

    def default_covariates(self):
        from .models import UniformInterval

        return UniformInterval(0.0, 1.0)

    @property
    def bump_level(self) -> float:
        if self.level is not None:
            return self.level
        return min((1.0 / self.cells) ** self.gamma, 0.5)

    @property
    def ref(self):
        return binary_uniform_reference()

    @property
    def density_bound(self) -> float:
        return 2.0

    def member(self, pattern) -> BumpGridModel:
        if len(pattern) != self.cells:
            raise DomainError("pattern length must equal the cell count")
        return BumpGridModel(self.cells, self.gamma, self.bump_level, tuple(int(b) for b in pattern))

    def discretize(self, resolution=None, xs=None, cap: int = 1 << 14):
        """All 2^cells on/off patterns, in integer order."""
        if 2**self.cells > cap:
            raise CapacityError(f"bump grid with {self.cells} cells exceeds the {cap}-member pool cap")
        pool = []
        for code in range(2**self.cells):
            bits = tuple((code >> i) & 1 for i in range(self.cells))
            pool.append(self.member(bits))
        return pool


# ---------------------------------------------------------------------------
# the hard class for maximum likelihood
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WiggleModel:
    """Single-offset member: 1/2 + (lam/2) zigzag + lam^2 signed wiggles."""

    gamma: float
    lam: float
    centers: tuple
    signs: tuple

    class_tag = "wiggle"
    profile_kind = "bernoulli-mean"

    def __post_init__(self):
        if not 0.0 <= self.lam <= 0.25:
            raise DomainError("offset lam must lie in [0, 1/4]")
        if len(self.centers) != len(self.signs):
            raise DomainError("one sign per center")
        if self.lam > 0 and len(self.centers):
            if not admissible_centers(self.centers, eta_for(self.lam, self.gamma)):
                raise DomainError("bump centers violate the disjoint-plateau constraint")

    @property
    def eta(self) -> float:
        return eta_for(self.lam, self.gamma) if self.lam > 0 else 0.0

    def mean(self, xs):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        if self.lam == 0.0:
            return np.full(xs.shape, 0.5)
        out = 0.5 + 0.5 * self.lam * zigzag(xs)
        if len(self.centers):
            zs = np.asarray(self.centers, dtype=float)
            order = np.argsort(zs)
            zs_sorted = zs[order]
            sg_sorted = np.asarray(self.signs, dtype=float)[order]
            # disjoint supports: at most the nearest center is active
            j = np.clip(np.searchsorted(zs_sorted, xs), 0, len(zs_sorted) - 1)
            jm = np.clip(j - 1, 0, len(zs_sorted) - 1)
            pick = np.abs(zs_sorted[j] - xs) <= np.abs(zs_sorted[jm] - xs)
            near = np.where(pick, j, jm)
            out = out + self.lam**2 * sg_sorted[near] * triangle_pulse(self.eta, zs_sorted[near] - xs)
        return out

    def evaluate(self, x):
        return Bernoulli(float(self.mean(np.asarray([x]))[0]))

    def breakpoints(self):
        """Knots of the piecewise-linear mean map on [-1/2, 1/2]."""
        pts = [-0.5, -3.0 / 8, -1.0 / 8, 1.0 / 8, 3.0 / 8, 0.5]
        e = self.eta
        for z in self.centers:
            pts.extend([z - e, z - e / 2, z + e / 2, z + e])
        return np.unique(np.clip(np.asarray(pts, dtype=float), -0.5, 0.5))


@dataclass(frozen=True)
class WiggleComponent:
    lam: float
    centers: tuple
    signs: tuple


@dataclass(frozen=True)
class WiggleBundle:
    """Convex combination of wiggle members (the theory-side object)."""

    gamma: float
    weights: tuple
    components: tuple  # WiggleComponent

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise DomainError("bundle weights must be a probability vector")
        for c in self.components:
            if not 0.0 <= c.lam <= 0.25:
                raise DomainError("offset lam must lie in [0, 1/4]")
            if c.lam > 0 and len(c.centers):
                if not admissible_centers(c.centers, eta_for(c.lam, self.gamma)):
                    raise DomainError("bump centers violate the disjoint-plateau constraint")

    @property
    def lam_bar(self) -> float:
        return float(sum(w * c.lam for w, c in zip(self.weights, self.components)))


def wiggle_bundle_mean(bundle: WiggleBundle, xs):
    """Mean map of a convex combination of wiggle members; lands in
    [7/16, 9/16] and is gamma-Hoelder with constant 1."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    out = np.full(xs.shape, 0.5)
    for w, comp in zip(bundle.weights, bundle.components):
        m = WiggleModel(bundle.gamma, comp.lam, tuple(comp.centers), tuple(comp.signs))
        out = out + w * (m.mean(xs) - 0.5)
    return out


@dataclass(frozen=True)
class WiggleClass:
    """Single-offset wiggle members over [-1/2, 1/2] with sample-anchored
    centers; the experiment class for MLE suboptimality."""

    gamma: float

    tag = "wiggle"
    profile_kind = "bernoulli-mean"

    def __post_init__(self):
        if not 0.0 < self.gamma < 0.5:
            raise DomainError("gamma must lie in (0, 1/2)")

    @property
    def ref(self):
        return binary_uniform_reference()

    @property
    def density_bound(self) -> float:
        return 2.0

    def default_covariates(self):
        from .models import UniformInterval

        return UniformInterval(-0.5, 0.5)

    def lam_grid(self, levels: int = 13) -> tuple:
        """Quarter-octave offset grid descending from the maximal 1/4; fine
        enough that the fitted offset tracks its theoretical scale smoothly."""
        return tuple(0.25 * 2.0 ** (-0.25 * j) for j in range(levels))

    def member(self, lam, centers=(), signs=()) -> WiggleModel:
        return WiggleModel(self.gamma, lam, tuple(centers), tuple(signs))

    def constant(self) -> WiggleModel:
        return WiggleModel(self.gamma, 0.0, (), ())

    def discretize(self, resolution=None, xs=None, cap: int = 4096, levels: int = 13, patterns: int = 2):
        """Offset grid x a small canonical sign-pattern set, plus the
        constant map.  Centers anchor to the supplied sample covariates
        (required); the member order puts the constant first so likelihood
        ties resolve toward it."""
        if xs is None:
            raise DomainError("wiggle pools need sample covariates for their centers")
        pool = [self.constant()]
        for lam in self.lam_grid(levels):
            zs = separated_centers(xs, eta_for(lam, self.gamma))
            if len(zs) == 0:
                continue
            base = [np.ones(len(zs)), -np.ones(len(zs))]
            alt = np.where(np.arange(len(zs)) % 2 == 0, 1.0, -1.0)
            base.extend([alt, -alt])
            for sg in base[:patterns]:
                pool.append(self.member(lam, tuple(zs), tuple(sg)))
                if len(pool) > cap:
                    raise CapacityError("wiggle pool exceeds its cap")
        return pool


def wiggle_grid_mle(cls: WiggleClass, xs, ys, levels: int = 13):
    """Exact grid MLE over the wiggle class with free bump inclusion/signs.

    For each offset lam on the grid the centers are the sample-anchored
    separated set, and because bump supports are disjoint the log likelihood
    separates across bumps: each bump's sign (or absence) is optimized
    independently, which equals the argmax over the full
    (lam, center-subset, sign-pattern) pool without enumerating it.  Ties
    resolve toward the constant map and then toward larger grid index.

    Returns (model, lam_hat).
    """
    from .divergences import ber_logpmf

    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    order = np.argsort(xs)
    xs_s, ys_s = xs[order], ys[order]
    best_ll = float(np.sum(ber_logpmf(np.full(xs.shape, 0.5), ys)))
    best_model = cls.constant()
    for lam in cls.lam_grid(levels):
        eta = eta_for(lam, cls.gamma)
        zs = separated_centers(xs_s, eta)
        m0 = 0.5 + 0.5 * lam * zigzag(xs_s)
        base = ber_logpmf(m0, ys_s)
        ll = float(base.sum())
        kept_z, kept_s = [], []
        if len(zs):
            lo = np.searchsorted(xs_s, zs - eta, side="left")
            hi = np.searchsorted(xs_s, zs + eta, side="right")
            counts = hi - lo
            active = counts > 0
            if active.any():
                # flatten every in-bump point with its bump id, one pass
                bump_id = np.repeat(np.arange(len(zs))[active], counts[active])
                pt = (
                    np.repeat(lo[active], counts[active])
                    + np.arange(counts[active].sum())
                    - np.repeat(np.cumsum(counts[active]) - counts[active], counts[active])
                )
                pulse = triangle_pulse(eta, zs[bump_id] - xs_s[pt])
                b = base[pt]
                up_t = ber_logpmf(m0[pt] + lam * lam * pulse, ys_s[pt]) - b
                dn_t = ber_logpmf(m0[pt] - lam * lam * pulse, ys_s[pt]) - b
                up = np.bincount(bump_id, weights=up_t, minlength=len(zs))
                dn = np.bincount(bump_id, weights=dn_t, minlength=len(zs))
                gain = np.maximum(up, dn)
                keep = gain > 0.0
                kept_z = [float(z) for z in zs[keep]]
                kept_s = [1.0 if u >= d else -1.0 for u, d in zip(up[keep], dn[keep])]
                ll += float(gain[keep].sum())
        if ll > best_ll + 1e-12:
            best_ll = ll
            best_model = cls.member(lam, tuple(kept_z), tuple(kept_s))
    return best_model, best_model.lam
