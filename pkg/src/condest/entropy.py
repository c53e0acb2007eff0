"""Empirical metrics on covariate samples: covers, packings, entropy
profiles, critical radii, and local Rademacher machinery.

The empirical (d, q) distance between two conditional models f, g on a
sample x_1..x_n is

    ((1/n) sum_t d(f(x_t), g(x_t))^q)^(1/q),

with base metric d either the Hellinger distance, the square-root KL
"distance", or the L1 distance, and q in [1, inf].  The workhorse is the
(Hellinger, 2) case, whose square is the sample average of squared
Hellinger distances.

Greedy maximal packings double as certified covers: a maximal set with
pairwise distances > eps leaves every pool member within eps of some kept
member, and the attached certificate (the max over the pool of the distance
to its nearest kept member) witnesses this on every call.  Exact
minimum-cover / maximum-packing searches are provided for small pools
(subset enumeration and branch-and-bound clique search) as oracles for the
pack/cover and local-entropy sandwiches.

Entropy profiles record log cover sizes on a scale grid, maximized over
covariate configurations.  The true definition takes a supremum over all
samples; the profile is therefore a lower estimate and says so in its
metadata.  The critical radius solves H(eps) = n eps^2 on the profile by
bisection with log-log interpolation.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import divergences as dv
from .errors import CapacityError, ConfigError, DomainError
from .models import pool_means

__all__ = [
    "MetricSpec",
    "EmpiricalCover",
    "EntropyProfile",
    "PoolGeometry",
    "empirical_distance",
    "greedy_pack_cover",
    "brute_min_cover",
    "brute_max_pack",
    "brute_max_local_pack",
    "local_pack",
    "entropy_profile",
    "profile_from_pool",
    "critical_radius",
    "rademacher_local",
    "localization_radius",
    "solve_fixed_point",
]

_BRUTE_CAP = 20


@dataclass(frozen=True)
class MetricSpec:
    """Empirical (d, q) metric: base in {hellinger, kl-root, l1}, q in [1, inf]."""

    base: str = "hellinger"
    q: float = 2.0
    xs: np.ndarray | None = None

    def __post_init__(self):
        if self.base not in ("hellinger", "kl-root", "l1"):
            raise ConfigError(f"unknown base metric {self.base!r}")
        if not (self.q >= 1):
            raise ConfigError("q must be at least 1")


@dataclass(frozen=True)
class EmpiricalCover:
    members: tuple
    indices: tuple
    scale: float
    certificate: float


@dataclass(frozen=True)
class EntropyProfile:
    """(eps, log cover size) pairs for fixed n, nonincreasing in eps."""

    eps: np.ndarray
    log_cover: np.ndarray
    log_pack: np.ndarray | None = None
    log_local_pack: np.ndarray | None = None
    n: int | None = None
    sup_attained: bool = False  # lower estimate: sup over sampled configs only

    def value(self, e: float) -> float:
        """Log cover size at scale e, log-log interpolated inside the grid."""
        eps = self.eps
        H = self.log_cover
        if e <= eps[0]:
            return float(H[0])
        if e >= eps[-1]:
            return float(H[-1])
        j = int(np.searchsorted(eps, e)) - 1
        e0, e1 = eps[j], eps[j + 1]
        h0, h1 = H[j], H[j + 1]
        t = (math.log(e) - math.log(e0)) / (math.log(e1) - math.log(e0))
        if h0 > 0 and h1 > 0:
            return math.exp((1 - t) * math.log(h0) + t * math.log(h1))
        return (1 - t) * h0 + t * h1

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("epsilon,log_cover,log_pack,log_local_pack\n")
        for i, e in enumerate(self.eps):
            lp = "" if self.log_pack is None else f"{self.log_pack[i]:.12g}"
            ll = "" if self.log_local_pack is None else f"{self.log_local_pack[i]:.12g}"
            buf.write(f"{e:.12g},{self.log_cover[i]:.12g},{lp},{ll}\n")
        return buf.getvalue()


# ---------------------------------------------------------------------------
# pairwise geometry
# ---------------------------------------------------------------------------

_KERNELS = {
    ("bernoulli-mean", "hellinger"): lambda a, b, extra: dv.ber_hellinger_sq(a, b),
    ("bernoulli-mean", "kl-root"): lambda a, b, extra: dv.ber_kl(a, b),
    ("bernoulli-mean", "l1"): lambda a, b, extra: dv.ber_l1(a, b) ** 2,
    ("gaussian-mean", "hellinger"): lambda a, b, extra: dv.gauss_hellinger_sq(a, b, extra),
    ("gaussian-mean", "kl-root"): lambda a, b, extra: dv.gauss_kl(a, b, extra),
    ("poisson-rate", "hellinger"): lambda a, b, extra: dv.pois_hellinger_sq(a, b),
    ("poisson-rate", "kl-root"): lambda a, b, extra: dv.pois_kl(a, b),
    ("gamma-scale", "hellinger"): lambda a, b, extra: dv.gamma_scale_hellinger_sq(a, b, extra),
    ("gamma-scale", "kl-root"): lambda a, b, extra: dv.gamma_scale_kl(a, b, extra),
}


class PoolGeometry:
    """Vectorized empirical distances for one (pool, spec) pair.

    Uses family parameter matrices when the pool supports them, falling back
    to per-point scalar divergences otherwise (small pools only).  Threshold
    pools get a dedicated count-based route: the empirical distance between
    two threshold members depends on the sample only through how many points
    fall below/between/above the two thresholds, so each pairwise distance
    is O(1) after one sort.
    """

    def __init__(self, pool, spec: MetricSpec, ref=None):
        if spec.xs is None:
            raise ConfigError("metric spec carries no covariate sample")
        self.pool = list(pool)
        self.spec = spec
        self.ref = ref
        self.n = len(np.atleast_1d(spec.xs))
        self._mat = None
        self._extra = None
        self._kind = None
        self._thr = None
        self._bits = None
        if (
            self.pool
            and spec.q == 2.0
            and spec.base in ("hellinger", "l1")
            and all(type(m).__name__ == "BumpGridModel" for m in self.pool)
            and len({(m.cells, m.gamma, m.level) for m in self.pool}) == 1
        ):
            # on/off bump patterns: the pointwise base distance between two
            # members depends only on the cell and on whether their bits
            # differ, so the squared empirical distance is a weighted
            # Hamming form sum_c 1[bits differ] v_c / n
            proto = self.pool[0]
            xs_arr = np.atleast_1d(np.asarray(spec.xs, dtype=float))
            on = type(proto)(proto.cells, proto.gamma, proto.level, (1,) * proto.cells)
            m1 = on.mean(xs_arr)
            m0 = np.full(xs_arr.shape, 0.5)
            if spec.base == "hellinger":
                pt = dv.ber_hellinger_sq(m1, m0)
            else:
                pt = dv.ber_l1(m1, m0) ** 2
            cell = np.clip((xs_arr * proto.cells).astype(int), 0, proto.cells - 1)
            v = np.bincount(cell, weights=pt, minlength=proto.cells)
            self._bits = {
                "B": np.asarray([m.pattern for m in self.pool], dtype=np.uint8),
                "v": v / self.n,
            }
            return
        if self.pool and all(type(m).__name__ == "ThresholdModel" for m in self.pool):
            xs_sorted = np.sort(np.asarray(np.atleast_1d(spec.xs), dtype=float))
            t = np.asarray([m.threshold for m in self.pool])
            a = np.asarray([m.theta0 for m in self.pool])
            b = np.asarray([m.theta1 for m in self.pool])
            thetas = np.unique(np.concatenate([a, b]))
            base = {
                "hellinger": dv.ber_hellinger_sq,
                "kl-root": dv.ber_kl,
                "l1": lambda u, v: dv.ber_l1(u, v) ** 2,
            }[spec.base]
            table = base(thetas[:, None], thetas[None, :])
            self._thr = {
                "k": np.searchsorted(xs_sorted, t, side="right").astype(float),
                "ai": np.searchsorted(thetas, a),
                "bi": np.searchsorted(thetas, b),
                "table": table,
            }
            return
        try:
            kind, mat, extra = pool_means(self.pool, spec.xs)
            if (kind, spec.base) in _KERNELS:
                self._kind, self._mat, self._extra = kind, mat, extra
        except ConfigError:
            pass
        if self._mat is None and ref is None:
            raise ConfigError("generic pools need the reference measure for scalar distances")

    def _thr_dist_row(self, i, J):
        d = self._thr
        T = d["table"]
        ki, ai, bi = d["k"][i], d["ai"][i], d["bi"][i]
        kj, aj, bj = d["k"][J], d["ai"][J], d["bi"][J]
        lo = np.minimum(ki, kj)
        hi = np.maximum(ki, kj)
        s_low = T[ai, aj]
        s_high = T[bi, bj]
        # points between the two thresholds see (b_i, a_j) when t_i < t_j
        s_mid = np.where(ki <= kj, T[bi, aj], T[ai, bj])
        q = self.spec.q
        if math.isinf(q):
            vals = np.stack([s_low, s_mid, s_high])
            counts = np.stack([lo, hi - lo, np.full_like(lo, self.n) - hi])
            return np.sqrt(np.max(np.where(counts > 0, vals, 0.0), axis=0))
        if q == 2.0:
            return np.sqrt((lo * s_low + (hi - lo) * s_mid + (self.n - hi) * s_high) / self.n)
        p = q / 2.0
        return ((lo * s_low**p + (hi - lo) * s_mid**p + (self.n - hi) * s_high**p) / self.n) ** (1.0 / q)

    # squared base distances (hellinger^2, kl, or l1^2) between row i and rows J
    def _base_sq(self, i, J):
        kind = self._kind
        if kind is not None:
            key = (kind, self.spec.base)
            if key in _KERNELS:
                return _KERNELS[key](self._mat[i][None, :], self._mat[J], self._extra)
            # l1 for non-bernoulli families: no vector kernel, fall through
        ops = {"hellinger": dv.hellinger_sq, "kl-root": dv.kl, "l1": dv.l1_distance}
        op = ops[self.spec.base]
        xs = np.atleast_1d(self.spec.xs)
        out = np.empty((len(J), self.n))
        fi = [self.pool[i].evaluate(float(x) if np.ndim(x) == 0 else x) for x in xs]
        for r, j in enumerate(J):
            for t, x in enumerate(xs):
                v = op(fi[t], self.pool[j].evaluate(float(x) if np.ndim(x) == 0 else x), self.ref).value
                out[r, t] = v * v if self.spec.base == "l1" else v
        return out

    def dist_row(self, i, J=None):
        """Empirical (d, q) distances from member i to members J (default all)."""
        J = np.arange(len(self.pool)) if J is None else np.asarray(J)
        if self._bits is not None:
            diff = self._bits["B"][J] != self._bits["B"][i][None, :]
            return np.sqrt(diff @ self._bits["v"])
        if self._thr is not None:
            return self._thr_dist_row(i, J)
        sq = self._base_sq(i, J)
        q = self.spec.q
        if math.isinf(q):
            return np.sqrt(np.max(sq, axis=1))
        if q == 2.0:
            return np.sqrt(np.mean(sq, axis=1))
        d = np.sqrt(sq)
        return np.mean(d**q, axis=1) ** (1.0 / q)

    def dist(self, i, j) -> float:
        return float(self.dist_row(i, np.asarray([j]))[0])


def empirical_distance(f, g, spec: MetricSpec, ref=None) -> float:
    """Empirical (d, q) distance between two conditional models."""
    geo = PoolGeometry([f, g], spec, ref=ref)
    return geo.dist(0, 1)


# ---------------------------------------------------------------------------
# greedy and exact covers/packings
# ---------------------------------------------------------------------------


def greedy_pack_cover(pool, spec: MetricSpec, eps: float, ref=None, geometry=None) -> EmpiricalCover:
    """Maximal greedy packing at scale eps, certified as an eps-cover.

    Members are scanned in pool order with deterministic tie-breaking; a
    member is kept iff its distance to every kept member exceeds eps, so the
    kept set has pairwise distances > eps by construction.  Maximality makes
    it an eps-cover of the pool; the recomputed certificate (max over the
    pool of the nearest kept distance) is attached and asserted <= eps.
    """
    if eps <= 0:
        raise DomainError("cover scale must be positive")
    if not pool:
        return EmpiricalCover((), (), eps, 0.0)
    geo = geometry if geometry is not None else PoolGeometry(pool, spec, ref=ref)
    m = len(geo.pool)
    mindist = np.full(m, np.inf)
    kept = []
    for i in range(m):
        if mindist[i] > eps:
            kept.append(i)
            mindist = np.minimum(mindist, geo.dist_row(i))
    cert = float(np.max(mindist)) if m else 0.0
    assert cert <= eps + 1e-12, "greedy packing failed to cover its pool"
    return EmpiricalCover(tuple(geo.pool[i] for i in kept), tuple(kept), eps, cert)


def _distance_matrix(pool, spec, ref=None):
    geo = PoolGeometry(pool, spec, ref=ref)
    m = len(pool)
    D = np.zeros((m, m))
    for i in range(m):
        D[i] = geo.dist_row(i)
    return (D + D.T) / 2.0


def brute_min_cover(pool, spec: MetricSpec, eps: float, ref=None) -> EmpiricalCover:
    """Exact minimum eps-cover by subset enumeration ordered by size."""
    from itertools import combinations

    m = len(pool)
    if m > _BRUTE_CAP:
        raise CapacityError(f"exact cover search capped at {_BRUTE_CAP} members")
    if m == 0:
        return EmpiricalCover((), (), eps, 0.0)
    D = _distance_matrix(pool, spec, ref=ref)
    for k in range(1, m + 1):
        for subset in combinations(range(m), k):
            cert = float(D[:, subset].min(axis=1).max())
            if cert <= eps:
                return EmpiricalCover(tuple(pool[i] for i in subset), tuple(subset), eps, cert)
    raise RuntimeError("unreachable: the full pool always covers itself")


def _max_clique(adj: np.ndarray):
    """Indices of a maximum clique of the boolean adjacency matrix."""
    m = adj.shape[0]
    masks = [int("".join("1" if adj[i, j] else "0" for j in reversed(range(m))), 2) for i in range(m)]
    best: list[int] = []

    def grow(current, candidates):
        nonlocal best
        if not candidates:
            if len(current) > len(best):
                best = current[:]
            return
        if len(current) + len(candidates) <= len(best):
            return
        cand = candidates
        while cand:
            if len(current) + len(cand) <= len(best):
                return
            v = cand[0]
            cand = cand[1:]
            grow(current + [v], [u for u in cand if masks[v] >> u & 1])

    grow([], list(range(m)))
    return best


def brute_max_pack(pool, spec: MetricSpec, eps: float, ref=None):
    """Exact maximum packing (pairwise distances > eps) via clique search."""
    m = len(pool)
    if m > _BRUTE_CAP:
        raise CapacityError(f"exact packing search capped at {_BRUTE_CAP} members")
    if m == 0:
        return []
    D = _distance_matrix(pool, spec, ref=ref)
    adj = D > eps
    np.fill_diagonal(adj, False)
    idx = _max_clique(adj)
    return [pool[i] for i in sorted(idx)]


def brute_max_local_pack(pool, ref_index: int, spec: MetricSpec, eps: float, ref=None):
    """Exact maximum local packing at the given reference member: members
    within eps of it, pairwise distances >= eps/2."""
    m = len(pool)
    if m > _BRUTE_CAP:
        raise CapacityError(f"exact local packing search capped at {_BRUTE_CAP} members")
    D = _distance_matrix(pool, spec, ref=ref)
    cand = [i for i in range(m) if D[ref_index, i] <= eps]
    sub = D[np.ix_(cand, cand)]
    adj = sub >= eps / 2.0
    np.fill_diagonal(adj, False)
    idx = _max_clique(adj)
    return [pool[cand[i]] for i in sorted(idx)]


def local_pack(pool, f, spec: MetricSpec, eps: float, ref=None):
    """Greedy maximal local packing at f: members within eps of f, pairwise
    >= eps/2, f first so the result always contains it."""
    pool = list(pool)
    try:
        fi = pool.index(f)
    except ValueError:
        pool = [f] + pool
        fi = 0
    geo = PoolGeometry(pool, spec, ref=ref)
    from_f = geo.dist_row(fi)
    order = [fi] + [i for i in range(len(pool)) if i != fi]
    kept = []
    mind = np.full(len(pool), np.inf)
    for i in order:
        if from_f[i] <= eps and mind[i] >= eps / 2.0:
            kept.append(i)
            mind = np.minimum(mind, geo.dist_row(i))
    return [pool[i] for i in kept]


# ---------------------------------------------------------------------------
# entropy profiles and the critical radius
# ---------------------------------------------------------------------------


def profile_from_pool(pool, spec_base, xs, eps_grid, ref=None, with_packing=False) -> EntropyProfile:
    """Greedy log cover sizes of one pool on one covariate sample."""
    eps_grid = np.sort(np.asarray(eps_grid, dtype=float))
    spec = MetricSpec(spec_base, 2.0, np.atleast_1d(xs))
    geo = PoolGeometry(pool, spec, ref=ref)
    log_cover = np.empty(len(eps_grid))
    log_pack = np.empty(len(eps_grid)) if with_packing else None
    log_local = np.empty(len(eps_grid)) if with_packing else None
    for k, e in enumerate(eps_grid):
        cov = greedy_pack_cover(pool, spec, float(e), geometry=geo)
        log_cover[k] = math.log(max(1, len(cov.members)))
        if with_packing:
            log_pack[k] = log_cover[k]  # greedy maximal packing size
            lp = local_pack(pool, pool[0], spec, float(e), ref=ref)
            log_local[k] = math.log(max(1, len(lp)))
    # enforce monotonicity: running max as eps decreases
    for k in range(len(eps_grid) - 2, -1, -1):
        log_cover[k] = max(log_cover[k], log_cover[k + 1])
    return EntropyProfile(eps_grid, log_cover, log_pack, log_local, n=len(np.atleast_1d(xs)))


def entropy_profile(
    spec,
    n: int,
    eps_grid,
    rng,
    configs: int = 3,
    pool_resolution: float | None = None,
    extra_samples=(),
    covariates=None,
    with_packing: bool = False,
    pool_kwargs: dict | None = None,
) -> EntropyProfile:
    """Empirical entropy profile of a model class at sample size n.

    Maximizes the greedy cover size over ``configs`` sampled covariate
    configurations plus any user-supplied worst-case configurations; the
    result is a lower estimate of the sup-over-samples entropy and is
    flagged as such.
    """
    eps_grid = np.sort(np.asarray(eps_grid, dtype=float))
    dist = covariates if covariates is not None else spec.default_covariates()
    samples = [dist.sample(n, rng) for _ in range(configs)]
    samples.extend(np.atleast_1d(s) for s in extra_samples)
    best = None
    for xs in samples:
        pool = spec.discretize(pool_resolution, xs=xs, **(pool_kwargs or {}))
        prof = profile_from_pool(pool, "hellinger", xs, eps_grid, ref=spec.ref, with_packing=with_packing)
        if best is None:
            best = prof
        else:
            best = EntropyProfile(
                eps_grid,
                np.maximum(best.log_cover, prof.log_cover),
                None if best.log_pack is None else np.maximum(best.log_pack, prof.log_pack),
                None if best.log_local_pack is None else np.maximum(best.log_local_pack, prof.log_local_pack),
                n=n,
            )
    return best


def critical_radius(profile: EntropyProfile, n: int) -> float:
    """The scale eps_n with H(eps_n) = n eps_n^2 on the profile.

    H is nonincreasing and n eps^2 increasing, so the root is unique when it
    exists; bisection on the log-log interpolated profile.  Raises
    ``DomainError`` when the grid brackets no sign change.
    """
    eps = profile.eps

    def g(e):
        return profile.value(e) - n * e * e

    lo, hi = float(eps[0]), float(eps[-1])
    if g(lo) < 0 or g(hi) > 0:
        raise DomainError("critical radius outside the profile grid")
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# local Rademacher complexity and localization radii
# ---------------------------------------------------------------------------


def rademacher_local(values: np.ndarray, r: float, draws: int, rng) -> tuple[float, float]:
    """Monte Carlo local Rademacher complexity of a finite function family.

    ``values[k, t] = h_k(x_t)`` evaluates the family on the sample.  Rows
    with sample mean > r are dropped (the localization); the estimate is the
    sign-average of sup_k (1/n) sum_t sigma_t h_k(x_t) over ``draws``
    Rademacher vectors, returned with its standard error.
    """
    values = np.atleast_2d(np.asarray(values, dtype=float))
    m, n = values.shape
    keep = values.mean(axis=1) <= r + 1e-12
    if not keep.any():
        return 0.0, 0.0
    V = values[keep]
    sups = np.empty(draws)
    for b in range(draws):
        sigma = rng.choice((-1.0, 1.0), size=n)
        sups[b] = np.max(V @ sigma) / n
    se = float(sups.std(ddof=1) / math.sqrt(draws)) if draws > 1 else 0.0
    return float(sups.mean()), se


def solve_fixed_point(phi, tol: float = 1e-10, hi: float = 1.0) -> float:
    """Largest fixed point of a localization function phi.

    phi is nonnegative, nondecreasing, and phi(r)/sqrt(r) is nonincreasing,
    so iterating r <- phi(r) from any r with phi(r) <= r converges down to
    the largest fixed point.
    """
    for _ in range(200):
        if phi(hi) <= hi:
            break
        hi *= 4.0
    r = hi
    for _ in range(10_000):
        nxt = phi(r)
        if abs(nxt - r) <= tol:
            return float(nxt)
        r = nxt
    if abs(phi(r) - r) > tol:
        raise DomainError("fixed-point iteration failed to converge")
    return float(r)


def localization_radius(variant: str, n: int, **params) -> float:
    """Localization radii for the squared-Hellinger difference family.

    variants:
      * ``finite``:      289 log|F| / n                   (card=...)
      * ``parametric``:  (289 p / n) log(4 C sqrt(n) / (17 sqrt(p)))
                         requires n > (12/C)^2 p          (p=..., C=...)
      * ``dudley``:      972 (log 2n)^3 (inf_gamma {4 gamma +
                         (17/sqrt(n)) int_gamma^1 sqrt(H(rho/2)) drho})^2
                         (profile=EntropyProfile)
      * ``fixed-point``: largest r with r = phi(r)        (phi=...)
    """
    if variant == "finite":
        card = params["card"]
        if card < 1:
            raise DomainError("cardinality must be at least 1")
        return 0.0 if card == 1 else 289.0 * math.log(card) / n
    if variant == "parametric":
        p, C = params["p"], params["C"]
        if n <= (12.0 / C) ** 2 * p:
            raise DomainError("parametric radius needs n > (12/C)^2 p")
        return (289.0 * p / n) * math.log(4.0 * C * math.sqrt(n) / (17.0 * math.sqrt(p)))
    if variant == "dudley":
        profile: EntropyProfile = params["profile"]
        gammas = np.unique(np.concatenate([profile.eps, np.linspace(1e-4, 1.0, 64)]))
        gammas = gammas[(gammas > 0) & (gammas < 1.0)]
        best = np.inf
        rho = np.linspace(0.0, 1.0, 513)[1:]
        H = np.array([profile.value(r / 2.0) for r in rho])
        for g in gammas:
            mask = rho >= g
            integral = np.trapezoid(np.sqrt(H[mask]), rho[mask]) if mask.sum() > 1 else 0.0
            best = min(best, 4.0 * g + 17.0 / math.sqrt(n) * integral)
        return 972.0 * math.log(2 * n) ** 3 * best**2
    if variant == "fixed-point":
        return solve_fixed_point(params["phi"])
    raise ConfigError(f"unknown localization variant {variant!r}")
