# Empirical covers, packings, entropy profiles, and the critical radius.
#
# The statistical complexity that drives every rate in this package is the
# empirical (Hellinger, 2) entropy: log of the smallest cover of the model
# class under the sample-averaged Hellinger metric.  Greedy maximal packings
# double as certified covers; exact brute-force searches check them on small
# instances; the critical radius solves H(eps) = n eps^2.

import numpy as np

from condest.bumps import BumpGridClass
from condest.entropy import (
    MetricSpec,
    brute_max_pack,
    brute_min_cover,
    critical_radius,
    entropy_profile,
    greedy_pack_cover,
)
from condest.models import BernoulliThresholdClass

rng = np.random.default_rng(0)

# a small threshold pool on a random sample
cls = BernoulliThresholdClass()
xs = rng.uniform(-1, 1, 6)
pool = [cls.member(rng.uniform(-1, 1), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)) for _ in range(10)]
spec = MetricSpec("hellinger", 2.0, xs)

eps = 0.25
cover = greedy_pack_cover(pool, spec, eps)
print(f"greedy cover at eps={eps}: {len(cover.members)} members, certificate {cover.certificate:.4f}")

exact = brute_min_cover(pool, spec, eps)
print(f"exact minimum cover: {len(exact.members)} members")
print(f"pack/cover sandwich: {len(brute_max_pack(pool, spec, 2 * eps))} <= "
      f"{len(exact.members)} <= {len(brute_max_pack(pool, spec, eps))}")

# the on/off bump class: 2^M patterns, entropy M log 2 below the flip scale
bump = BumpGridClass(cells=4, gamma=1.0)
prof = entropy_profile(bump, n=64, eps_grid=np.geomspace(0.002, 1.0, 14), rng=rng, configs=2)
print("\nbump-class profile (eps, log cover):")
for e, h in zip(prof.eps, prof.log_cover):
    print(f"  {e:8.4f}  {h:6.3f}")
print("4 log 2 =", 4 * np.log(2))

r = critical_radius(prof, 64)
print("critical radius at n=64:", r, " (H(r) =", prof.value(r), "~ n r^2 =", 64 * r * r, ")")
