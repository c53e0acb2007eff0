# Densities, divergences, and the smoothing operator.
#
# Every response density lives relative to a reference measure nu on the
# response space; divergences themselves are measure-free, but smoothing and
# log-loss bookkeeping are not.  This script walks the closed forms, the
# quadrature oracle, and the two lemmas that make smoothed aggregation work.

import numpy as np

from condest import (
    Bernoulli,
    Gaussian,
    Poisson,
    binary_uniform_reference,
    cauchy_reference,
    hellinger_sq,
    kl,
    l1_distance,
    poisson_reference,
    smooth,
    yang_kl_bound,
)

cref = cauchy_reference()  # heavy-tailed weight: Gaussians stay bounded
bref = binary_uniform_reference()

# closed forms vs the quadrature oracle
p, q = Gaussian(0.0, 1.0), Gaussian(2.0, 1.0)
closed = hellinger_sq(p, q, cref)
numeric = hellinger_sq(p, q, cref, method="numeric")
print("Gaussian d_H^2:", closed.value, f"({closed.method})")
print("  quadrature agrees to", abs(closed.value - numeric.value))
print("  spot value 1 - e^{-1/2} =", 1 - np.exp(-0.5))

print("Poisson KL(3, 5):", kl(Poisson(3.0), Poisson(5.0), poisson_reference()).value)
print("Bernoulli L1(0.2, 0.7):", l1_distance(Bernoulli(0.2), Bernoulli(0.7), bref).value)

# KL can be infinite; smoothing repairs it
degenerate = Bernoulli(1.0)
target = Bernoulli(0.5)
print("\nKL(Ber(0.5) || Ber(1)) =", kl(target, degenerate, bref).value)
sm = smooth(degenerate, 1.0 / 64, bref)
print("after 1/n-smoothing    =", kl(target, sm, bref).value)

# the smoothing lemma: d_H^2(p, T_alpha q) <= d_H^2(p, q) + alpha
alpha = 0.05
lhs = hellinger_sq(p, smooth(q, alpha, cref), cref).value
rhs = hellinger_sq(p, q, cref).value + alpha
print("\nsmoothing lemma:", lhs, "<=", rhs)

# the KL-vs-Hellinger bridge: with a bounded density ratio,
# KL <= 2 [2 + sup log ratio] d_H^2
a, b = Bernoulli(0.9), Bernoulli(0.4)
print("Yang bound:", kl(a, b, bref).value, "<=", yang_kl_bound(a, b, bref))
