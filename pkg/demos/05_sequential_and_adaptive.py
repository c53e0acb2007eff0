# Epoch-doubling sequential prediction and adaptive model aggregation.
#
# The sequential predictor re-covers the class at exponentially growing
# epochs, each cover built only from the previous epoch's covariates; its
# round-averaged predictor converts cumulative regret into batch risk.
# The adaptive estimator splits the sample in thirds and runs an outer
# posterior over candidate model classes, paying only log(1/prior) extra.

import math

import numpy as np

from condest.estimators import fit_adaptive, sequential_predict, nu_loglik_matrix
from condest.harness import expected_losses, sample_covariates, sample_responses
from condest.models import BernoulliThresholdClass, GaussianLinearClass

rng = np.random.default_rng(11)

# --- sequential prediction on a threshold class
cls = BernoulliThresholdClass()
truth = cls.member(0.2, 0.3, 0.7)
n = 256
xs = sample_covariates(cls.default_covariates(), n, rng)
ys = sample_responses(truth, xs, rng)
out = sequential_predict(
    xs, ys, lambda xp: cls.discretize(0.25, xs=xp, threshold_cap=17), cls.ref
)
print("epoch starts:", out.boundaries)
truth_lognu = nu_loglik_matrix([truth], xs, ys, cls.ref, 0.0)[0]
regret = float(np.sum(truth_lognu - out.per_round_lognu))
risk = expected_losses(truth, out.cesaro, cls.default_covariates(), cls.ref, rng, 2000)[0]
print(f"cumulative regret {regret:.2f} >= n x Cesaro risk {n * risk:.2f} (online-to-batch)")

# --- adaptive aggregation over three nested Gaussian classes
specs = [GaussianLinearClass(w_bound=w) for w in (0.125, 1.0, 8.0)]
truth_g = specs[1].member([0.5])  # representable only by classes 2 and 3
prior = np.array([1.0, 1 / 4, 1 / 9])
prior = prior / prior.sum()
res = 0.25 / (2 * math.sqrt(2))
m = 3 * 256
xs = sample_covariates(specs[1].default_covariates(), m, rng)
ys = sample_responses(truth_g, xs, rng)
ad = fit_adaptive([lambda x, s=s: s.discretize(res, xs=x) for s in specs], prior, xs, ys, specs[0].ref)
print("\nadaptive posterior over candidate classes:", np.round(ad.outer_cesaro, 3))
for i, est in enumerate(ad.per_model):
    r = expected_losses(truth_g, est, specs[1].default_covariates(), specs[0].ref, rng, 1000)[0]
    print(f"  class {i + 1} (W={specs[i].w_bound}): per-model KL risk {r:.5f}")
r_ad = expected_losses(truth_g, ad.predictor(), specs[1].default_covariates(), specs[0].ref, rng, 1000)[0]
print(f"  adaptive KL risk {r_ad:.5f}")
