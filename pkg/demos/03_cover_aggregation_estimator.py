# The cover-aggregation estimator on a Gaussian linear model.
#
# Split the sample in half; build an empirical Hellinger cover of the
# candidate pool on the first half's covariates; run multiplicative posterior
# updates over the smoothed cover on the second half; average the posteriors
# over rounds.  The predictive density is an exact finite mixture.

import math

import numpy as np

from condest.estimators import estimator_to_json, fit_minimax
from condest.harness import expected_losses, sample_covariates, sample_responses
from condest.models import GaussianLinearClass

rng = np.random.default_rng(7)
cls = GaussianLinearClass(dim=1, x_bound=1.0, w_bound=1.0, sigma=1.0)
truth = cls.member([0.5])

n = 512
xs = sample_covariates(cls.default_covariates(), n, rng)
ys = sample_responses(truth, xs, rng)

resolution = 0.25 / (2 * math.sqrt(2))  # weight-lattice step 0.25
pool = cls.discretize(resolution, xs=xs[: n // 2])
print(f"pool of {len(pool)} members, weights", sorted(round(m.w[0], 3) for m in pool))

est = fit_minimax(pool, xs, ys, ref=cls.ref)
print(f"cover: {len(est.cover.members)} members at scale {est.cover.scale:.4f}, alpha={est.alpha:.4f}")

top = np.argsort(est.cesaro)[::-1][:3]
for g in top:
    print(f"  weight {est.cesaro[g]:.3f} on w = {est.cover.members[g].w[0]:+.3f}")

q = est.predict(0.8)
print("predictive density at x=0.8, y=0.4:", math.exp(q.logpdf(0.4)))

klv, hv, _ = expected_losses(truth, est, cls.default_covariates(), cls.ref, rng, 2000)
print(f"KL risk ~ {klv:.5f}, Hellinger risk ~ {hv:.5f}")

doc = estimator_to_json(est)
print("serialized estimator:", len(doc), "bytes of JSON")
