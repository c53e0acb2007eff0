"""condest: conditional density estimation via empirical Hellinger covers.

Subpackages
-----------
reference, densities, divergences
    Response-space measures, density families, and divergences.
models, bumps
    Conditional model classes, their discretizations, and covariate samplers.
entropy
    Empirical (d, q) covers/packings, entropy profiles, critical radii,
    local Rademacher complexity, and localization radii.
estimators
    The cover-aggregation estimator, maximum-likelihood variants, the
    epoch-doubling sequential predictor, and the model-adaptive mixer.
harness
    Monte Carlo KL/Hellinger risk and regret sweeps, the MLE-suboptimality
    experiment, and rate-slope fits with CSV/JSON artifacts.
cli
    Batch experiment driver (`condest` entry point).
"""

from . import densities, divergences, reference
from .densities import (
    Bernoulli,
    Gamma,
    Gaussian,
    Mixture,
    Multinomial,
    Poisson,
    ReferenceUniform,
    Tabulated,
    log_density,
    normalization,
    sample_response,
    smooth,
)
from .divergences import DivergenceValue, hellinger_sq, kl, l1_distance, yang_kl_bound
from .errors import (
    CapacityError,
    CondestError,
    ConfigError,
    DegenerateFitError,
    DomainError,
    NumericError,
    PreconditionError,
)
from .reference import (
    CountingMeasure,
    LebesgueInterval,
    WeightedCounting,
    WeightedLebesgue,
    binary_uniform_reference,
    cauchy_reference,
    gamma_reference,
    poisson_reference,
)

__version__ = "0.1.0"
