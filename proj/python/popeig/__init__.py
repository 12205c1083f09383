"""Population eigenvalue estimation from sample covariance matrices.

Estimates the distinct eigenvalues of a population covariance matrix from one
realization of the sample covariance matrix when the sample count is only a
constant factor larger than the dimension, together with the asymptotic
covariance of the estimation errors (exact contour-integral form and a
plug-in residue estimate), Monte Carlo validation of the fluctuation law, and
a power-sensing application with one-sided confidence margins.
"""

from ._core import (
    InputError,
    NumericalError,
    PopulationModel,
    RadioScenario,
    confidence_margin,
    empirical_theta,
    estimate,
    estimate_from_eigenvalues,
    estimate_powers,
    limiting_theta,
    mu_roots,
    normal_upper_quantile,
    run_trials,
    sample_eigenvalues,
    scenario_to_model,
    separability,
    support_intervals,
)
from ._core import __version__

__all__ = [
    "InputError",
    "NumericalError",
    "PopulationModel",
    "RadioScenario",
    "confidence_margin",
    "empirical_theta",
    "estimate",
    "estimate_from_eigenvalues",
    "estimate_powers",
    "limiting_theta",
    "mu_roots",
    "normal_upper_quantile",
    "run_trials",
    "sample_eigenvalues",
    "scenario_to_model",
    "separability",
    "support_intervals",
    "__version__",
]
