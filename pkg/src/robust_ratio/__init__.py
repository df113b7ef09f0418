"""Whole-robust Bayesian regression through the origin.

Heteroscedastic errors ``sigma * |x|**theta * eps`` with a normal, Student or
log-Pareto-tailed normal density for ``eps``; MAP fits, grid posteriors, HPD
intervals, ratio estimates and outlier diagnostics.
"""

from .densities import (LogParetoTailedNormal, ScaledStudent, StandardNormal, density,
                        log_density, make_spec, solve_phi, tail_ratio_diagnostic, total_mass)
from .errors import (DatasetError, MultimodalityError, NonIntegrablePosterior, NumericalFailure,
                     OptimizationFailure, ParameterDomainError)
from .model import (Dataset, ModelConfig, ParamPoint, Prior, classical_beta_hat,
                    classical_weights, log_likelihood, log_posterior_unnorm)
from .posterior import (FitSummary, GridSpec, Marginal, PosteriorGrid, build_posterior_grid, fit,
                        hpd_interval, l1_distance, log_marginal_likelihood, map_estimate, marginal,
                        quantile)
from .ratio import PopulationContext, population_mean_estimate, ratio_summary

__version__ = "0.1.0"
