"""Finite-population ratio and mean estimates from a fitted slope.

With ``theta = 1/2`` and positive ``x`` the slope is the population ratio
``sum(y) / sum(x)``; multiplying by a known mean ``mu_x`` gives the ratio
estimator of the mean of ``y``.  Because that is a monotone map of the slope,
the slope's HPD interval maps straight onto an interval for the mean.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParameterDomainError
from .posterior import FitSummary


@dataclass(frozen=True)
class PopulationContext:
    mu_x: float
    N: Optional[int] = None

    def __post_init__(self):
        if not math.isfinite(self.mu_x):
            raise ParameterDomainError("mu_x must be finite")
        if self.N is not None and self.N < 1:
            raise ParameterDomainError("N must be a positive integer")


def ratio_summary(fit: FitSummary, use_map: bool = False) -> tuple:
    """(point, interval) for the population ratio; the point is the posterior median
    unless ``use_map`` asks for the MAP slope."""
    point = fit.map.beta if use_map else fit.median_beta
    return point, tuple(fit.hpd_beta)


def population_mean_estimate(fit: FitSummary, ctx: PopulationContext,
                             use_map: bool = False) -> tuple:
    point, (lo, hi) = ratio_summary(fit, use_map)
    m = ctx.mu_x
    lo, hi = lo * m, hi * m
    if m < 0:
        lo, hi = hi, lo
    return point * m, (lo, hi)


def ratio_weights(x) -> np.ndarray:
    """``x_i / sum(x)``: the weights that make sum(y)/sum(x) an average of y_i/x_i."""
    x = np.asarray(x, float)
    if np.any(x <= 0):
        warnings.warn("ratio weights assume positive x", RuntimeWarning)
    return x / x.sum()
