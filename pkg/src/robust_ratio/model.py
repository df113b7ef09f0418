"""Regression through the origin with error scale ``sigma * |x_i|**theta``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .densities import ErrorDensitySpec, StandardNormal, log_density
from .errors import DatasetError, ParameterDomainError


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float).ravel()
        y = np.array(self.y, dtype=float).ravel()
        if x.shape != y.shape:
            raise DatasetError(f"x and y lengths differ ({x.size} vs {y.size})")
        if x.size == 0:
            raise DatasetError("dataset is empty")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise DatasetError("dataset contains non-finite values")
        zero = np.flatnonzero(x == 0)
        if zero.size:
            raise DatasetError(f"x must be nonzero; x[{zero[0]}] == 0", )
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.size

    def with_y(self, index: int, value: float) -> "Dataset":
        y = self.y.copy()
        y[index] = value
        return Dataset(self.x, y)

    def scale(self) -> float:
        """Median of ``|y_i / x_i|``, or 1 when that is zero."""
        s = float(np.median(np.abs(self.y / self.x)))
        return s if s > 0 and math.isfinite(s) else 1.0


class Prior(Enum):
    FLAT = "flat"
    INVERSE_SIGMA = "inv-sigma"


@dataclass(frozen=True)
class ModelConfig:
    theta: float = 0.5
    error: ErrorDensitySpec = field(default_factory=StandardNormal)
    prior: Prior = Prior.FLAT

    @property
    def label(self) -> str:
        return self.error.label


@dataclass(frozen=True)
class ParamPoint:
    beta: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ParameterDomainError(f"sigma must be positive, got {self.sigma}")


def _check_sigma(sigma):
    if np.any(np.asarray(sigma) <= 0):
        raise ParameterDomainError("sigma must be positive")


def log_likelihood(config: ModelConfig, data: Dataset, p: ParamPoint) -> float:
    return float(log_likelihood_at(config, data, p.beta, p.sigma))


def log_likelihood_at(config: ModelConfig, data: Dataset, beta, sigma):
    """Vectorized log-likelihood; ``beta`` and ``sigma`` broadcast together.

    Data points run along a new trailing axis, so e.g. ``beta[:, None]`` and
    ``sigma[None, :]`` give a full lattice.
    """
    beta = np.asarray(beta, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    _check_sigma(sigma)
    log_x_scale = config.theta * np.log(np.abs(data.x))
    x_scale = np.exp(log_x_scale)
    b = beta[..., None]
    s = sigma[..., None]
    z = (data.y - b * data.x) / (s * x_scale)
    terms = log_density(config.error, z) - log_x_scale
    return terms.sum(axis=-1) - data.n * np.log(sigma)


def log_prior(config: ModelConfig, sigma):
    if config.prior is Prior.INVERSE_SIGMA:
        return -np.log(sigma)
    return np.zeros_like(np.asarray(sigma, dtype=float))


def log_posterior_unnorm(config: ModelConfig, data: Dataset, p: ParamPoint) -> float:
    """Log-likelihood plus log-prior; the marginal likelihood is not subtracted."""
    return float(log_posterior_at(config, data, p.beta, p.sigma))


def log_posterior_at(config: ModelConfig, data: Dataset, beta, sigma):
    return log_likelihood_at(config, data, beta, sigma) + log_prior(config, np.asarray(sigma, float))


def classical_weights(theta: float, x) -> np.ndarray:
    """Weights ``|x_i|^(2(1-theta))`` normalized to sum to one."""
    x = np.asarray(x, dtype=float)
    if np.any(x == 0):
        raise DatasetError("x must be nonzero")
    logw = 2.0 * (1.0 - theta) * np.log(np.abs(x))
    w = np.exp(logw - logw.max())
    return w / w.sum()


def classical_beta_hat(theta: float, data: Dataset) -> float:
    """Gaussian maximum-likelihood slope: weighted average of ``y_i / x_i``."""
    w = classical_weights(theta, data.x)
    return float(np.sum(w * (data.y / data.x)))
