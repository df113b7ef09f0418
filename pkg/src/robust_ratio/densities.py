"""Symmetric error densities: standard normal, scaled Student and the
log-Pareto-tailed standard normal.

Every density is evaluated in the log domain; ``density`` is a thin wrapper.
The log-Pareto-tailed normal coincides with the standard normal on
``[-alpha, alpha]`` and has tails proportional to ``(1/|z|) (log|z|)^-phi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import integrate, stats
from scipy.special import gammaln

from .errors import NumericalFailure, ParameterDomainError

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class StandardNormal:
    label = "normal"


@dataclass(frozen=True)
class ScaledStudent:
    df: float = 10.0
    scale: float = 0.88
    label = "student"

    def __post_init__(self):
        if not (self.df > 0 and math.isfinite(self.df)):
            raise ParameterDomainError(f"Student df must be positive, got {self.df}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ParameterDomainError(f"Student scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class LogParetoTailedNormal:
    alpha: float = 1.96
    phi: float = None  # None -> the value that normalizes the density
    label = "lptn"

    def __post_init__(self):
        if not self.alpha > 1:
            raise ParameterDomainError(f"alpha must exceed 1, got {self.alpha}")
        if self.phi is None:
            object.__setattr__(self, "phi", solve_phi(self.alpha))
        if not self.phi > 1:
            raise ParameterDomainError(f"phi must exceed 1, got {self.phi}")

    @property
    def display_phi(self) -> str:
        return f"{self.phi:.2f}"


ErrorDensitySpec = Union[StandardNormal, ScaledStudent, LogParetoTailedNormal]


def normal_cdf(z: float) -> float:
    """Standard normal CDF through ``erfc`` (accurate in both tails)."""
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def solve_phi(alpha: float) -> float:
    """Return the tail exponent that makes the log-Pareto-tailed normal a density.

    With ``u = log z`` each tail integrates to ``K(alpha) alpha log(alpha) / (phi - 1)``
    where ``K`` is the standard normal pdf, so ``phi`` follows in closed form from
    the mass left outside ``[-alpha, alpha]`` by the normal core.
    """
    if not alpha > 1:
        raise ParameterDomainError(f"alpha must exceed 1, got {alpha}")
    log_k = -0.5 * alpha * alpha - LOG_SQRT_2PI
    outside = math.erfc(alpha / math.sqrt(2.0))  # 1 - (2 Phi(alpha) - 1)
    return 1.0 + 2.0 * math.exp(log_k) * alpha * math.log(alpha) / outside


def _student_log_const(df: float) -> float:
    return gammaln((df + 1) / 2) - gammaln(df / 2) - 0.5 * math.log(df * math.pi)


def log_density(spec: ErrorDensitySpec, z):
    """Log of the error density at ``z`` (scalar or array)."""
    a = np.abs(np.asarray(z, dtype=float))
    if isinstance(spec, StandardNormal):
        with np.errstate(over="ignore"):
            out = -0.5 * a * a - LOG_SQRT_2PI
    elif isinstance(spec, ScaledStudent):
        u = a / (spec.scale * math.sqrt(spec.df))
        # log(1 + u^2) without squaring u, which overflows far out in the tail
        with np.errstate(divide="ignore"):
            log1pu2 = np.logaddexp(0.0, 2.0 * np.log(u))
        out = (_student_log_const(spec.df) - math.log(spec.scale)
               - 0.5 * (spec.df + 1) * log1pu2)
    elif isinstance(spec, LogParetoTailedNormal):
        alpha, phi = spec.alpha, spec.phi
        log_edge = -0.5 * alpha * alpha - LOG_SQRT_2PI + math.log(alpha)
        tail = a > alpha
        # Guard the logs on the core branch; those entries are discarded below.
        at = np.where(tail, a, np.e)
        la = np.log(at)
        tail_val = log_edge - la + phi * (math.log(math.log(alpha)) - np.log(la))
        ac = np.where(tail, 0.0, a)
        out = np.where(tail, tail_val, -0.5 * ac * ac - LOG_SQRT_2PI)
    else:
        raise ParameterDomainError(f"unknown error density {spec!r}")
    if np.ndim(out) == 0:
        return float(out)
    return out


def density(spec: ErrorDensitySpec, z):
    return np.exp(log_density(spec, z))


def total_mass(spec: ErrorDensitySpec, tol: float = 1e-13) -> float:
    """Integrate the density over the real line.

    The log-Pareto tails decay like ``1 / (z (log z)^phi)``; they are integrated
    in ``v = log log z``, where the integrand falls off like ``exp((1 - phi) v)``.
    """
    def check(val, err):
        if not np.isfinite(val) or err > 1e-9:
            raise NumericalFailure(
                f"integration did not converge: estimate {val!r}, error bound {err!r}",
                estimate=val, error=err)
        return val

    if isinstance(spec, LogParetoTailedNormal):
        alpha = spec.alpha
        core, e1 = integrate.quad(lambda z: density(spec, z), 0.0, alpha,
                                  epsabs=tol, epsrel=tol)
        # v = log log z turns the tail into an exponentially decaying integrand
        log_edge = -0.5 * alpha * alpha - LOG_SQRT_2PI + math.log(alpha)
        log_log_alpha = math.log(math.log(alpha))

        def tail_integrand(v):
            # log(z f(z)) = log_edge + phi (log log alpha - log log z), and log log z = v
            return math.exp(log_edge + spec.phi * (log_log_alpha - v) + v)

        tail, e2 = integrate.quad(tail_integrand, math.log(math.log(alpha)), np.inf,
                                  epsabs=tol, epsrel=tol, limit=200)
        return 2.0 * check(core + tail, e1 + e2)
    if isinstance(spec, ScaledStudent):
        # split at a few scales so quad sees the bulk
        s = spec.scale
        a, e1 = integrate.quad(lambda z: density(spec, z), 0.0, 10 * s, epsabs=tol, epsrel=tol)
        b, e2 = integrate.quad(lambda z: density(spec, z), 10 * s, np.inf,
                               epsabs=tol, epsrel=tol, limit=200)
        return 2.0 * check(a + b, e1 + e2)
    val, err = integrate.quad(lambda z: density(spec, z), -np.inf, np.inf,
                              epsabs=tol, epsrel=tol)
    return check(val, err)


def interval_mass(spec: ErrorDensitySpec, half_width: float) -> float:
    """Mass of ``[-half_width, half_width]``."""
    if isinstance(spec, ScaledStudent):
        return 2.0 * stats.t.cdf(half_width / spec.scale, spec.df) - 1.0
    if isinstance(spec, StandardNormal) or half_width <= spec.alpha:
        return 2.0 * normal_cdf(half_width) - 1.0
    alpha, phi = spec.alpha, spec.phi
    core = 2.0 * normal_cdf(alpha) - 1.0
    k = math.exp(-0.5 * alpha * alpha - LOG_SQRT_2PI)
    la = math.log(alpha)
    # closed form of the tail integral between alpha and half_width
    part = k * alpha * la / (phi - 1) * (1.0 - (la / math.log(half_width)) ** (phi - 1))
    return core + 2.0 * part


def student_scale_for_quantile(df: float, q: float = 0.975, target: float = 1.96) -> float:
    """Scale that puts the ``q`` quantile of a Student(df) at ``target``."""
    return target / stats.t.ppf(q, df)


def tail_ratio_diagnostic(spec: ErrorDensitySpec, z: float, nu: float) -> float:
    """Return ``g(z**nu) / g(z)`` with ``g(z) = z f(z)``.

    For a log-regularly varying density with index ``rho`` this tends to
    ``nu**-rho`` as ``z`` grows; for the log-Pareto-tailed normal ``rho = phi``.
    """
    lower = max(spec.alpha, math.e) if isinstance(spec, LogParetoTailedNormal) else math.e
    if not z > lower:
        raise ParameterDomainError(f"z={z} is not in the tail region (need z > {lower:.4g})")
    if not nu > 0:
        raise ParameterDomainError("nu must be positive")
    log_z = math.log(z)
    # z**nu may overflow; only its logarithm is needed
    log_znu = nu * log_z
    lg_znu = log_znu + _log_density_from_log_abs(spec, log_znu)
    lg_z = log_z + log_density(spec, z)
    return math.exp(lg_znu - lg_z)


def _log_density_from_log_abs(spec: ErrorDensitySpec, log_a: float) -> float:
    if isinstance(spec, LogParetoTailedNormal) and log_a > math.log(spec.alpha):
        alpha, phi = spec.alpha, spec.phi
        return (-0.5 * alpha * alpha - LOG_SQRT_2PI + math.log(alpha) - log_a
                + phi * (math.log(math.log(alpha)) - math.log(log_a)))
    if isinstance(spec, ScaledStudent) and log_a > 300:
        lt = log_a - math.log(spec.scale)
        return (_student_log_const(spec.df) - math.log(spec.scale)
                - (spec.df + 1) * (lt - 0.5 * math.log(spec.df)))
    if log_a > 300:
        return -0.5 * math.exp(2 * log_a) - LOG_SQRT_2PI if log_a < 354 else -np.inf
    return log_density(spec, math.exp(log_a))


def make_spec(token: str) -> ErrorDensitySpec:
    """Calibrated density for a model token ``normal | student | lptn``."""
    if token == "normal":
        return StandardNormal()
    if token == "student":
        return ScaledStudent(10.0, 0.88)
    if token == "lptn":
        return LogParetoTailedNormal(1.96)
    raise ParameterDomainError(f"unknown model token {token!r}")
