"""Outlier sweeps and limit diagnostics for the robustness results.

``threshold_sweep`` moves one response across a range of values and tracks
the MAP under several error models.  ``convergence_trace`` sends chosen
responses to +/- omega and measures how far the full-data posterior stays
from the posterior of the remaining points.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .densities import log_density
from .errors import DatasetError, OptimizationFailure
from .model import Dataset, ModelConfig, ParamPoint, log_likelihood_at
from .posterior import build_posterior_grid, l1_distance, map_estimate


def exclude(data: Dataset, indices) -> Dataset:
    """Drop rows (zero-based) and keep the survivors in order."""
    idx = sorted(set(int(i) for i in indices))
    for i in idx:
        if not 0 <= i < data.n:
            raise DatasetError(f"index {i} out of range for n={data.n}")
    if len(idx) >= data.n:
        raise DatasetError("cannot exclude every row")
    if not idx:
        return data
    keep = np.setdiff1d(np.arange(data.n), idx)
    return Dataset(data.x[keep], data.y[keep])


# --------------------------------------------------------------------------- #
# Threshold sweep
# --------------------------------------------------------------------------- #

@dataclass
class SweepResult:
    y_values: np.ndarray
    models: list
    beta_hat: np.ndarray   # (n_values, n_models)
    sigma_hat: np.ndarray

    def column(self, model: str):
        j = self.models.index(model)
        return self.beta_hat[:, j], self.sigma_hat[:, j]

    def threshold(self, model: str) -> tuple:
        """Location of the largest slope estimate and the sweep step as its uncertainty."""
        b, _ = self.column(model)
        step = float(np.diff(self.y_values).min()) if self.y_values.size > 1 else 0.0
        return float(self.y_values[int(np.argmax(b))]), step

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["y_value", "model", "beta_hat", "sigma_hat"])
        for i, v in enumerate(self.y_values):
            for j, m in enumerate(self.models):
                w.writerow([_g17(v), m, _g17(self.beta_hat[i, j]), _g17(self.sigma_hat[i, j])])
        return buf.getvalue()


def _g17(v) -> str:
    return format(float(v), ".17g")


def _sweep_point(args):
    config, data, index, value, init = args
    try:
        return map_estimate(config, data.with_y(index, value), init=init)
    except OptimizationFailure as exc:
        raise OptimizationFailure(f"sweep failed for model {config.label} at y={value}: {exc}",
                                  best=exc.best) from exc


def threshold_sweep(configs: Sequence[ModelConfig], data: Dataset, index: int, values,
                    workers: int = 1, serial: Optional[bool] = None) -> SweepResult:
    """MAP per model as ``y[index]`` takes each value in ``values`` (strictly increasing).

    Serially, each point warm-starts from the previous optimum in addition to
    the default starts.  With ``workers > 1`` points are independent jobs.
    """
    values = np.asarray(values, dtype=float)
    if not 0 <= index < data.n:
        raise DatasetError(f"index {index} out of range for n={data.n}")
    if values.size == 0 or not np.all(np.isfinite(values)):
        raise DatasetError("sweep values must be finite and non-empty")
    if np.any(np.diff(values) <= 0):
        raise DatasetError("sweep values must be strictly increasing")
    if serial is None:
        serial = workers <= 1
    beta = np.empty((values.size, len(configs)))
    sigma = np.empty_like(beta)
    for j, cfg in enumerate(configs):
        if serial:
            prev = None
            for i, v in enumerate(values):
                prev = _sweep_point((cfg, data, index, v, prev))
                beta[i, j], sigma[i, j] = prev.beta, prev.sigma
        else:
            jobs = [(cfg, data, index, v, None) for v in values]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for i, p in enumerate(pool.map(_sweep_point, jobs)):
                    beta[i, j], sigma[i, j] = p.beta, p.sigma
    return SweepResult(values, [c.label for c in configs], beta, sigma)


# --------------------------------------------------------------------------- #
# Omega traces
# --------------------------------------------------------------------------- #

@dataclass
class ConvergenceTrace:
    omegas: np.ndarray
    l1: np.ndarray
    log_marginal_ratio: np.ndarray
    notes: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["omega", "l1", "log_marginal_ratio"])
        for row in zip(self.omegas, self.l1, self.log_marginal_ratio):
            w.writerow([_g17(v) for v in row])
        return buf.getvalue()


def place_outliers(data: Dataset, indices, directions, omega: float) -> Dataset:
    """Set ``y_i = direction_i * omega`` for each outlier index."""
    y = data.y.copy()
    for i, d in zip(indices, directions):
        y[i] = math.copysign(omega, d)
    return Dataset(data.x, y)


def outlier_counts(data: Dataset, indices, directions) -> tuple:
    """(k, m, p): non-outliers, negative-slope and positive-slope outliers."""
    m = p = 0
    for i, d in zip(indices, directions):
        # a large y on a positive x pulls the slope up
        if (d > 0) == (data.x[i] > 0):
            p += 1
        else:
            m += 1
    return data.n - len(indices), m, p


def _trace_point(args):
    config, data, indices, directions, omega, reduced_grid, workers = args
    full_data = place_outliers(data, indices, directions, omega)
    full = build_posterior_grid(config, full_data, workers=workers)
    l1 = l1_distance(full, reduced_grid, workers=workers) if indices else 0.0
    ratio = (full.log_norm_const
             - float(np.sum(log_density(config.error, full_data.y[list(indices)])))
             - reduced_grid.log_norm_const)
    return l1, ratio


def convergence_trace(config: ModelConfig, data: Dataset, outlier_indices, directions, omegas,
                      workers: int = 1) -> ConvergenceTrace:
    """L1 gap and log-marginal ratio as the outliers are sent to +/- omega.

    The log ratio is ``log m(y_n) - sum_outliers log f(y_i) - log m(y_k)``,
    which tends to 0 for log-regularly varying errors.
    """
    indices = [int(i) for i in outlier_indices]
    directions = [1 if d > 0 else -1 for d in directions]
    if len(directions) != len(indices):
        raise DatasetError("one direction is needed per outlier index")
    omegas = np.asarray(omegas, dtype=float)
    if np.any(np.diff(omegas) <= 0):
        raise DatasetError("omegas must be strictly increasing")
    notes = []
    k, m, p = outlier_counts(data, indices, directions)
    if indices and not k > max(m, p):
        msg = f"k={k} does not exceed max(m={m}, p={p}); the limit results need not hold"
        warnings.warn(msg, RuntimeWarning)
        notes.append(msg)

    if not indices:
        zeros = np.zeros(omegas.size)
        return ConvergenceTrace(omegas, zeros, zeros.copy(), notes)

    reduced = build_posterior_grid(config, exclude(data, indices), workers=workers)
    jobs = [(config, data, indices, directions, w, reduced, 1) for w in omegas]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_trace_point, jobs))
    else:
        rows = [_trace_point(j) for j in jobs]
    l1 = np.array([r[0] for r in rows])
    ratio = np.array([r[1] for r in rows])
    return ConvergenceTrace(omegas, l1, ratio, notes)


def likelihood_profile_gap(config: ModelConfig, data: Dataset, outlier_indices, directions,
                           omega: float, box: tuple, reference: ParamPoint, n: int = 101) -> float:
    """Max over a box of |[l_n - l_n(ref)] - [l_k - l_k(ref)]| with outliers at omega.

    ``l_n`` and ``l_k`` are the full-data and reduced-data log-likelihoods;
    ``box`` is ``(beta_lo, beta_hi, sigma_lo, sigma_hi)``.  The gap tends to 0
    when the likelihood, rescaled by the marginal ratio, converges uniformly.
    """
    full = place_outliers(data, outlier_indices, directions, omega)
    reduced = exclude(data, outlier_indices)
    b = np.linspace(box[0], box[1], n)[:, None]
    s = np.geomspace(box[2], box[3], n)[None, :]
    ln = log_likelihood_at(config, full, b, s)
    lk = log_likelihood_at(config, reduced, b, s)
    ln_ref = float(log_likelihood_at(config, full, reference.beta, reference.sigma))
    lk_ref = float(log_likelihood_at(config, reduced, reference.beta, reference.sigma))
    return float(np.max(np.abs((ln - ln_ref) - (lk - lk_ref))))
