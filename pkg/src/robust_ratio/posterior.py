"""MAP estimation and grid-quadrature posteriors over (beta, sigma).

The joint posterior has only two parameters, so it is evaluated on a
deterministic lattice (linear in beta, logarithmic in sigma) and normalized
with log-sum-exp.  Marginals, quantiles, HPD intervals, marginal likelihoods
and L1 distances are all read off that lattice.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .errors import (MultimodalityError, NonIntegrablePosterior, OptimizationFailure,
                     ParameterDomainError)
from .model import (Dataset, ModelConfig, ParamPoint, Prior, classical_beta_hat,
                    log_posterior_at)

SIGMA_FLOOR_REL = 1e-8
SIMPLEX_DIAMETER = 1e-9
MAX_EVALS = 10_000
TIE_TOL = 1e-9

BRACKET_DROP = 30.0
MAX_DOUBLINGS = 40
DEFAULT_CELLS = 512
EDGE_POINTS = 257


# --------------------------------------------------------------------------- #
# MAP
# --------------------------------------------------------------------------- #

def sigma_floor(data: Dataset) -> float:
    return SIGMA_FLOOR_REL * data.scale()


def _residual_sigma(config: ModelConfig, data: Dataset, beta: float, floor: float) -> float:
    r = np.abs(data.y - beta * data.x) / np.abs(data.x) ** config.theta
    return max(float(np.median(r)) / 0.6745, floor)


def default_starts(config: ModelConfig, data: Dataset) -> list:
    floor = sigma_floor(data)
    starts = []
    ratios = data.y / data.x
    for beta in (classical_beta_hat(config.theta, data), float(np.mean(ratios)),
                 float(np.median(ratios))):
        starts.append(ParamPoint(beta, _residual_sigma(config, data, beta, floor)))
    return starts


def _make_objective(config: ModelConfig, data: Dataset, floor: float):
    log_floor = math.log(floor)

    def neg_log_post(v):
        beta, log_sigma = v
        sigma = math.exp(max(log_sigma, log_floor))
        return -float(log_posterior_at(config, data, beta, sigma))

    return neg_log_post


def _simplex(start: ParamPoint, config: ModelConfig, data: Dataset) -> np.ndarray:
    x0 = np.array([start.beta, math.log(start.sigma)])
    # beta step ~ half the spread a single point's error implies on the slope
    spread = float(np.median(np.abs(data.x) ** config.theta / np.abs(data.x)))
    db = 0.5 * start.sigma * spread
    if not db > 0 or not math.isfinite(db):
        db = 0.1 * max(abs(start.beta), 1.0)
    return np.array([x0, x0 + [db, 0.0], x0 + [0.0, 0.3]])


def map_estimate(config: ModelConfig, data: Dataset, init: Optional[ParamPoint] = None,
                 extra_starts: Sequence[ParamPoint] = ()) -> ParamPoint:
    """Maximize the unnormalized log-posterior by multi-start Nelder-Mead.

    The search runs in ``(beta, log sigma)``.  Starts: ``init`` (if given),
    any ``extra_starts``, the classical weighted estimate, and the mean and the
    median of ``y/x``, each paired with a robust residual scale.  Each run
    stops when the simplex shrinks below 1e-9 or after 10^4 evaluations.

    The median start matters for heavy-tailed errors: their likelihood can have
    a second mode that absorbs outliers into a large scale.
    """
    if config.prior is Prior.FLAT and data.n <= 2:
        warnings.warn("flat prior with n <= 2: the posterior may be improper", RuntimeWarning)
    floor = sigma_floor(data)
    objective = _make_objective(config, data, floor)
    starts = ([init] if init is not None else []) + list(extra_starts) + default_starts(config, data)

    results = []
    best_any = None
    for s in starts:
        s = ParamPoint(s.beta, max(s.sigma, floor))
        res = minimize(objective, np.array([s.beta, math.log(s.sigma)]), method="Nelder-Mead",
                       options=dict(initial_simplex=_simplex(s, config, data),
                                    xatol=SIMPLEX_DIAMETER / 2, fatol=np.inf,
                                    maxfev=MAX_EVALS, maxiter=MAX_EVALS))
        cand = (float(res.fun), float(res.x[0]), max(float(res.x[1]), math.log(floor)))
        if best_any is None or cand[0] < best_any[0]:
            best_any = cand
        if res.success and np.isfinite(res.fun):
            results.append(cand)

    if not results:
        best = None
        if best_any is not None and np.isfinite(best_any[0]):
            best = ParamPoint(best_any[1], math.exp(best_any[2]))
        raise OptimizationFailure("no Nelder-Mead start converged", best=best)

    fmin = min(r[0] for r in results)
    tied = sorted((r[1], r[2]) for r in results if r[0] <= fmin + TIE_TOL)
    beta, log_sigma = tied[0]
    return ParamPoint(beta, math.exp(log_sigma))


# --------------------------------------------------------------------------- #
# Grids
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class GridSpec:
    beta_lo: float
    beta_hi: float
    sigma_lo: float
    sigma_hi: float
    n_beta: int = DEFAULT_CELLS
    n_sigma: int = DEFAULT_CELLS

    def __post_init__(self):
        if not self.beta_lo < self.beta_hi:
            raise ParameterDomainError("beta_lo must be below beta_hi")
        if not 0 < self.sigma_lo < self.sigma_hi:
            raise ParameterDomainError("need 0 < sigma_lo < sigma_hi")
        if self.n_beta < 16 or self.n_sigma < 16:
            raise ParameterDomainError("grids need at least 16 cells per axis")

    def beta_edges(self) -> np.ndarray:
        return np.linspace(self.beta_lo, self.beta_hi, self.n_beta + 1)

    def sigma_edges(self) -> np.ndarray:
        return np.geomspace(self.sigma_lo, self.sigma_hi, self.n_sigma + 1)

    def beta_centers(self) -> np.ndarray:
        e = self.beta_edges()
        return 0.5 * (e[1:] + e[:-1])

    def sigma_centers(self) -> np.ndarray:
        e = self.sigma_edges()
        return np.sqrt(e[1:] * e[:-1])

    def log_cell_area(self) -> np.ndarray:
        db = np.diff(self.beta_edges())
        ds = np.diff(self.sigma_edges())
        return np.log(db)[:, None] + np.log(ds)[None, :]

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.beta_lo, self.beta_hi, self.sigma_lo, self.sigma_hi,
                        self.n_beta * factor, self.n_sigma * factor)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PosteriorGrid:
    spec: GridSpec
    log_unnorm: np.ndarray
    log_norm_const: float
    cell_prob: np.ndarray
    config: ModelConfig
    data: Dataset


def evaluate_lattice(config: ModelConfig, data: Dataset, betas: np.ndarray, sigmas: np.ndarray,
                     workers: int = 1) -> np.ndarray:
    """Unnormalized log-posterior on ``betas x sigmas``, split by rows across threads.

    Every cell depends only on its own coordinates, so the result does not
    depend on ``workers``.
    """
    betas = np.asarray(betas, float)
    sigmas = np.asarray(sigmas, float)

    def rows(chunk):
        return log_posterior_at(config, data, chunk[:, None], sigmas[None, :])

    # bounded memory: a block of rows x sigmas x n doubles at a time
    block = max(1, int(4_000_000 // max(1, sigmas.size * data.n)))
    chunks = [betas[i:i + block] for i in range(0, betas.size, block)]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(rows, chunks))
    else:
        parts = [rows(c) for c in chunks]
    return np.concatenate(parts, axis=0)


def _normalize(spec: GridSpec, log_unnorm: np.ndarray):
    weighted = log_unnorm + spec.log_cell_area()
    log_c = float(logsumexp(weighted))
    if not math.isfinite(log_c):
        raise NonIntegrablePosterior("posterior has no finite mass on the grid")
    prob = np.exp(weighted - log_c)
    prob /= prob.sum()
    return log_c, prob


def grid_from_spec(config: ModelConfig, data: Dataset, spec: GridSpec,
                   workers: int = 1) -> PosteriorGrid:
    lu = evaluate_lattice(config, data, spec.beta_centers(), spec.sigma_centers(), workers)
    log_c, prob = _normalize(spec, lu)
    return PosteriorGrid(spec, lu, log_c, prob, config, data)


def auto_bracket(config: ModelConfig, data: Dataset, mode: ParamPoint,
                 n_beta: int = DEFAULT_CELLS, n_sigma: int = DEFAULT_CELLS) -> GridSpec:
    """Grid box around ``mode`` whose four edges sit >= 30 nats below the mode.

    Each side's half-width doubles independently until its edge clears the
    drop; more than 40 doublings on any side means the posterior is not
    behaving like an integrable density.  The lower sigma edge never goes
    below the sigma floor; exact-fit data would otherwise chase the spike at 0.
    """
    peak = float(log_posterior_at(config, data, mode.beta, mode.sigma))
    cut = peak - BRACKET_DROP
    spread = float(np.median(np.abs(data.x) ** config.theta / np.abs(data.x)))
    h0 = mode.sigma * spread / math.sqrt(data.n)
    if not h0 > 0 or not math.isfinite(h0):
        h0 = 1e-3 * max(abs(mode.beta), 1.0)
    half = {"b-": h0, "b+": h0, "s-": 0.25, "s+": 0.25}
    doublings = dict.fromkeys(half, 0)
    t = np.linspace(0.0, 1.0, EDGE_POINTS)
    floor = sigma_floor(data)

    while True:
        blo, bhi = mode.beta - half["b-"], mode.beta + half["b+"]
        slo, shi = mode.sigma * math.exp(-half["s-"]), mode.sigma * math.exp(half["s+"])
        at_floor = slo <= floor
        slo = max(slo, floor)
        bs = blo + (bhi - blo) * t
        ss = np.exp(math.log(slo) + (math.log(shi) - math.log(slo)) * t)
        edge_max = {
            "b-": np.max(log_posterior_at(config, data, blo, ss)),
            "b+": np.max(log_posterior_at(config, data, bhi, ss)),
            "s-": np.max(log_posterior_at(config, data, bs, slo)),
            "s+": np.max(log_posterior_at(config, data, bs, shi)),
        }
        open_sides = [k for k, v in edge_max.items()
                      if not v <= cut and not (k == "s-" and at_floor)]
        if not open_sides:
            return GridSpec(blo, bhi, slo, shi, n_beta, n_sigma)
        for k in open_sides:
            doublings[k] += 1
            if doublings[k] > MAX_DOUBLINGS:
                raise NonIntegrablePosterior(
                    f"bracket side {k} still within {BRACKET_DROP} nats of the mode after "
                    f"{MAX_DOUBLINGS} doublings")
            half[k] *= 2.0


def build_posterior_grid(config: ModelConfig, data: Dataset, spec: Optional[GridSpec] = None,
                         mode: Optional[ParamPoint] = None, workers: int = 1) -> PosteriorGrid:
    """Normalized posterior lattice; auto-bracketed around the MAP when ``spec`` is None."""
    min_n = 3 if config.prior is Prior.FLAT else 2
    if data.n < min_n:
        raise ParameterDomainError(
            f"posterior propriety needs n >= {min_n} under the {config.prior.value} prior")
    if spec is None:
        if mode is None:
            mode = map_estimate(config, data)
        spec = auto_bracket(config, data, mode)
    return grid_from_spec(config, data, spec, workers)


def log_marginal_likelihood(grid: PosteriorGrid) -> float:
    """Quadrature estimate of log m(y)."""
    return grid.log_norm_const


# --------------------------------------------------------------------------- #
# Marginals, quantiles, HPD
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class Marginal:
    """Discretized 1-D density: cell ``k`` spans ``edges[k]..edges[k+1]`` with mass ``probs[k]``."""
    values: np.ndarray
    probs: np.ndarray
    edges: np.ndarray

    @classmethod
    def from_values(cls, values, probs) -> "Marginal":
        v = np.asarray(values, float)
        if v.size == 1:
            edges = np.array([v[0] - 0.5, v[0] + 0.5])
        else:
            mid = 0.5 * (v[1:] + v[:-1])
            edges = np.concatenate([[v[0] - (mid[0] - v[0])], mid, [v[-1] + (v[-1] - mid[-1])]])
        return cls(v, np.asarray(probs, float), edges)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def density(self) -> np.ndarray:
        return self.probs / self.widths

    def cdf_at_edges(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.probs)])

    def cdf(self, v: float) -> float:
        return float(np.interp(v, self.edges, self.cdf_at_edges()))


def marginal(grid: PosteriorGrid, which: str) -> Marginal:
    which = which.lower()
    if which == "beta":
        return Marginal(grid.spec.beta_centers(), grid.cell_prob.sum(axis=1), grid.spec.beta_edges())
    if which == "sigma":
        return Marginal(grid.spec.sigma_centers(), grid.cell_prob.sum(axis=0), grid.spec.sigma_edges())
    raise ParameterDomainError(f"which must be 'beta' or 'sigma', got {which!r}")


def marginal_mode(marg: Marginal) -> float:
    """Mode of the discretized density, refined by a parabola through the
    log-density of the top cell and its neighbours."""
    dens = marg.density
    k = int(np.argmax(dens))
    if k == 0 or k == dens.size - 1 or np.any(dens[k - 1:k + 2] <= 0):
        return float(marg.values[k])
    x = marg.values[k - 1:k + 2]
    ly = np.log(dens[k - 1:k + 2])
    a, b, _ = np.polyfit(x - x[1], ly, 2)
    if a >= 0:
        return float(x[1])
    return float(x[1] - b / (2 * a))


def quantile(marg: Marginal, p: float) -> float:
    """Linear interpolation of the piecewise-linear CDF at level ``p``."""
    if not 0 < p < 1:
        raise ParameterDomainError(f"quantile level must be in (0, 1), got {p}")
    F = marg.cdf_at_edges()
    F = F / F[-1]
    # first edge where the CDF reaches p, then interpolate inside the preceding cell
    k = int(np.searchsorted(F, p, side="left"))
    k = min(max(k, 1), F.size - 1)
    f0, f1 = F[k - 1], F[k]
    e0, e1 = marg.edges[k - 1], marg.edges[k]
    if f1 <= f0:
        return float(e0)
    return float(e0 + (p - f0) / (f1 - f0) * (e1 - e0))


def _sign_changes(density: np.ndarray) -> list:
    smooth = np.convolve(density, np.ones(3) / 3.0, mode="same")
    d = np.diff(smooth)
    thresh = 1e-9 * float(np.max(smooth)) if smooth.size else 0.0
    signs = np.sign(np.where(np.abs(d) > thresh, d, 0.0))
    signs = signs[signs != 0]
    return [i for i in range(1, signs.size) if signs[i] != signs[i - 1]]


def _regions(mask: np.ndarray, edges: np.ndarray) -> list:
    out = []
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return out
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate([[idx[0]], idx[breaks + 1]])
    stops = np.concatenate([idx[breaks], [idx[-1]]])
    return [(float(edges[a]), float(edges[b + 1])) for a, b in zip(starts, stops)]


def hpd_interval(marg: Marginal, level: float = 0.95) -> tuple:
    """Shortest interval holding ``level`` mass of a unimodal discretized density.

    Cells are filled in order of decreasing density until the mass reaches
    ``level``; the surplus is then trimmed off the outer side of the last
    (lowest-density) cell.
    """
    if not 0 < level < 1:
        raise ParameterDomainError(f"level must be in (0, 1), got {level}")
    dens = marg.density
    probs = marg.probs / marg.probs.sum()
    order = np.argsort(-dens, kind="stable")
    cum = np.cumsum(probs[order])
    k = min(int(np.searchsorted(cum, level, side="left")), order.size - 1)
    chosen = np.zeros(dens.size, bool)
    chosen[order[:k + 1]] = True

    changes = _sign_changes(dens)
    regions = _regions(chosen, marg.edges)
    if len(changes) > 1 or len(regions) > 1:
        raise MultimodalityError("marginal is not unimodal", regions=regions)

    lo_i, hi_i = int(np.flatnonzero(chosen)[0]), int(np.flatnonzero(chosen)[-1])
    lo, hi = float(marg.edges[lo_i]), float(marg.edges[hi_i + 1])
    last = int(order[k])
    excess = max(float(cum[k]) - level, 0.0)
    frac = excess / probs[last] if probs[last] > 0 else 0.0
    width = float(marg.widths[last])
    if lo_i == hi_i:
        lo += 0.5 * frac * width
        hi -= 0.5 * frac * width
    elif last == lo_i:
        lo += frac * width
    elif last == hi_i:
        hi -= frac * width
    return float(lo), float(hi)


# --------------------------------------------------------------------------- #
# L1 distance
# --------------------------------------------------------------------------- #

def union_spec(a: GridSpec, b: GridSpec) -> GridSpec:
    return GridSpec(min(a.beta_lo, b.beta_lo), max(a.beta_hi, b.beta_hi),
                    min(a.sigma_lo, b.sigma_lo), max(a.sigma_hi, b.sigma_hi),
                    max(a.n_beta, b.n_beta), max(a.n_sigma, b.n_sigma))


def l1_distance(a: PosteriorGrid, b: PosteriorGrid, workers: int = 1) -> float:
    """Integrated absolute difference of two posterior densities, in [0, 2].

    Both posteriors are re-evaluated and renormalized on the union box at the
    finer of the two resolutions.
    """
    spec = union_spec(a.spec, b.spec)
    pa = grid_from_spec(a.config, a.data, spec, workers).cell_prob
    pb = grid_from_spec(b.config, b.data, spec, workers).cell_prob
    return float(np.abs(pa - pb).sum())


# --------------------------------------------------------------------------- #
# Fit summary
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class FitSummary:
    map: ParamPoint
    median_beta: float
    median_sigma: float
    hpd_beta: tuple
    hpd_sigma: tuple
    log_marginal: float
    grid_spec_used: GridSpec
    level: float = 0.95

    def to_dict(self) -> dict:
        return {
            "map": {"beta": self.map.beta, "sigma": self.map.sigma},
            "median": {"beta": self.median_beta, "sigma": self.median_sigma},
            "hpd95": {"beta": list(self.hpd_beta), "sigma": list(self.hpd_sigma)},
            "level": self.level,
            "log_marginal": self.log_marginal,
            "grid": self.grid_spec_used.to_dict(),
        }


def summarize(grid: PosteriorGrid, mode: ParamPoint, level: float = 0.95) -> FitSummary:
    mb, ms = marginal(grid, "beta"), marginal(grid, "sigma")
    return FitSummary(
        map=mode,
        median_beta=quantile(mb, 0.5),
        median_sigma=quantile(ms, 0.5),
        hpd_beta=hpd_interval(mb, level),
        hpd_sigma=hpd_interval(ms, level),
        log_marginal=log_marginal_likelihood(grid),
        grid_spec_used=grid.spec,
        level=level,
    )


def fit(config: ModelConfig, data: Dataset, level: float = 0.95,
        spec: Optional[GridSpec] = None, workers: int = 1) -> FitSummary:
    mode = map_estimate(config, data)
    grid = build_posterior_grid(config, data, spec, mode=mode, workers=workers)
    return summarize(grid, mode, level)
