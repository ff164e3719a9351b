"""Distances, finite-dimensional gaps, moment and tightness statistics, rate fits."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ParameterError
from .operators import TestFunction
from .pdmp import EnsembleResult, PdmpPath, path_value_at


def w1_empirical(xs, ys) -> float:
    """W1 between two equal-size empirical measures on the line (sorted L1 mean)."""
    xs = np.sort(np.asarray(xs, dtype=np.float64).ravel())
    ys = np.sort(np.asarray(ys, dtype=np.float64).ravel())
    if xs.size != ys.size:
        raise ParameterError(f"sample sizes differ: {xs.size} vs {ys.size}")
    if xs.size == 0:
        raise ParameterError("empty samples")
    return math.fsum(np.abs(xs - ys)) / xs.size


@dataclass(frozen=True)
class GapEstimate:
    gap: float
    se: float
    mean_a: float
    mean_b: float


def _products(samples: np.ndarray, gs: Sequence[TestFunction]) -> np.ndarray:
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 1:
        samples = samples[:, None]
    if samples.shape[1] != len(gs):
        raise ParameterError(f"{samples.shape[1]} columns for {len(gs)} test functions")
    prod = np.ones(samples.shape[0])
    for i, g in enumerate(gs):
        prod *= g(samples[:, i])
    return prod


def fidi_gap(samples_a, samples_b, gs: Sequence[TestFunction]) -> GapEstimate:
    """``|mean_A prod_i g_i(col_i) - mean_B prod_i g_i(col_i)|`` with its standard error."""
    if len(gs) < 1:
        raise ParameterError("need at least one test function")
    pa = _products(samples_a, gs)
    pb = _products(samples_b, gs)
    if pa.size != pb.size:
        raise ParameterError("fidi_gap needs equal path counts")
    ma = math.fsum(pa) / pa.size
    mb = math.fsum(pb) / pb.size
    va = float(np.var(pa, ddof=1)) if pa.size > 1 else 0.0
    vb = float(np.var(pb, ddof=1)) if pb.size > 1 else 0.0
    return GapEstimate(abs(ma - mb), math.sqrt(va / pa.size + vb / pb.size), ma, mb)


def _values_at(paths: Sequence[PdmpPath], times: Sequence[float]) -> np.ndarray:
    return np.array([[path_value_at(p, t) for t in times] for p in paths])


def tightness_stat(paths, r: float, s: float, t: float) -> float:
    """Monte Carlo mean of ``(X_s - X_r)^2 (X_t - X_s)^2``.

    ``paths`` is a sequence of ``PdmpPath`` or an ``(n, 3)`` array holding
    ``X_r, X_s, X_t`` column-wise.
    """
    if not r <= s <= t:
        raise ParameterError("need r <= s <= t")
    if isinstance(paths, np.ndarray):
        vals = paths
    else:
        vals = _values_at(paths, (r, s, t))
    a = (vals[:, 1] - vals[:, 0]) ** 2
    b = (vals[:, 2] - vals[:, 1]) ** 2
    return math.fsum(a * b) / vals.shape[0]


@dataclass(frozen=True)
class MomentProfile:
    times: np.ndarray
    moments: np.ndarray  # E[X_t^{2p}] per time
    running_sup: float  # E[sup_t |X_t|^kappa]
    p: int
    kappa: float


def _path_running_max(path: PdmpPath) -> float:
    xT = path_value_at(path, path.T)
    parts = [abs(path.x0), abs(xT)]
    if path.n_events:
        parts += [float(np.max(np.abs(path.pre))), float(np.max(np.abs(path.post)))]
    return max(parts)


def moment_profile(paths, p: int, times=None, kappa: float = 2.0) -> MomentProfile:
    """Even moments along a time grid and the running-sup moment of order ``kappa``.

    ``paths`` is an ``EnsembleResult`` (its own grid is used) or a sequence of
    ``PdmpPath`` evaluated at ``times``.  Between jumps the flow is monotone,
    so the running sup of a ``PdmpPath`` is attained at event or end points.
    """
    if p < 1:
        raise ParameterError("p must be >= 1")
    if isinstance(paths, EnsembleResult):
        ok = paths.valid()
        vals = paths.states[ok]
        runmax = paths.runmax[ok]
        times = paths.times
    else:
        if times is None:
            raise ParameterError("times are required for a path list")
        vals = _values_at(paths, times)
        runmax = np.array([_path_running_max(pth) for pth in paths])
    moments = np.array([math.fsum(col ** (2 * p)) / col.size for col in vals.T])
    rs = math.fsum(runmax**kappa) / runmax.size
    return MomentProfile(np.asarray(times, dtype=np.float64), moments, rs, p, kappa)


@dataclass(frozen=True)
class RateFit:
    c_hat: float
    loglog_slope: float
    r2: float
    residuals: np.ndarray = field(repr=False)
    degenerate: bool

    def record(self) -> dict:
        return {"c_hat": self.c_hat, "loglog_slope": self.loglog_slope, "r2": self.r2, "degenerate": self.degenerate}


def theory_regressor(n_values, kr_init=None) -> np.ndarray:
    n = np.asarray(n_values, dtype=np.float64)
    reg = np.log(n) / np.sqrt(n)
    if kr_init is not None:
        reg = reg + np.asarray(kr_init, dtype=np.float64)
    return reg


def rate_fit(n_values, gaps, ses=None, kr_init=None) -> RateFit:
    """Fit ``gap(N) = c (d_KR + ln N / sqrt N)`` by weighted least squares and
    report the unconstrained log-log slope of gap against N."""
    n = np.asarray(n_values, dtype=np.float64)
    g = np.asarray(gaps, dtype=np.float64)
    if n.size != g.size:
        raise ParameterError("n_values and gaps differ in length")
    nan = math.nan
    if n.size < 3 or not np.any(g > 0):
        return RateFit(nan, nan, nan, np.full(g.size, nan), True)
    if ses is None:
        wts = np.ones_like(g)
    else:
        se = np.asarray(ses, dtype=np.float64)
        floor = max(float(np.max(se)) * 1e-6, 1e-300)
        wts = 1.0 / np.maximum(se, floor) ** 2
    reg = theory_regressor(n, kr_init)
    c_hat = float(np.sum(wts * g * reg) / np.sum(wts * reg * reg))
    residuals = g - c_hat * reg
    pos = g > 0
    if np.count_nonzero(pos) < 2:
        return RateFit(c_hat, nan, nan, residuals, True)
    lx, ly = np.log(n[pos]), np.log(g[pos])
    slope, icpt = np.polyfit(lx, ly, 1)
    res = ly - (slope * lx + icpt)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(res**2)) / ss_tot if ss_tot > 0 else (1.0 if np.allclose(res, 0) else nan)
    return RateFit(c_hat, float(slope), r2, residuals, False)
