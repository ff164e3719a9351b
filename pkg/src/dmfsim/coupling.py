"""Gaussian environments coupled with the disorder partial sums.

A coupler builds a Brownian motion ``beta`` observed at the integers on the
same probability space as ``U_1, U_2, ...`` and exposes
``W[n] = sigma * beta_n / sqrt(n)`` together with the coupling constant
``K = max_{2<=n<=N} |sum_{j<=n} U_j - sigma beta_n| / ln n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .environment import DisorderLaw, EnvironmentDraw, sample_environment
from .errors import ParameterError, ResourceGuardError, UnsupportedCouplerError
from .rng import derive_key, generator, uniforms

COUPLERS = ("exact-gaussian", "naive-quantile", "dyadic-kmt")
MAX_DYADIC_LOG2 = 20


@dataclass(frozen=True)
class CoupledEnvironment:
    draw: EnvironmentDraw
    beta: np.ndarray = field(repr=False)  # beta_1..beta_N
    walk: np.ndarray = field(repr=False)  # sum_{j<=n} U_j, n=1..N
    w_series: np.ndarray = field(repr=False)  # W[n], n=1..N
    k_stat: float
    coupler_kind: str

    @property
    def N(self) -> int:
        return self.draw.N

    def w(self, n: int | None = None) -> float:
        n = self.N if n is None else n
        return float(self.w_series[n - 1])

    def errors(self) -> np.ndarray:
        """``sum_{j<=n} U_j - sigma beta_n`` for n=1..N (identically 0 for the exact coupler)."""
        if self.coupler_kind == "exact-gaussian":
            return np.zeros(self.N)
        return self.walk - self.draw.law.sigma * self.beta

    def prefix(self, n: int) -> "CoupledEnvironment":
        """The coupled environment of the first ``n`` particles."""
        if not 1 <= n <= self.N:
            raise ParameterError(f"prefix length {n} outside 1..{self.N}")
        d = self.draw
        sub = EnvironmentDraw(d.law, n, d.values[:n].copy(), d.seed)
        return _assemble(sub, self.beta[:n].copy(), self.coupler_kind, walk=self.walk[:n].copy())


def _assemble(draw: EnvironmentDraw, beta: np.ndarray, kind: str, walk=None) -> CoupledEnvironment:
    if walk is None:
        walk = np.cumsum(draw.values)
    n = np.arange(1, draw.N + 1, dtype=np.float64)
    w_series = draw.law.sigma * beta / np.sqrt(n)
    for a in (beta, walk, w_series):
        a.setflags(write=False)
    env = CoupledEnvironment(draw, beta, walk, w_series, 0.0, kind)
    k = k_statistic(env) if draw.N >= 2 else 0.0
    return CoupledEnvironment(draw, beta, walk, w_series, k, kind)


def couple_exact_gaussian(draw: EnvironmentDraw) -> CoupledEnvironment:
    """``beta_n = sum_{j<=n} U_j / sigma``; only valid for Gaussian disorder."""
    if draw.law.kind != "gaussian":
        raise UnsupportedCouplerError(f"exact-gaussian coupling needs Gaussian disorder, got {draw.law.kind}")
    walk = np.cumsum(draw.values)
    beta = walk / draw.law.sigma
    return _assemble(draw, beta, "exact-gaussian", walk=walk)


def distributional_transform(law: DisorderLaw, values: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``F(U-) + v P(U = u)``; uniform on (0,1) whenever ``v`` is."""
    if law.kind == "rademacher":
        return np.where(values < 0, 0.5 * v, 0.5 + 0.5 * v)
    return law.cdf(values)


def couple_naive_quantile(draw: EnvironmentDraw, seed: int) -> CoupledEnvironment:
    """Per-step comonotone coupling ``beta_j - beta_{j-1} = Phi^{-1}(F~(U_j))``.

    Both marginals are exact but the errors accumulate like a random walk.
    """
    if draw.law.kind == "gaussian":
        xi = draw.values / draw.law.sigma
    else:
        v = uniforms(derive_key(seed, "atoms"), 0, draw.N)
        xi = special.ndtri(distributional_transform(draw.law, draw.values, v))
    return _assemble(draw, np.cumsum(xi), "naive-quantile")


def _log_binom(n, k):
    return special.gammaln(n + 1.0) - special.gammaln(k + 1.0) - special.gammaln(n - k + 1.0)


def _quantile_scan(logp: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Row-wise smallest index whose cumulative probability reaches ``u``.

    ``logp`` rows are unnormalised log-probabilities (``-inf`` off support).
    Ties resolve toward the smaller support point.
    """
    shift = np.max(logp, axis=1, keepdims=True)
    p = np.exp(logp - shift)
    total = np.sum(p, axis=1)  # pairwise summation
    u = np.clip(np.asarray(u, dtype=np.float64), 1e-300, 1.0)
    # accumulate from the nearer tail so each tail mass keeps full relative precision:
    # cdf(k) >= u  <=>  sum_{j <= k} p_j >= u total  <=>  sum_{j > k} p_j <= (1 - u) total
    lower = u <= 0.5
    out = np.empty(u.shape, dtype=np.int64)
    if np.any(lower):
        head = np.cumsum(p[lower], axis=1)
        out[lower] = np.sum(head < (u[lower] * total[lower])[:, None], axis=1)
    if np.any(~lower):
        q = p[~lower]
        tail = np.cumsum(q[:, ::-1], axis=1)[:, ::-1]  # tail[:, k] = sum_{j >= k} p_j
        sf = np.zeros_like(q)
        sf[:, :-1] = tail[:, 1:]
        out[~lower] = np.sum(sf > ((1.0 - u[~lower]) * total[~lower])[:, None], axis=1)
    return out


def binomial_quantile(n: int, u: float) -> int:
    """Quantile of Binomial(n, 1/2) by cumulative scan in log space."""
    i = np.arange(n + 1, dtype=np.float64)
    return int(_quantile_scan(_log_binom(float(n), i)[None, :], np.array([u]))[0])


def left_half_quantile(L: int, k: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Quantile of the number of +1 steps among the first ``L`` of a block of
    ``2L`` Rademacher steps holding ``k`` of them (hypergeometric law)."""
    k = np.asarray(k, dtype=np.float64)[:, None]
    i = np.arange(L + 1, dtype=np.float64)[None, :]
    rest = k - i
    valid = (rest >= 0) & (rest <= L)
    with np.errstate(invalid="ignore"):
        logp = _log_binom(float(L), i) + _log_binom(float(L), np.where(valid, rest, 0.0))
    logp = np.where(valid, logp, -np.inf)
    return _quantile_scan(logp, np.asarray(u, dtype=np.float64))


def couple_kmt_dyadic(N_log2: int, seed: int) -> CoupledEnvironment:
    """Dyadic strong coupling of a Rademacher walk with Brownian motion.

    Brownian values at dyadic integer times come from bridge refinement; each
    block's count of +1 steps is split by the exact conditional quantile given
    the block count, driven by the same normal variate as the bridge midpoint.
    The walk has exactly i.i.d. +-1 steps and ``beta`` is exactly Brownian.
    """
    if isinstance(N_log2, bool) or int(N_log2) != N_log2 or N_log2 < 0:
        raise ParameterError(f"N_log2 must be a nonnegative integer, got {N_log2}")
    m = int(N_log2)
    if m > MAX_DYADIC_LOG2:
        raise ResourceGuardError(f"dyadic coupling limited to N <= 2**{MAX_DYADIC_LOG2}")
    N = 1 << m
    rng = generator(derive_key(seed, "coupling"))
    beta = np.zeros(N + 1)
    z0 = rng.standard_normal()
    beta[N] = math.sqrt(N) * z0
    counts = np.array([binomial_quantile(N, float(special.ndtr(z0)))])
    L = N // 2
    while L >= 1:
        starts = np.arange(0, N, 2 * L)
        z = rng.standard_normal(starts.size)
        beta[starts + L] = 0.5 * (beta[starts] + beta[starts + 2 * L]) + math.sqrt(L / 2.0) * z
        left = left_half_quantile(L, counts, special.ndtr(z))
        nxt = np.empty(2 * counts.size, dtype=np.int64)
        nxt[0::2] = left
        nxt[1::2] = counts - left
        counts = nxt
        L //= 2
    values = 2.0 * counts - 1.0
    draw = EnvironmentDraw(DisorderLaw.rademacher(), N, values, int(seed))
    return _assemble(draw, beta[1:].copy(), "dyadic-kmt")


def k_statistic(env: CoupledEnvironment) -> float:
    if env.N < 2:
        raise ParameterError("K needs N >= 2")
    if env.coupler_kind == "exact-gaussian":
        return 0.0
    return float(np.max(running_k(env)))


def running_k(env: CoupledEnvironment) -> np.ndarray:
    """``max_{2<=m<=n} |err_m| / ln m`` for n = 2..N."""
    err = np.abs(env.errors()[1:])
    n = np.arange(2, env.N + 1, dtype=np.float64)
    return np.maximum.accumulate(err / np.log(n))


def couple(kind: str, law: DisorderLaw, N: int, seed: int) -> CoupledEnvironment:
    """Sample an environment of size ``N`` and couple it with ``kind``."""
    if kind == "dyadic-kmt":
        if law.kind != "rademacher":
            raise UnsupportedCouplerError("dyadic-kmt coupling is implemented for Rademacher disorder only")
        m = int(N).bit_length() - 1
        if N < 1 or (1 << m) != N:
            raise ParameterError(f"dyadic-kmt needs N to be a power of two, got {N}")
        return couple_kmt_dyadic(m, seed)
    draw = sample_environment(law, N, seed)
    if kind == "exact-gaussian":
        return couple_exact_gaussian(draw)
    if kind == "naive-quantile":
        return couple_naive_quantile(draw, seed)
    raise ParameterError(f"unknown coupler {kind!r}; expected one of {COUPLERS}")


@dataclass(frozen=True)
class KTailProfile:
    x_grid: np.ndarray
    tail_freq: np.ndarray
    gamma_hat: float
    lambda_hat: float
    r2: float
    n: int
    replicates: int
    degenerate: bool
    k_values: np.ndarray = field(repr=False)

    def fit_record(self) -> dict:
        return {
            "gamma_hat": self.gamma_hat,
            "lambda_hat": self.lambda_hat,
            "r2": self.r2,
            "n": self.n,
            "replicates": self.replicates,
            "degenerate": self.degenerate,
        }


def sample_k(coupler: str, law: DisorderLaw, N: int, replicates: int, seed: int) -> np.ndarray:
    return np.array(
        [couple(coupler, law, N, derive_key(seed, N, r, "replicate")).k_stat for r in range(replicates)]
    )


def tail_profile_from_k(k: np.ndarray, n: int, n_grid: int = 50) -> KTailProfile:
    k = np.asarray(k, dtype=np.float64)
    reps = k.size
    if np.all(k == 0):
        return KTailProfile(np.zeros(1), np.zeros(1), 0.0, math.nan, math.nan, n, reps, True, k)
    gamma_hat = max(float(np.median(k)) / 2.0 - 1.0, 0.0)
    center = 2.0 * (gamma_hat + 1.0)
    # the grid spans the whole fit window (tail_freq from 0.5 down to ~0.005);
    # x may be negative when the median sits below the recentring point
    lo = float(np.median(k)) - center
    top = float(np.quantile(k, 0.995)) - center
    x_grid = np.linspace(lo, max(top, lo + 1e-12), n_grid)
    tail = np.array([np.mean(k > center + x) for x in x_grid])
    sel = (tail >= 0.01) & (tail <= 0.5)
    if np.count_nonzero(sel) < 3:
        return KTailProfile(x_grid, tail, gamma_hat, math.nan, math.nan, n, reps, True, k)
    xs, ys = x_grid[sel], np.log(tail[sel])
    slope, icpt = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + icpt)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else math.nan
    return KTailProfile(x_grid, tail, gamma_hat, float(-slope), r2, n, reps, False, k)


def k_tail_profile(
    coupler: str, N: int, replicates: int, seed: int, law: DisorderLaw | None = None
) -> KTailProfile:
    """Empirical tail of ``K`` recentred at ``2 (gamma_hat + 1)`` with a log-linear fit."""
    if replicates < 200:
        raise ParameterError("k_tail_profile needs at least 200 replicates")
    if law is None:
        law = DisorderLaw.gaussian(1.0) if coupler == "exact-gaussian" else DisorderLaw.rademacher()
    return tail_profile_from_k(sample_k(coupler, law, N, replicates, seed), N)
