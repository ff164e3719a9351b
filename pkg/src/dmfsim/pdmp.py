"""Exact event-driven simulation of the N-particle jump process.

All N particles share the intensity ``f(X_{t-})``, so the N Poisson clocks
are merged into one stream of rate ``N f`` and the jumping particle is picked
uniformly.  That stream is sampled by thinning against a piecewise-constant
majorant built over short lookahead windows.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._kernels_py import flow as _flow_py
from .environment import EnvironmentDraw, sample_environment
from .errors import AbortedPathError, MisuseError, ParameterError, RangeError, ThinningError
from .model import Drift, ModelSpec
from .rng import derive_key

CHUNK = 256


def _drift_params(drift: Drift) -> list[float]:
    return [0.0 if drift.kind == "linear" else 1.0, drift.a1, drift.a2]


def flow_step(drift: Drift, x: float, dt: float) -> float:
    """Solve ``dx/dt = b(x)`` exactly over ``dt``.

    The tanh drift has the closed form ``sinh(g x(t)) = sinh(g x) exp(-s g t)``.
    """
    if dt < 0:
        raise ParameterError("dt must be nonnegative")
    return _flow_py(_drift_params(drift), float(x), float(dt))


@dataclass(frozen=True)
class PdmpPath:
    t0: float
    x0: float
    T: float
    times: np.ndarray = field(repr=False)
    pre: np.ndarray = field(repr=False)
    index: np.ndarray = field(repr=False)
    post: np.ndarray = field(repr=False)
    drift: Drift
    seed: int

    @property
    def n_events(self) -> int:
        return int(self.times.size)

    def to_csv_rows(self):
        yield (self.t0, self.x0, "")
        for t, x, j in zip(self.times, self.post, self.index):
            yield (float(t), float(x), int(j))


def _check_sizes(model: ModelSpec, env: EnvironmentDraw):
    if env.values.size != env.N:
        raise ParameterError("environment size mismatch")


def simulate_pdmp(
    model: ModelSpec,
    env: EnvironmentDraw,
    x0: float,
    seed: int,
    *,
    t0: float = 0.0,
    majorant_scale: float = 1.0,
    max_events: int | None = None,
) -> PdmpPath:
    """Simulate one path on ``[t0, T]`` and keep every event."""
    _check_sizes(model, env)
    if not math.isfinite(x0):
        raise ParameterError("x0 must be finite")
    if majorant_scale < 1.0:
        raise ParameterError("majorant_scale below 1 would break the thinning bound")
    if max_events is None:
        max_events = default_event_budget(model, env.N)
    key = derive_key(seed, "pdmp")
    st, tf, times, pre, idx, post = kernels.simulate_events(
        np.ascontiguousarray(env.values), np.uint64(key), float(x0), float(t0), float(model.T),
        model.kernel_params(), float(majorant_scale), int(max_events),
    )
    _raise_status(st, tf)
    return PdmpPath(float(t0), float(x0), float(model.T), times, pre, idx, post, model.drift, int(seed))


def _raise_status(st: int, tf: float):
    if st == kernels.BLOWUP:
        raise AbortedPathError(f"state left the finite range at t={tf}", tf)
    if st == kernels.MAJORANT:
        raise ThinningError(f"intensity exceeded the thinning majorant at t={tf}")
    if st == kernels.BUDGET:
        raise AbortedPathError(f"event budget exhausted at t={tf}", tf)


def default_event_budget(model: ModelSpec, N: int) -> int:
    # mean count is at most N T sup f; the margin absorbs Poisson fluctuation
    mean = N * model.T * model.rate.sup
    return int(10 * mean + 50 * math.sqrt(mean + 1) + 1000)


def path_value_at(path: PdmpPath, t: float) -> float:
    """Right-continuous evaluation of the path at ``t``."""
    if not (path.t0 <= t <= path.T):
        raise RangeError(f"t={t} outside [{path.t0}, {path.T}]")
    k = int(np.searchsorted(path.times, t, side="right"))
    if k == 0:
        return flow_step(path.drift, path.x0, t - path.t0)
    return flow_step(path.drift, float(path.post[k - 1]), t - float(path.times[k - 1]))


@dataclass(frozen=True)
class ConstantRateMoments:
    cond_mean: float
    cond_var: float


def constant_rate_oracle(model: ModelSpec, env: EnvironmentDraw, x0: float, t: float) -> ConstantRateMoments:
    """Conditional mean and variance of X_t given the environment when b = 0 and f = lam."""
    if not (model.drift.kind == "linear" and model.drift.a1 == 0 and model.drift.a2 == 0):
        raise MisuseError("constant_rate_oracle requires zero drift")
    if model.rate.kind != "const":
        raise MisuseError("constant_rate_oracle requires a constant rate")
    lam = model.rate.p1
    u = env.values
    N = env.N
    s_n = math.fsum(u) / math.sqrt(N)
    return ConstantRateMoments(x0 + lam * t * s_n, lam * t * math.fsum(u * u) / N)


@dataclass
class EnsembleResult:
    """Observed states of many paths on a common time grid."""

    times: np.ndarray
    states: np.ndarray  # (n_paths, n_times)
    runmax: np.ndarray
    n_events: np.ndarray
    status: np.ndarray
    t_fail: np.ndarray

    @property
    def n_aborted(self) -> int:
        return int(np.count_nonzero(self.status != kernels.OK))

    def valid(self) -> np.ndarray:
        return self.status == kernels.OK


def _chunks(n_paths: int):
    for c, start in enumerate(range(0, n_paths, CHUNK)):
        yield c, start, min(CHUNK, n_paths - start)


def simulate_ensemble(
    model: ModelSpec,
    N: int,
    times,
    n_paths: int,
    seed: int,
    *,
    env: EnvironmentDraw | None = None,
    threads: int = 1,
    majorant_scale: float = 1.0,
    max_events: int | None = None,
    x0s: np.ndarray | None = None,
) -> EnsembleResult:
    """Simulate ``n_paths`` paths and record them at ``times``.

    With ``env`` given, every path uses that frozen environment (quenched);
    otherwise each path draws a fresh one (annealed).  Paths are processed in
    fixed chunks with seeds derived from ``(seed, chunk)``, so the output does
    not depend on ``threads``.
    """
    times = np.ascontiguousarray(times, dtype=np.float64)
    if np.any(np.diff(times) < 0) or (times.size and (times[0] < 0 or times[-1] > model.T)):
        raise ParameterError("observation times must be sorted within [0, T]")
    if env is not None and env.N != N:
        raise ParameterError("frozen environment has the wrong size")
    if max_events is None:
        max_events = default_event_budget(model, N)
    params = model.kernel_params()

    def run_chunk(args):
        c, start, size = args
        ckey = derive_key(seed, N, c, "pdmp")
        keys = np.array([derive_key(ckey, i) for i in range(size)], dtype=np.uint64)
        if x0s is None:
            init_rng = np.random.Generator(np.random.Philox(key=derive_key(ckey, "init")))
            x0c = model.init_particle.sample(size, N, init_rng)
        else:
            x0c = np.ascontiguousarray(x0s[start:start + size], dtype=np.float64)
        if env is not None:
            envs = np.ascontiguousarray(env.values)[None, :]
            idx = np.zeros(size, dtype=np.int64)
        else:
            envs = np.stack(
                [sample_environment(model.law, N, derive_key(ckey, i, "env")).values for i in range(size)]
            )
            idx = np.arange(size, dtype=np.int64)
        return kernels.simulate_batch(
            envs, idx, keys, x0c, 0.0, float(model.T), times, params, float(majorant_scale), int(max_events)
        )

    tasks = list(_chunks(n_paths))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(run_chunk, tasks))
    else:
        parts = [run_chunk(t) for t in tasks]
    obs = np.concatenate([p[0] for p in parts]) if parts else np.empty((0, times.size))
    return EnsembleResult(
        times,
        obs,
        np.concatenate([p[1] for p in parts]),
        np.concatenate([p[2] for p in parts]),
        np.concatenate([p[3] for p in parts]),
        np.concatenate([p[4] for p in parts]),
    )
