"""Euler-Maruyama simulation of the limit diffusion in a Gaussian environment.

``dX = [b(X) + w f(X)] dt + sigma sqrt(f(X)) dB`` for a frozen ``w``; the
annealed process draws ``w ~ N(0, sigma^2)`` once per path.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .coupling import CoupledEnvironment
from .errors import AbortedPathError, ParameterError
from .model import ModelSpec
from .rng import derive_key, generator

LIMIT_CHUNK = 2048
BLOWUP_LEVEL = 1e12


def n_steps_for(T: float, dt: float) -> int:
    if not dt > 0:
        raise ParameterError("dt must be positive")
    n = int(round(T / dt))
    if n < 1 or not math.isclose(n * dt, T, rel_tol=1e-12, abs_tol=0.0):
        raise ParameterError(f"T={T} is not an integer multiple of dt={dt}")
    return n


@dataclass(frozen=True)
class DiffusionPath:
    t0: float
    dt: float
    n_steps: int
    states: np.ndarray = field(repr=False)
    brownian_increments: np.ndarray = field(repr=False)
    w_used: float
    seed: int

    @property
    def grid(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_steps + 1)


def _coefficients(model: ModelSpec, x):
    f = model.rate(x)
    if np.any(f < 0):
        raise ParameterError("rate function returned a negative value")
    return model.drift(x), f


def em_replay(model: ModelSpec, w: float, x0: float, dt: float, increments: np.ndarray) -> np.ndarray:
    """Run the Euler-Maruyama recursion on given Brownian increments."""
    sigma = model.law.sigma
    states = np.empty(increments.size + 1)
    x = float(x0)
    states[0] = x
    for k, db in enumerate(increments):
        b, f = _coefficients(model, x)
        x = x + (float(b) + w * float(f)) * dt + sigma * math.sqrt(float(f)) * float(db)
        if not abs(x) <= BLOWUP_LEVEL:
            raise AbortedPathError(f"diffusion left the finite range at t={(k + 1) * dt}", (k + 1) * dt)
        states[k + 1] = x
    return states


def simulate_limit_given_w(model: ModelSpec, w: float, x0: float, dt: float, seed: int) -> DiffusionPath:
    n = n_steps_for(model.T, dt)
    inc = generator(derive_key(seed, "limit")).standard_normal(n) * math.sqrt(dt)
    states = em_replay(model, float(w), x0, dt, inc)
    inc.setflags(write=False)
    states.setflags(write=False)
    return DiffusionPath(0.0, dt, n, states, inc, float(w), int(seed))


def simulate_annealed(model: ModelSpec, x0: float, dt: float, seed: int) -> DiffusionPath:
    w = model.law.sigma * generator(derive_key(seed, "annealed_w")).standard_normal()
    return simulate_limit_given_w(model, w, x0, dt, seed)


def coupled_limit_ensemble(
    model: ModelSpec, coupled: CoupledEnvironment, x0: float, dt: float, n_paths: int, seed: int
) -> list[DiffusionPath]:
    """Paths of the limit process driven by the frozen ``W[N]`` of ``coupled``."""
    if coupled.w_series.size == 0:
        raise ParameterError("coupled environment has no W series")
    w = coupled.w()
    return [simulate_limit_given_w(model, w, x0, dt, derive_key(seed, i, "limit")) for i in range(n_paths)]


@dataclass
class LimitEnsemble:
    times: np.ndarray
    states: np.ndarray  # (n_paths, n_times)
    runmax: np.ndarray
    w: np.ndarray
    n_aborted: int


def simulate_limit_ensemble(
    model: ModelSpec,
    times,
    n_paths: int,
    dt: float,
    seed: int,
    *,
    w: float | None = None,
    x0s: np.ndarray | None = None,
    threads: int = 1,
    N_for_init: int = 1,
) -> LimitEnsemble:
    """Vectorised Euler-Maruyama over many paths, observed on grid times.

    ``w=None`` gives the annealed process (fresh ``W`` per path); otherwise
    every path uses the given frozen ``w``.  Chunk seeds are derived from
    ``(seed, chunk)`` so results do not depend on ``threads``.
    """
    times = np.asarray(times, dtype=np.float64)
    n = n_steps_for(model.T, dt)
    idx = np.rint(times / dt).astype(np.int64)
    if np.any(np.abs(idx * dt - times) > 1e-9 * max(1.0, model.T)) or np.any(idx > n) or np.any(np.diff(idx) < 0):
        raise ParameterError("observation times must be sorted grid points within [0, T]")
    sigma = model.law.sigma
    sqdt = math.sqrt(dt)

    def run_chunk(args):
        c, start, size = args
        ckey = derive_key(seed, c, "limit")
        rng = generator(ckey)
        if w is None:
            wc = sigma * generator(derive_key(ckey, "annealed_w")).standard_normal(size)
        else:
            wc = np.full(size, float(w))
        if x0s is None:
            x = model.init_limit.sample(size, N_for_init, generator(derive_key(ckey, "init")))
        else:
            x = np.array(x0s[start:start + size], dtype=np.float64)
        out = np.empty((size, idx.size))
        runmax = np.abs(x)
        alive = np.ones(size, dtype=bool)
        obs_pos = 0
        while obs_pos < idx.size and idx[obs_pos] == 0:
            out[:, obs_pos] = x
            obs_pos += 1
        for k in range(1, n + 1):
            b, f = _coefficients(model, x)
            x = x + (b + wc * f) * dt + sigma * np.sqrt(f) * (sqdt * rng.standard_normal(size))
            np.maximum(runmax, np.abs(x), out=runmax)
            while obs_pos < idx.size and idx[obs_pos] == k:
                out[:, obs_pos] = x
                obs_pos += 1
        alive &= np.isfinite(x) & (runmax <= BLOWUP_LEVEL)
        return out, runmax, wc, int(np.count_nonzero(~alive))

    tasks = [(c, s, min(LIMIT_CHUNK, n_paths - s)) for c, s in enumerate(range(0, n_paths, LIMIT_CHUNK))]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(run_chunk, tasks))
    else:
        parts = [run_chunk(t) for t in tasks]
    return LimitEnsemble(
        times,
        np.concatenate([p[0] for p in parts]),
        np.concatenate([p[1] for p in parts]),
        np.concatenate([p[2] for p in parts]),
        sum(p[3] for p in parts),
    )
