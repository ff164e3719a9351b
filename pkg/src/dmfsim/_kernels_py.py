"""Pure-Python thinning kernels (reference and fallback for ``_kernels``).

Arithmetic and random-number consumption mirror ``_kernels.pyx`` line by line.
"""
import math

import numpy as np

OK, BLOWUP, MAJORANT, BUDGET = 0, 1, 2, 3
BLOWUP_LEVEL = 1e12

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_INV53 = 1.0 / 9007199254740992.0
_LN2 = math.log(2.0)


def _uniform(key, ctr):
    z = (key + (ctr + 1) * _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    z ^= z >> 31
    return ((z >> 11) + 0.5) * _INV53


def flow(p, x, dt):
    """Exact drift flow over ``dt`` (monotone in time for both drift kinds)."""
    if dt == 0.0:
        return x
    if p[0] == 0.0:
        alpha, c = p[1], p[2]
        if alpha == 0.0:
            return x + c * dt
        return x * math.exp(-alpha * dt) + (c / alpha) * (-math.expm1(-alpha * dt))
    s, g = p[1], p[2]
    if s == 0.0 or g == 0.0:
        return x
    a = g * x
    decay = s * g * dt
    if abs(a) < 20.0:
        return math.asinh(math.sinh(a) * math.exp(-decay)) / g
    # sinh(a) would overflow: work with log|sinh(a)|
    la = abs(a)
    ly = la - _LN2 + math.log1p(-math.exp(-2.0 * la)) - decay
    if ly > 20.0:
        r = ly + _LN2
    else:
        r = math.asinh(math.exp(ly))
    return math.copysign(r, a) / g


def rate(p, x):
    if p[3] == 0.0:
        return p[4]
    return p[4] + 0.5 * p[5] * (1.0 + math.tanh(p[6] * x))


def _run(env, n, key, x0, t0, t_end, obs, out, p, scale, max_events, rec):
    sqrt_n = math.sqrt(n)
    lip = p[7]
    t = t0
    x = x0
    ctr = 0
    nev = 0
    oi = 0
    nobs = len(obs)
    runmax = abs(x)
    while oi < nobs and obs[oi] <= t:
        out[oi] = x
        oi += 1
    while t < t_end:
        fx = rate(p, x)
        if fx > 0.0:
            delta = min(0.1, 8.0 / (n * fx))
        else:
            delta = 0.1
        tw = min(t + delta, t_end)
        xw = flow(p, x, tw - t)
        m = (fx + lip * abs(xw - x)) * scale
        if m > 0.0:
            u = _uniform(key, ctr)
            ctr += 1
            tc = t - math.log(u) / (n * m)
        else:
            tc = math.inf
        if tc >= tw:
            while oi < nobs and obs[oi] <= tw:
                out[oi] = flow(p, x, obs[oi] - t)
                oi += 1
            x = xw
            t = tw
            if abs(x) > runmax:
                runmax = abs(x)
            continue
        while oi < nobs and obs[oi] < tc:
            out[oi] = flow(p, x, obs[oi] - t)
            oi += 1
        x = flow(p, x, tc - t)
        t = tc
        if abs(x) > runmax:
            runmax = abs(x)
        fc = rate(p, x)
        if fc > m:
            return MAJORANT, nev, runmax, t
        u = _uniform(key, ctr)
        ctr += 1
        if u * m < fc:
            j = int(_uniform(key, ctr) * n)
            ctr += 1
            if j >= n:
                j = n - 1
            pre = x
            x = x + env[j] / sqrt_n
            nev += 1
            if rec is not None:
                rec[0].append(t)
                rec[1].append(pre)
                rec[2].append(j)
                rec[3].append(x)
            if abs(x) > runmax:
                runmax = abs(x)
            if not (abs(x) <= BLOWUP_LEVEL):
                return BLOWUP, nev, runmax, t
            if nev > max_events:
                return BUDGET, nev, runmax, t
    while oi < nobs:
        out[oi] = x
        oi += 1
    return OK, nev, runmax, t


def simulate_batch(envs, env_index, keys, x0s, t0, t_end, obs, params, scale, max_events):
    n_paths = len(keys)
    nobs = len(obs)
    obs_l = [float(v) for v in obs]
    p = [float(v) for v in params]
    obs_out = np.full((n_paths, nobs), np.nan)
    runmax = np.zeros(n_paths)
    nevents = np.zeros(n_paths, dtype=np.int64)
    status = np.zeros(n_paths, dtype=np.int32)
    tfail = np.full(n_paths, np.nan)
    n = envs.shape[1]
    for i in range(n_paths):
        env = envs[int(env_index[i])].tolist()
        out = [math.nan] * nobs
        st, nev, rm, tf = _run(env, n, int(keys[i]), float(x0s[i]), t0, t_end, obs_l, out, p, scale,
                               max_events, None)
        obs_out[i] = out
        runmax[i] = rm
        nevents[i] = nev
        status[i] = st
        if st != OK:
            tfail[i] = tf
    return obs_out, runmax, nevents, status, tfail


def simulate_events(env, key, x0, t0, t_end, params, scale, max_events):
    p = [float(v) for v in params]
    rec = ([], [], [], [])
    st, nev, rm, tf = _run(list(env), len(env), int(key), float(x0), t0, t_end, [], [], p, scale,
                           max_events, rec)
    return (
        st,
        tf,
        np.array(rec[0], dtype=np.float64),
        np.array(rec[1], dtype=np.float64),
        np.array(rec[2], dtype=np.int64),
        np.array(rec[3], dtype=np.float64),
    )
