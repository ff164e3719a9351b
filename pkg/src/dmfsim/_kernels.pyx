# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled thinning kernels; same arithmetic and stream use as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, expm1, log, log1p, sinh, asinh, tanh, sqrt, fabs, copysign, INFINITY, NAN
from libc.stdint cimport uint64_t, int64_t, int32_t

cnp.import_array()

DEF OK = 0
DEF BLOWUP = 1
DEF MAJORANT = 2
DEF BUDGET = 3
DEF BLOWUP_LEVEL = 1e12
DEF INV53 = 1.0 / 9007199254740992.0
DEF LN2 = 0.6931471805599453


cdef inline double _uniform(uint64_t key, uint64_t ctr) noexcept nogil:
    cdef uint64_t z = key + (ctr + 1) * <uint64_t>0x9E3779B97F4A7C15ULL
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBULL
    z = z ^ (z >> 31)
    return (<double>(z >> 11) + 0.5) * INV53


cdef inline double _flow(const double* p, double x, double dt) noexcept nogil:
    cdef double alpha, c, s, g, a, decay, la, ly, r
    if dt == 0.0:
        return x
    if p[0] == 0.0:
        alpha = p[1]
        c = p[2]
        if alpha == 0.0:
            return x + c * dt
        return x * exp(-alpha * dt) + (c / alpha) * (-expm1(-alpha * dt))
    s = p[1]
    g = p[2]
    if s == 0.0 or g == 0.0:
        return x
    a = g * x
    decay = s * g * dt
    if fabs(a) < 20.0:
        return asinh(sinh(a) * exp(-decay)) / g
    la = fabs(a)
    ly = la - LN2 + log1p(-exp(-2.0 * la)) - decay
    if ly > 20.0:
        r = ly + LN2
    else:
        r = asinh(exp(ly))
    return copysign(r, a) / g


cdef inline double _rate(const double* p, double x) noexcept nogil:
    if p[3] == 0.0:
        return p[4]
    return p[4] + 0.5 * p[5] * (1.0 + tanh(p[6] * x))


cdef struct Result:
    int status
    int64_t nev
    double runmax
    double t


cdef Result _run(const double* env, int64_t n, uint64_t key, double x0, double t0, double t_end,
                 const double* obs, int64_t nobs, double* out, const double* p, double scale,
                 int64_t max_events, double* rt, double* rpre, int64_t* rj, double* rpost,
                 int64_t cap) noexcept nogil:
    cdef Result res
    cdef double sqrt_n = sqrt(<double>n)
    cdef double lip = p[7]
    cdef double t = t0, x = x0, fx, delta, tw, xw, m, u, tc, fc, pre
    cdef uint64_t ctr = 0
    cdef int64_t nev = 0, oi = 0, j
    cdef double runmax = fabs(x)
    res.status = OK
    while oi < nobs and obs[oi] <= t:
        out[oi] = x
        oi += 1
    while t < t_end:
        fx = _rate(p, x)
        if fx > 0.0:
            delta = 8.0 / (n * fx)
            if delta > 0.1:
                delta = 0.1
        else:
            delta = 0.1
        tw = t + delta
        if tw > t_end:
            tw = t_end
        xw = _flow(p, x, tw - t)
        m = (fx + lip * fabs(xw - x)) * scale
        if m > 0.0:
            u = _uniform(key, ctr)
            ctr += 1
            tc = t - log(u) / (n * m)
        else:
            tc = INFINITY
        if tc >= tw:
            while oi < nobs and obs[oi] <= tw:
                out[oi] = _flow(p, x, obs[oi] - t)
                oi += 1
            x = xw
            t = tw
            if fabs(x) > runmax:
                runmax = fabs(x)
            continue
        while oi < nobs and obs[oi] < tc:
            out[oi] = _flow(p, x, obs[oi] - t)
            oi += 1
        x = _flow(p, x, tc - t)
        t = tc
        if fabs(x) > runmax:
            runmax = fabs(x)
        fc = _rate(p, x)
        if fc > m:
            res.status = MAJORANT
            break
        u = _uniform(key, ctr)
        ctr += 1
        if u * m < fc:
            j = <int64_t>(_uniform(key, ctr) * n)
            ctr += 1
            if j >= n:
                j = n - 1
            pre = x
            x = x + env[j] / sqrt_n
            if rt != NULL and nev < cap:
                rt[nev] = t
                rpre[nev] = pre
                rj[nev] = j
                rpost[nev] = x
            nev += 1
            if fabs(x) > runmax:
                runmax = fabs(x)
            if not (fabs(x) <= BLOWUP_LEVEL):
                res.status = BLOWUP
                break
            if nev > max_events:
                res.status = BUDGET
                break
    if res.status == OK:
        while oi < nobs:
            out[oi] = x
            oi += 1
    res.nev = nev
    res.runmax = runmax
    res.t = t
    return res


def flow(double[::1] params, double x, double dt):
    return _flow(&params[0], x, dt)


def rate(double[::1] params, double x):
    return _rate(&params[0], x)


def simulate_batch(const double[:, ::1] envs, const int64_t[::1] env_index, const uint64_t[::1] keys,
                   const double[::1] x0s, double t0, double t_end, const double[::1] obs,
                   const double[::1] params, double scale, int64_t max_events):
    cdef Py_ssize_t n_paths = keys.shape[0]
    cdef Py_ssize_t nobs = obs.shape[0]
    cdef int64_t n = envs.shape[1]
    obs_out_a = np.full((n_paths, max(nobs, 1)), np.nan)
    runmax_a = np.zeros(n_paths)
    nevents_a = np.zeros(n_paths, dtype=np.int64)
    status_a = np.zeros(n_paths, dtype=np.int32)
    tfail_a = np.full(n_paths, np.nan)
    cdef double[:, ::1] obs_out = obs_out_a
    cdef double[::1] runmax = runmax_a
    cdef int64_t[::1] nevents = nevents_a
    cdef int32_t[::1] status = status_a
    cdef double[::1] tfail = tfail_a
    cdef Py_ssize_t i
    cdef Result r
    cdef double dummy = 0.0
    cdef const double* obs_ptr = &obs[0] if nobs > 0 else &dummy
    with nogil:
        for i in range(n_paths):
            r = _run(&envs[env_index[i], 0], n, keys[i], x0s[i], t0, t_end, obs_ptr, nobs,
                     &obs_out[i, 0], &params[0], scale, max_events, NULL, NULL, NULL, NULL, 0)
            runmax[i] = r.runmax
            nevents[i] = r.nev
            status[i] = r.status
            if r.status != OK:
                tfail[i] = r.t
    return obs_out_a[:, :nobs], runmax_a, nevents_a, status_a, tfail_a


def simulate_events(const double[::1] env, uint64_t key, double x0, double t0, double t_end,
                    const double[::1] params, double scale, int64_t max_events):
    cdef int64_t n = env.shape[0]
    cdef int64_t cap = 1024
    cdef Result r
    cdef double dummy = 0.0
    cdef double[::1] rt, rpre, rpost
    cdef int64_t[::1] rj
    while True:
        t_a = np.empty(cap)
        pre_a = np.empty(cap)
        j_a = np.empty(cap, dtype=np.int64)
        post_a = np.empty(cap)
        rt = t_a
        rpre = pre_a
        rj = j_a
        rpost = post_a
        with nogil:
            r = _run(&env[0], n, key, x0, t0, t_end, &dummy, 0, &dummy, &params[0], scale,
                     max_events, &rt[0], &rpre[0], &rj[0], &rpost[0], cap)
        if r.nev <= cap:
            break
        # the stream is counter-based, so a rerun with more room replays the same path
        cap = r.nev + 1
    k = r.nev
    return r.status, r.t, t_a[:k].copy(), pre_a[:k].copy(), j_a[:k].copy(), post_a[:k].copy()
