import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from dmfsim import kernels
from dmfsim.environment import DisorderLaw, environment_from_values, sample_environment
from dmfsim.errors import AbortedPathError, MisuseError, RangeError
from dmfsim.model import Drift, InitialLaw, ModelSpec, Rate, constant_rate_model, tanh_model
from dmfsim.pdmp import (
    constant_rate_oracle,
    flow_step,
    path_value_at,
    simulate_ensemble,
    simulate_pdmp,
)
from dmfsim.rng import derive_key

RAD = DisorderLaw.rademacher()


def test_zero_rate_is_pure_flow():
    m = ModelSpec(Drift.linear(1.0, 0.0), Rate.constant(0.0), RAD, InitialLaw.dirac(1.0), InitialLaw.dirac(1.0), 2.0)
    p = simulate_pdmp(m, sample_environment(RAD, 8, 0), 1.0, seed=1)
    assert p.n_events == 0
    assert path_value_at(p, math.log(2)) == pytest.approx(0.5, rel=1e-15)


def test_poisson_event_count():
    N, lam, T = 32, 1.5, 2.0
    m = constant_rate_model(lam, RAD, 0.0, T)
    env = sample_environment(RAD, N, 3)
    counts = np.array([simulate_pdmp(m, env, 0.0, s).n_events for s in range(2000)])
    mean = N * lam * T
    assert abs(counts.mean() - mean) < 3 * math.sqrt(mean / counts.size)
    assert counts.var() == pytest.approx(mean, rel=0.1)


@pytest.mark.parametrize("law", [RAD, DisorderLaw.laplace(1.0)], ids=lambda l: l.kind)
def test_event_bookkeeping(law):
    m = tanh_model(law, T=1.0)
    env = sample_environment(law, 200, 8)
    p = simulate_pdmp(m, env, 0.3, seed=4)
    assert p.n_events > 0
    assert np.all(np.diff(p.times) > 0) and p.times[0] > 0 and p.times[-1] <= 1.0
    assert np.array_equal(p.post, p.pre + env.values[p.index] / math.sqrt(200))
    # pre-jump states follow the flow from the previous post-jump state
    prev_t = np.concatenate([[0.0], p.times[:-1]])
    prev_x = np.concatenate([[0.3], p.post[:-1]])
    flowed = np.array([flow_step(m.drift, x, t1 - t0) for x, t0, t1 in zip(prev_x, prev_t, p.times)])
    np.testing.assert_allclose(p.pre, flowed, rtol=1e-12, atol=1e-12)


def test_cadlag_evaluation():
    m = constant_rate_model(1.0, RAD, 0.0, 1.0)
    p = simulate_pdmp(m, sample_environment(RAD, 16, 1), 0.0, seed=2)
    t = float(p.times[3])
    assert path_value_at(p, t) == p.post[3]
    assert path_value_at(p, np.nextafter(t, 0)) == p.pre[3]
    with pytest.raises(RangeError):
        path_value_at(p, 1.5)


def test_determinism():
    m = tanh_model(RAD)
    env = sample_environment(RAD, 64, 5)
    a, b = simulate_pdmp(m, env, 0.0, 9), simulate_pdmp(m, env, 0.0, 9)
    for f in ("times", "pre", "index", "post"):
        assert np.array_equal(getattr(a, f), getattr(b, f))


def test_thinning_invariant_under_doubled_majorant():
    m = tanh_model(RAD, x0=0.5, T=1.0)
    env = sample_environment(RAD, 50, 2)
    first = lambda scale, seeds: np.array(
        [simulate_pdmp(m, env, 0.5, s, majorant_scale=scale).times[0] for s in seeds]
    )
    a = first(1.0, range(3000))
    b = first(2.0, range(10_000, 13_000))
    assert stats.ks_2samp(a, b).pvalue > 0.01


def test_oracle_hand_case():
    m = constant_rate_model(2.0, RAD)
    env = environment_from_values(RAD, [1, -1, 1, 1])
    o = constant_rate_oracle(m, env, 0.0, 1.0)
    assert (o.cond_mean, o.cond_var) == (2.0, 2.0)
    assert constant_rate_oracle(m, env, 0.5, 0.0) == type(o)(0.5, 0.0)
    z = constant_rate_oracle(constant_rate_model(0.0, RAD), env, 0.5, 1.0)
    assert (z.cond_mean, z.cond_var) == (0.5, 0.0)
    with pytest.raises(MisuseError):
        constant_rate_oracle(tanh_model(RAD), env, 0.0, 1.0)


@pytest.mark.parametrize("law", [RAD, DisorderLaw.uniform(1.0)], ids=lambda l: l.kind)
def test_quenched_moments_match_oracle(law):
    m = constant_rate_model(2.0, law, 0.0, 1.0)
    env = sample_environment(law, 16, 7)
    ens = simulate_ensemble(m, 16, [0.5, 1.0], 100_000, 11, env=env)
    for j, t in enumerate((0.5, 1.0)):
        o = constant_rate_oracle(m, env, 0.0, t)
        x = ens.states[:, j]
        assert abs(x.mean() - o.cond_mean) < 3 * math.sqrt(o.cond_var / x.size)
        assert x.var() == pytest.approx(o.cond_var, rel=0.03)


def test_event_budget_aborts():
    m = constant_rate_model(5.0, RAD)
    with pytest.raises(AbortedPathError):
        simulate_pdmp(m, sample_environment(RAD, 100, 1), 0.0, 1, max_events=10)
    ens = simulate_ensemble(m, 100, [1.0], 20, 1, max_events=10)
    assert ens.n_aborted == 20 and np.all(ens.status == kernels.BUDGET)


def test_event_count_below_resource_model():
    m = tanh_model(RAD)
    ens = simulate_ensemble(m, 256, [1.0], 400, 3)
    assert ens.n_events.mean() <= 256 * 1.0 * m.rate.sup


def test_ensemble_independent_of_threads():
    m = tanh_model(RAD)
    a = simulate_ensemble(m, 64, [0.5, 1.0], 700, 5, threads=1)
    b = simulate_ensemble(m, 64, [0.5, 1.0], 700, 5, threads=3)
    assert np.array_equal(a.states, b.states) and np.array_equal(a.n_events, b.n_events)


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled kernel not built")
@given(st.integers(0, 2**62), st.floats(-2, 2), st.sampled_from(["tanh", "const", "linear"]))
def test_backends_agree_bitwise(seed, x0, which):
    law = RAD if seed % 2 else DisorderLaw.laplace(0.5)
    if which == "tanh":
        m = tanh_model(law, T=1.0)
    elif which == "const":
        m = constant_rate_model(1.5, law)
    else:
        m = ModelSpec(Drift.linear(0.8, 0.2), Rate.tanh(0.5, 1.0, 2.0), law, InitialLaw.dirac(0), InitialLaw.dirac(0), 1.0)
    env = sample_environment(law, 40, seed)
    key = np.uint64(derive_key(seed, "pdmp"))
    args = (env.values, key, x0, 0.0, 1.0, m.kernel_params(), 1.0, 100_000)
    py, cy = kernels.get_backend("python"), kernels.get_backend("cython")
    a, b = py.simulate_events(*args), cy.simulate_events(*args)
    assert a[0] == b[0]
    for u, v in zip(a[2:], b[2:]):
        assert np.array_equal(u, v)
    envs = np.stack([env.values, -env.values])
    keys = np.array([key, key + np.uint64(1), key + np.uint64(2)], dtype=np.uint64)
    batch = (envs, np.array([0, 1, 0], dtype=np.int64), keys, np.array([x0, 0.0, -x0]), 0.0, 1.0,
             np.array([0.0, 0.25, 1.0]), m.kernel_params(), 1.0, 100_000)
    for u, v in zip(py.simulate_batch(*batch), cy.simulate_batch(*batch)):
        assert np.array_equal(u, v, equal_nan=True)  # t_fail is nan for completed paths
