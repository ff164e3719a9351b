"""Acceptance criteria 1-10, one test each; outcomes are summarised at the end of the run."""
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from dmfsim.cli import main as cli_main
from dmfsim.config import default_config, parse_config
from dmfsim.coupling import couple
from dmfsim.environment import DisorderLaw, sample_environment
from dmfsim.harness import run_annealed_convergence, run_coupling_study, run_moment_tightness_suite, run_quenched_control
from dmfsim.limit import simulate_limit_ensemble, simulate_limit_given_w
from dmfsim.metrics import w1_empirical
from dmfsim.model import Drift, InitialLaw, ModelSpec, Rate, constant_rate_model
from dmfsim.operators import TestFunction, generator_gap_bound
from dmfsim.pdmp import constant_rate_oracle, simulate_ensemble

RAD = DisorderLaw.rademacher()


def record(k: int, ok: bool, detail: str):
    ACCEPTANCE[k] = (bool(ok), detail)
    assert ok, f"criterion {k}: {detail}"


def test_c01_constant_rate_oracle():
    t0 = time.perf_counter()
    m = constant_rate_model(2.0, RAD, 0.0, 1.0)
    env = sample_environment(RAD, 1024, 20240601)
    x = simulate_ensemble(m, 1024, [1.0], 10_000, 1, env=env).states[:, 0]
    o = constant_rate_oracle(m, env, 0.0, 1.0)
    se = x.std(ddof=1) / math.sqrt(x.size)
    z = abs(x.mean() - o.cond_mean) / se
    rel_var = abs(x.var(ddof=1) / o.cond_var - 1)
    dt = time.perf_counter() - t0
    record(1, z < 3 and rel_var < 0.05 and dt < 60,
           f"mean off by {z:.2f} se (< 3), variance off by {rel_var:.2%} (< 5%), {dt:.1f}s (< 60s)")


def test_c02_generator_inequality():
    rng = np.random.default_rng(2)
    laws = [RAD, DisorderLaw.uniform(1.7), DisorderLaw.laplace(0.6), DisorderLaw.gaussian(1.4)]
    violations, worst = 0, 0.0
    for i in range(1000):
        law = laws[i % 4]
        if law.kind == "rademacher" and i % 8 == 0:
            kind, N = "dyadic-kmt", int(2 ** rng.integers(1, 11))
        elif law.kind == "gaussian" and i % 8 == 3:
            kind, N = "exact-gaussian", int(rng.integers(2, 1025))
        else:
            kind, N = "naive-quantile", int(rng.integers(2, 1025))
        c = couple(kind, law, N, int(rng.integers(2**62)))
        g = [TestFunction.tanh_wave(rng.normal(), rng.uniform(-3, 3)),
             TestFunction.sin_wave(rng.normal(), rng.uniform(-3, 3)),
             TestFunction.gauss_bump(rng.normal(), rng.normal(), rng.uniform(0.3, 2))][i % 3]
        drift = Drift.tanh(rng.uniform(0, 2), rng.uniform(0, 2)) if i % 2 else Drift.linear(rng.uniform(0, 2), rng.normal())
        rate = Rate.tanh(rng.uniform(0.1, 2), rng.uniform(0, 2), rng.normal()) if i % 5 else Rate.constant(rng.uniform(0, 3))
        r = generator_gap_bound(g, float(rng.normal(scale=3)), c.draw, c, drift, rate, check=False)
        violations += not r.holds
        if r.rhs > 0:
            worst = max(worst, r.lhs / r.rhs)
    record(2, violations == 0, f"{violations} violations in 1000 instances (need 0), worst lhs/rhs {worst:.3g}")


@pytest.mark.slow
def test_c03_annealed_rate():
    t0 = time.perf_counter()
    rep = run_annealed_convergence(default_config())
    dt = time.perf_counter() - t0
    v = {x.name: x for x in rep.verdicts}
    gaps = ", ".join(f"{r['N']}:{r['gap']:.4f}+-{r['se']:.4f}" for r in rep.tables["gaps"])
    mono, slope = v["gaps_nonincreasing_within_ci"], v["loglog_slope_window"]
    record(3, mono.passed and slope.passed and not rep.invalid and dt < 900,
           f"nonincreasing within CI: {mono.passed}; slope {slope.statistic:.3f} in [-0.7, -0.3]: {slope.passed}; "
           f"gaps {gaps}; {dt:.0f}s (< 900s)")


@pytest.mark.slow
def test_c04_coupling():
    t0 = time.perf_counter()
    cfg = default_config().with_overrides(coupling_n_grid=tuple(2**m for m in range(8, 17)), coupling_replicates=500)
    rep = run_coupling_study(cfg)
    dt = time.perf_counter() - t0
    v = {x.name: x for x in rep.verdicts}
    ok = all(x.passed for x in v.values()) and dt < 600
    record(4, ok, f"K_exact max {v['exact_coupling_k_zero'].statistic:g} (== 0); "
                  f"dyadic median ratio {v['dyadic_median_bounded'].statistic:.3f} (< 3); "
                  f"worst tail r2 {v['dyadic_tail_loglinear'].statistic:.3f} (>= 0.9); "
                  f"naive growth {v['naive_median_growth'].statistic:.2f} (> 2); {dt:.0f}s (< 600s)")


@pytest.fixture(scope="module")
def moment_report():
    t0 = time.perf_counter()
    cfg = default_config().with_overrides(
        moment_n_grid=(64, 256, 1024, 4096), tightness_N=1024, tightness_h=tuple(2.0**-k for k in range(2, 7))
    )
    rep = run_moment_tightness_suite(cfg)
    return rep, time.perf_counter() - t0


@pytest.mark.slow
def test_c05_tightness(moment_report):
    rep, dt = moment_report
    v = {x.name: x for x in rep.verdicts}["tightness_exponent"]
    record(5, v.passed and dt < 300, f"exponent {v.statistic:.3f} (>= 1.3), ci {v.ci}, suite {dt:.0f}s (< 300s)")


@pytest.mark.slow
def test_c06_moment_uniformity(moment_report):
    rep, dt = moment_report
    v = {x.name: x for x in rep.verdicts}
    ratio, rs = v["moment_4_uniform_in_N"], v["running_sup_k2_finite"]
    record(6, ratio.passed and rs.passed and dt < 300,
           f"4th-moment max/min {ratio.statistic:.3f} (< 2); running sup kappa=2 max {rs.statistic:.3f} (finite)")


def test_c07_limit_oracles():
    law = DisorderLaw.uniform(1.5)
    ode = ModelSpec(Drift.linear(1.0, 0.0), Rate.constant(0.0), law, InitialLaw.dirac(1), InitialLaw.dirac(1), math.log(2))
    err = abs(simulate_limit_given_w(ode, 0.3, 1.0, math.log(2) / 693, 0).states[-1] - 0.5)
    lam, w, x0 = 2.0, -0.6, 0.25
    m = constant_rate_model(lam, law, x0, 1.0)
    x = simulate_limit_ensemble(m, [1.0], 100_000, 1e-3, 7, w=w).states[:, 0]
    mean, var = x0 + w * lam, law.sigma2 * lam
    z = abs(x.mean() - mean) / math.sqrt(var / x.size)
    rel = abs(x.var(ddof=1) / var - 1)
    record(7, err < 1e-3 and z < 3 and rel < 0.05,
           f"ODE error {err:.2e} (< 1e-3); Gaussian mean off {z:.2f} se (< 3), variance off {rel:.2%} (< 5%)")


def test_c08_w1():
    a = w1_empirical([0, 2], [1, 3])
    b = w1_empirical([0, 0, 3], [1, 1, 1])
    rng = np.random.default_rng(8)
    g = w1_empirical(rng.normal(0.0, 1.3, 10**5), rng.normal(1.0, 1.3, 10**5))
    record(8, a == 1.0 and b == 4 / 3 and abs(g - 1.0) < 0.05,
           f"hand cases {a!r}, {b!r} (1, 4/3); Gaussian shift estimate {g:.4f} (within 5% of 1)")


SMALL_VERIFY = """
[model]
law = rademacher
[experiment]
n_grid = 16, 64, 256
n_paths = 600
dt = 0.01
[coupling]
n_grid = 256, 1024
replicates = 200
[quenched]
n_grid = 64, 256
n_paths = 300
[moments]
n_grid = 16, 64
n_paths = 300
[tightness]
N = 64
n_paths = 600
"""


def test_c09_determinism(tmp_path):
    conf = tmp_path / "small.ini"
    conf.write_text(SMALL_VERIFY)
    outs = []
    for threads in (1, 4):
        out = tmp_path / f"t{threads}"
        cli_main(["verify", "--config", str(conf), "--out", str(out), "--threads", str(threads)])
        outs.append(out)
    same = (outs[0] / "report.json").read_bytes() == (outs[1] / "report.json").read_bytes()
    csvs = sorted(p.name for p in outs[0].glob("*.csv"))
    same_csv = all((outs[0] / c).read_bytes() == (outs[1] / c).read_bytes() for c in csvs)
    record(9, same and same_csv and len(csvs) > 0,
           f"report.json identical across --threads 1/4: {same}; {len(csvs)} CSV tables identical: {same_csv}")


def test_c10_quenched_identity():
    cfg = parse_config("""
[model]
law = rademacher
rate = const:2
drift = zero
[experiment]
times = 0.5, 1
coupler = dyadic-kmt
[quenched]
n_grid = 256, 512, 1024, 2048, 4096, 8192, 16384
n_paths = 2
""")
    rep = run_quenched_control(cfg)
    rows = rep.tables["mean_identity"]
    ok = len(rows) == 14 and all(r["holds"] for r in rows)
    tight = max(r["gap_mean"] / r["bound"] for r in rows if r["bound"] > 0)
    record(10, ok, f"{sum(r['holds'] for r in rows)}/{len(rows)} (N, t) cells satisfy gap <= lam t K ln N / sqrt N; "
                   f"largest gap/bound {tight:.3f}")
