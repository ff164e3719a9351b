import json
import math

import pytest

from dmfsim.config import parse_config
from dmfsim.harness import (
    run_annealed_convergence,
    run_coupling_study,
    run_moment_tightness_suite,
    run_quenched_control,
    write_reports,
)

SMALL = """
[model]
law = {law}
rate = {rate}
drift = {drift}
T = 1
[experiment]
n_grid = {grid}
n_paths = 400
dt = 0.01
coupler = {coupler}
[coupling]
n_grid = 256, 1024
replicates = 200
[quenched]
n_grid = {qgrid}
n_paths = 200
[moments]
n_grid = 16, 64
n_paths = 200
[tightness]
N = 64
n_paths = 400
"""


def cfg(law="rademacher", rate="tanh:1,1,1", drift="tanh:1,1", grid="16, 64, 256", coupler="dyadic-kmt",
        qgrid="64, 256"):
    return parse_config(SMALL.format(law=law, rate=rate, drift=drift, grid=grid, coupler=coupler, qgrid=qgrid))


def test_annealed_report_shape():
    rep = run_annealed_convergence(cfg())
    assert [r["N"] for r in rep.tables["gaps"]] == [16, 64, 256]
    assert all(r["kr_init"] == 0.0 for r in rep.tables["gaps"])
    assert {v.name for v in rep.verdicts} == {"gaps_nonincreasing_within_ci", "loglog_slope_window"}
    assert all(v.tolerance for v in rep.verdicts)
    assert set(rep.seeds) >= {"pdmp/N=16", "limit/N=256", "limit_dt_half"}


def test_single_n_grid_propagates_degenerate_fit():
    rep = run_annealed_convergence(cfg(grid="64"))
    assert rep.fits["rate"]["degenerate"]
    slope = [v for v in rep.verdicts if v.name == "loglog_slope_window"][0]
    assert not slope.passed and "degenerate" in slope.detail


def test_constant_rate_gaps_finite():
    rep = run_annealed_convergence(cfg(rate="const:1", drift="zero"))
    assert all(math.isfinite(r["gap"]) for r in rep.tables["gaps"])


def test_quenched_exact_gaussian_identity_is_zero():
    rep = run_quenched_control(cfg(law="gaussian:1", rate="const:2", drift="zero", coupler="exact-gaussian"))
    assert all(r["gap_mean"] <= 1e-13 and r["holds"] for r in rep.tables["mean_identity"])
    assert rep.passed


def test_quenched_dyadic_identity_holds():
    rep = run_quenched_control(cfg(rate="const:2", drift="zero", qgrid="256, 1024, 4096"))
    ident = rep.tables["mean_identity"]
    assert len(ident) == 3 and all(r["holds"] for r in ident)
    assert rep.fits["frontier"]["exponents"] == [0.0, 1.0, 2.0, 4.0]


def test_coupling_study_verdicts():
    rep = run_coupling_study(cfg())
    names = {v.name for v in rep.verdicts}
    assert names == {"exact_coupling_k_zero", "dyadic_median_bounded", "dyadic_tail_loglinear", "naive_median_growth"}
    assert [v for v in rep.verdicts if v.name == "exact_coupling_k_zero"][0].passed
    assert rep.tables["dyadic-kmt_tail_N256"][0].keys() == {"x", "tail_freq"}


def test_deterministic_model_flags_degenerate_tightness():
    rep = run_moment_tightness_suite(cfg(rate="const:0", drift="zero"))
    assert all(t["stat"] == 0.0 for t in rep.tables["tightness"])
    assert rep.fits["tightness"]["degenerate"]
    moment = [v for v in rep.verdicts if v.name.startswith("moment_")][0]
    assert moment.passed  # x stays at 0, every moment is exactly 0 at every N


def test_written_payload_is_standard_json(tmp_path):
    c = cfg(grid="64")
    payload = write_reports([run_annealed_convergence(c)], c, tmp_path)
    text = (tmp_path / "report.json").read_text()
    assert "NaN" not in text and json.loads(text)["schema_version"] == 1
    assert payload["passed"] is False
    header = (tmp_path / "annealed_gaps.csv").read_text().splitlines()
    cols = [l for l in header if not l.startswith("#")][0]
    assert cols.startswith("N,gap,se,kr_init,theory_regressor")
