import json

import pytest
from hypothesis import given, strategies as st

from dmfsim.cli import main
from dmfsim.config import ExperimentConfig, default_config, parse_config
from dmfsim.errors import ConfigError
from dmfsim.model import Rate

MINIMAL = "[model]\nlaw = rademacher\n"


def test_minimal_config_fills_defaults_and_hash_is_stable():
    a, b = parse_config(MINIMAL), parse_config(MINIMAL)
    assert a == b and a.digest() == b.digest()
    assert a.n_grid == (64, 256, 1024, 4096) and a.coupler == "dyadic-kmt"


def test_round_trip_default():
    cfg = default_config()
    assert parse_config(cfg.serialize()) == cfg


@given(
    st.sampled_from(["rademacher", "uniform:2.5", "laplace:0.25", "gaussian:1.5"]),
    st.lists(st.integers(2, 5000), min_size=1, max_size=5, unique=True).map(sorted),
    st.integers(0, 2**63),
    st.sampled_from(["tanh:1,2,0.5", "const:3", "constant:0"]),
)
def test_round_trip_random(law, grid, seed, rate):
    text = f"[model]\nlaw = {law}\nrate = {rate}\n[experiment]\nn_grid = {', '.join(map(str, grid))}\nmaster_seed = {seed}\n"
    cfg = parse_config(text)
    assert parse_config(cfg.serialize()) == cfg


def test_threads_do_not_enter_the_hash():
    cfg = default_config()
    assert cfg.with_overrides(threads=8).digest() == cfg.digest()
    assert cfg.with_overrides(master_seed=1).digest() != cfg.digest()


@pytest.mark.parametrize("text,line,match", [
    ("[model]\nrate = tanh:0,1,1\n", 2, "sqrt"),
    ("[model]\nT = 1\nT = 2\n", 3, "duplicate"),
    ("[model]\nfoo = 1\n", 2, "unknown key"),
    ("[model]\ninit = cauchy:0,1\n", 2, "sixth"),
    ("[model]\nlaw = cauchy\n", 2, "exponential"),
])
def test_rejections_with_line_numbers(text, line, match):
    with pytest.raises(ConfigError, match=match) as e:
        parse_config(text)
    assert e.value.line == line


@pytest.mark.parametrize("text", [
    "[experiment]\nn_grid = 256, 64\n",
    "[experiment]\ntimes = 0.5, 2\n",
    "[model]\nlaw = gaussian:1\n[experiment]\ncoupler = dyadic-kmt\n",
    "[experiment]\ndt = 0.3\n",
    "[bogus]\nx = 1\n",
])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_overrides():
    cfg = parse_config(MINIMAL, {"experiment.n_paths": "10", "model.rate": "const:2"})
    assert cfg.n_paths == 10 and cfg.model.rate == Rate.constant(2.0)


def test_x0_shorthand_and_perturbed_limit_default():
    assert parse_config("[model]\nx0 = 0.5\n").model.init_particle.location() == 0.5
    cfg = parse_config("[model]\ninit = perturbed:0,1,0.5\n")
    assert cfg.model.init_limit.kind == "dirac" and cfg.model.init_limit.a == 0.0


def test_cli_couple_and_rate_fit(tmp_path, capsys):
    out = tmp_path / "c"
    assert main(["couple", "--coupler", "dyadic-kmt", "--n", "256", "--replicates", "200", "--out", str(out)]) == 0
    fit = json.loads((out / "k_tail_dyadic-kmt_N256_fit.json").read_text())
    assert fit["replicates"] == 200 and fit["r2"] > 0.8
    rows = (out / "k_tail_dyadic-kmt_N256.csv").read_text().splitlines()
    assert rows[0].startswith("# package_version") and "x,tail_freq" in rows
    gaps = tmp_path / "gaps.csv"
    gaps.write_text("N,gap,se,kr_init,theory_regressor\n64,0.2,0.01,0,0\n256,0.1,0.01,0,0\n1024,0.05,0.01,0,0\n")
    capsys.readouterr()
    assert main(["rate-fit", str(gaps), "--out", str(tmp_path)]) == 0
    printed = capsys.readouterr().out
    slope_line = [l for l in printed.splitlines() if l.startswith("loglog slope:")][0]
    assert float(slope_line.split(":")[1]) == pytest.approx(-0.5, abs=1e-12)
    assert json.loads((tmp_path / "rate_fit.json").read_text())["loglog_slope"] == pytest.approx(-0.5)


def test_cli_simulate_commands(tmp_path, monkeypatch):
    monkeypatch.setenv("DMFSIM_OUT", str(tmp_path))
    assert main(["simulate-pdmp", "--set", "model.n=32", "--set", "experiment.n_paths=20"]) == 0
    lines = [l for l in (tmp_path / "pdmp_paths.csv").read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "path,status,n_events,x_t1" and len(lines) == 21
    assert main(["simulate-limit", "--set", "experiment.dt=0.01"]) == 0
    body = [l for l in (tmp_path / "limit_path.csv").read_text().splitlines() if not l.startswith("#")]
    assert body[0] == "t,x" and len(body) == 1 + 101


def test_cli_errors_are_reported(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[model]\nT = 1\nT = 2\n")
    assert main(["verify", "--config", str(bad)]) == 2
    assert "line 3" in capsys.readouterr().err
    assert main(["verify", "--config", str(tmp_path / "missing.ini")]) == 2
    assert main(["rate-fit", str(tmp_path / "missing.csv")]) == 2
