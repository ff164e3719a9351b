"""Experiment configuration: a sectioned key = value text format.

Example::

    [model]
    law = rademacher
    drift = tanh:1,1
    rate = tanh:1,1,1
    init = dirac:0
    T = 1

    [experiment]
    n_grid = 64, 256, 1024, 4096
    times = 1
    test_functions = tanh:1,1
    n_paths = 20000
    coupler = dyadic-kmt
    dt = 0.001
    master_seed = 20240601
    threads = 1
"""
from __future__ import annotations

import configparser
import hashlib
import io
import math
import re
from dataclasses import dataclass, fields, replace

from .coupling import COUPLERS
from .environment import DisorderLaw
from .errors import ConfigError, ParameterError
from .model import Drift, InitialLaw, ModelSpec, Rate
from .operators import TestFunction

SUITES = ("annealed", "quenched", "coupling", "moments")


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    n_grid: tuple[int, ...] = (64, 256, 1024, 4096)
    times: tuple[float, ...] = (1.0,)
    test_functions: tuple[TestFunction, ...] = (TestFunction.tanh_wave(1.0, 1.0),)
    n_paths: int = 20000
    coupler: str = "dyadic-kmt"
    dt: float = 1e-3
    master_seed: int = 20240601
    threads: int = 1
    N: int = 1024
    suites: tuple[str, ...] = SUITES
    coupling_n_grid: tuple[int, ...] = tuple(2**m for m in range(8, 17))
    coupling_replicates: int = 500
    quenched_n_grid: tuple[int, ...] = (256, 1024, 4096)
    quenched_n_paths: int = 10000
    moment_n_grid: tuple[int, ...] = (64, 256, 1024, 4096)
    moment_n_paths: int = 2000
    moment_p: int = 2
    moment_times: tuple[float, ...] = (0.25, 0.5, 0.75, 1.0)
    tightness_N: int = 1024
    tightness_n_paths: int = 20000
    tightness_r: float = 0.25
    tightness_h: tuple[float, ...] = (0.25, 0.125, 0.0625, 0.03125, 0.015625)

    def __post_init__(self):
        validate(self)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)

    def serialize(self) -> str:
        return serialize(self)

    def digest(self) -> str:
        """Hash of the serialized config; ``threads`` is a hint and is left out."""
        return hashlib.sha256(serialize(replace(self, threads=1)).encode("utf-8")).hexdigest()

    @property
    def gs(self) -> tuple[TestFunction, ...]:
        """One test function per observation time."""
        if len(self.test_functions) == 1:
            return self.test_functions * len(self.times)
        return self.test_functions


def validate(cfg: ExperimentConfig) -> None:
    T = cfg.model.T
    if list(cfg.times) != sorted(cfg.times) or any(t < 0 or t > T for t in cfg.times):
        raise ConfigError("times must be sorted and lie in [0, T]")
    if not cfg.times:
        raise ConfigError("times must not be empty")
    for name in ("n_grid", "coupling_n_grid", "quenched_n_grid", "moment_n_grid"):
        grid = getattr(cfg, name)
        if not grid or any(n < 1 for n in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError(f"{name} must be a strictly increasing list of positive integers")
    if len(cfg.test_functions) not in (1, len(cfg.times)):
        raise ConfigError("give one test function, or one per observation time")
    for name in ("n_paths", "quenched_n_paths", "moment_n_paths", "tightness_n_paths"):
        if getattr(cfg, name) < 2:
            raise ConfigError(f"{name} must be at least 2")
    if cfg.coupler not in COUPLERS:
        raise ConfigError(f"coupler must be one of {COUPLERS}")
    if cfg.coupler == "dyadic-kmt" and cfg.model.law.kind != "rademacher":
        raise ConfigError("coupler dyadic-kmt requires law = rademacher")
    if cfg.coupler == "exact-gaussian" and cfg.model.law.kind != "gaussian":
        raise ConfigError("coupler exact-gaussian requires a gaussian law")
    if not cfg.dt > 0:
        raise ConfigError("dt must be positive")
    n = round(T / cfg.dt)
    if n < 1 or not math.isclose(n * cfg.dt, T, rel_tol=1e-12):
        raise ConfigError("T must be an integer multiple of dt")
    for t in (*cfg.times, *cfg.moment_times):
        k = round(t / cfg.dt)
        if abs(k * cfg.dt - t) > 1e-9 * max(1.0, T):
            raise ConfigError(f"time {t} is not on the dt grid")
    if cfg.coupling_replicates < 200:
        raise ConfigError("coupling_replicates must be at least 200")
    if cfg.threads < 1:
        raise ConfigError("threads must be >= 1")
    if cfg.moment_p < 1:
        raise ConfigError("moment_p must be >= 1")
    if any(s not in SUITES for s in cfg.suites):
        raise ConfigError(f"suites must be drawn from {SUITES}")
    if cfg.tightness_r < 0 or any(h <= 0 for h in cfg.tightness_h) or cfg.tightness_r + max(cfg.tightness_h) > T:
        raise ConfigError("tightness windows must fit in [0, T]")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize(cfg: ExperimentConfig) -> str:
    m = cfg.model
    lines = [
        "[model]",
        f"law = {m.law.spec_string()}",
        f"drift = {m.drift.spec_string()}",
        f"rate = {m.rate.spec_string()}",
        f"init = {m.init_particle.spec_string()}",
        f"init_limit = {m.init_limit.spec_string()}",
        f"T = {_fmt(float(m.T))}",
        f"N = {cfg.N}",
        "",
        "[experiment]",
        f"n_grid = {', '.join(str(n) for n in cfg.n_grid)}",
        f"times = {', '.join(_fmt(float(t)) for t in cfg.times)}",
        f"test_functions = {'; '.join(g.spec_string() for g in cfg.test_functions)}",
        f"n_paths = {cfg.n_paths}",
        f"coupler = {cfg.coupler}",
        f"dt = {_fmt(float(cfg.dt))}",
        f"master_seed = {cfg.master_seed}",
        f"threads = {cfg.threads}",
        f"suites = {', '.join(cfg.suites)}",
        "",
        "[coupling]",
        f"n_grid = {', '.join(str(n) for n in cfg.coupling_n_grid)}",
        f"replicates = {cfg.coupling_replicates}",
        "",
        "[quenched]",
        f"n_grid = {', '.join(str(n) for n in cfg.quenched_n_grid)}",
        f"n_paths = {cfg.quenched_n_paths}",
        "",
        "[moments]",
        f"n_grid = {', '.join(str(n) for n in cfg.moment_n_grid)}",
        f"n_paths = {cfg.moment_n_paths}",
        f"p = {cfg.moment_p}",
        f"times = {', '.join(_fmt(float(t)) for t in cfg.moment_times)}",
        "",
        "[tightness]",
        f"N = {cfg.tightness_N}",
        f"n_paths = {cfg.tightness_n_paths}",
        f"r = {_fmt(float(cfg.tightness_r))}",
        f"h = {', '.join(_fmt(float(h)) for h in cfg.tightness_h)}",
        "",
    ]
    return "\n".join(lines)


# section -> key -> (field name, converter)
def _ints(s):
    return tuple(int(v) for v in _split(s))


def _floats(s):
    return tuple(float(v) for v in _split(s))


def _split(s):
    return [v.strip() for v in re.split(r"[,\s]+", s.strip()) if v.strip()]


def _tests(s):
    return tuple(TestFunction.parse(p) for p in s.split(";") if p.strip())


def _names(s):
    return tuple(_split(s))


_SCHEMA = {
    "model": {
        "law": ("law", DisorderLaw.parse),
        "drift": ("drift", Drift.parse),
        "rate": ("rate", Rate.parse),
        "init": ("init", InitialLaw.parse),
        "x0": ("x0", float),
        "init_limit": ("init_limit", InitialLaw.parse),
        "t": ("T", float),
        "n": ("N", int),
    },
    "experiment": {
        "n_grid": ("n_grid", _ints),
        "times": ("times", _floats),
        "test_functions": ("test_functions", _tests),
        "n_paths": ("n_paths", int),
        "coupler": ("coupler", str.strip),
        "dt": ("dt", float),
        "master_seed": ("master_seed", int),
        "threads": ("threads", int),
        "suites": ("suites", _names),
    },
    "coupling": {
        "n_grid": ("coupling_n_grid", _ints),
        "replicates": ("coupling_replicates", int),
    },
    "quenched": {"n_grid": ("quenched_n_grid", _ints), "n_paths": ("quenched_n_paths", int)},
    "moments": {
        "n_grid": ("moment_n_grid", _ints),
        "n_paths": ("moment_n_paths", int),
        "p": ("moment_p", int),
        "times": ("moment_times", _floats),
    },
    "tightness": {
        "n": ("tightness_N", int),
        "n_paths": ("tightness_n_paths", int),
        "r": ("tightness_r", float),
        "h": ("tightness_h", _floats),
    },
}


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    out = {}
    section = None
    for i, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip().lower()
        elif "=" in s and not s.startswith(("#", ";")) and section:
            out.setdefault((section, s.split("=", 1)[0].strip().lower()), i)
    return out


def parse_config(text: str, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Parse and validate a config; ``overrides`` maps ``section.key`` to a value."""
    cp = configparser.ConfigParser(strict=True, interpolation=None, comment_prefixes=("#",), inline_comment_prefixes=("#",))
    try:
        cp.read_string(text)
    except configparser.DuplicateOptionError as e:
        raise ConfigError(f"duplicate key {e.option!r} in [{e.section}]", e.lineno) from None
    except configparser.DuplicateSectionError as e:
        raise ConfigError(f"duplicate section [{e.section}]", e.lineno) from None
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError("key outside of any [section]", e.lineno) from None
    except configparser.ParsingError as e:
        line = e.errors[0][0] if e.errors else None
        raise ConfigError(f"unparseable line: {e}", line) from None
    for dotted, value in (overrides or {}).items():
        sec, _, key = dotted.partition(".")
        if not key:
            raise ConfigError(f"override {dotted!r} must look like section.key")
        if not cp.has_section(sec):
            cp.add_section(sec)
        cp.set(sec, key, value)
    where = _key_lines(text)
    values: dict[str, object] = {}
    for sec in cp.sections():
        schema = _SCHEMA.get(sec.lower())
        if schema is None:
            raise ConfigError(f"unknown section [{sec}]", where.get((sec.lower(), ""), None))
        for key, raw in cp.items(sec):
            line = where.get((sec.lower(), key))
            if key not in schema:
                raise ConfigError(f"unknown key {key!r} in [{sec}]", line)
            name, conv = schema[key]
            try:
                values[name] = conv(raw)
            except (ParameterError, ValueError) as e:
                raise ConfigError(f"[{sec}] {key}: {e}", line) from None
    if "init" in values and "x0" in values:
        raise ConfigError("give either init or x0, not both", where.get(("model", "x0")))
    init = values.pop("init", None)
    if "x0" in values:
        init = InitialLaw.dirac(values.pop("x0"))
    init = init or InitialLaw.dirac(0.0)
    init_limit = values.pop("init_limit", None)
    if init_limit is None:
        init_limit = InitialLaw.dirac(init.a) if init.kind == "perturbed" else init
    try:
        model = ModelSpec(
            drift=values.pop("drift", Drift.tanh(1.0, 1.0)),
            rate=values.pop("rate", Rate.tanh(1.0, 1.0, 1.0)),
            law=values.pop("law", DisorderLaw.rademacher()),
            init_particle=init,
            init_limit=init_limit,
            T=values.pop("T", 1.0),
        )
        kw = {f.name: values[f.name] for f in fields(ExperimentConfig) if f.name in values}
        if "coupler" not in kw and model.law.kind != "rademacher":
            kw["coupler"] = "exact-gaussian" if model.law.kind == "gaussian" else "naive-quantile"
        return ExperimentConfig(model=model, **kw)
    except ParameterError as e:
        raise ConfigError(str(e)) from None


def default_config_text() -> str:
    return serialize(default_config())


def default_config() -> ExperimentConfig:
    return ExperimentConfig(
        model=ModelSpec(
            Drift.tanh(1.0, 1.0), Rate.tanh(1.0, 1.0, 1.0), DisorderLaw.rademacher(),
            InitialLaw.dirac(0.0), InitialLaw.dirac(0.0), 1.0,
        )
    )


def load_config(path, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    with io.open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), overrides)
