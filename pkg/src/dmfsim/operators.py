"""Test functions with exact C^3 norms and the two conditional generators."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coupling import CoupledEnvironment
from .environment import EnvironmentDraw, EnvStats, environment_statistics
from .errors import InequalityViolation, ParameterError
from .model import Drift, Rate, _parse_floats

_TANH2_SUP = 4.0 / (3.0 * math.sqrt(3.0))  # sup |d^2/dx^2 tanh|
_Z3 = math.sqrt(3.0 - math.sqrt(6.0))
_GAUSS3_SUP = (3.0 * _Z3 - _Z3**3) * math.exp(-0.5 * _Z3 * _Z3)  # sup |(3z - z^3) e^{-z^2/2}|


@dataclass(frozen=True)
class TestFunction:
    """``tanh``: a tanh(k x).  ``sin``: a sin(k x).  ``gauss``: a exp(-(x-m)^2 / (2 s^2))."""

    __test__ = False  # keep pytest from collecting this class

    kind: str
    a: float
    b: float
    c: float = 0.0

    def __post_init__(self):
        if self.kind not in ("tanh", "sin", "gauss"):
            raise ParameterError(f"unknown test function {self.kind!r}")
        if self.kind == "gauss" and not self.c > 0:
            raise ParameterError("gauss bump needs a positive width")

    @classmethod
    def tanh_wave(cls, a: float, k: float) -> "TestFunction":
        return cls("tanh", float(a), float(k))

    @classmethod
    def sin_wave(cls, a: float, k: float) -> "TestFunction":
        return cls("sin", float(a), float(k))

    @classmethod
    def gauss_bump(cls, a: float, m: float, s: float) -> "TestFunction":
        return cls("gauss", float(a), float(m), float(s))

    def derivs(self, x, order: int = 3) -> list:
        x = np.asarray(x, dtype=np.float64)
        a = self.a
        if self.kind == "tanh":
            k = self.b
            T = np.tanh(k * x)
            s = 1.0 - T * T
            out = [a * T, a * k * s, -2.0 * a * k**2 * T * s, 2.0 * a * k**3 * s * (3.0 * T * T - 1.0)]
        elif self.kind == "sin":
            k = self.b
            sn, cs = np.sin(k * x), np.cos(k * x)
            out = [a * sn, a * k * cs, -a * k**2 * sn, -a * k**3 * cs]
        else:
            m, s = self.b, self.c
            z = (x - m) / s
            e = a * np.exp(-0.5 * z * z)
            out = [e, -z * e / s, (z * z - 1.0) * e / s**2, (3.0 * z - z**3) * e / s**3]
        return out[: order + 1]

    def __call__(self, x):
        return self.derivs(x, 0)[0]

    @property
    def norm3(self) -> float:
        """Sum of the sup norms of g, g', g'', g'''."""
        a = abs(self.a)
        if self.kind == "tanh":
            k = abs(self.b)
            return a * (1.0 + k + _TANH2_SUP * k**2 + 2.0 * k**3)
        if self.kind == "sin":
            k = abs(self.b)
            return a * (1.0 + k + k**2 + k**3)
        s = self.c
        return a * (1.0 + math.exp(-0.5) / s + 1.0 / s**2 + _GAUSS3_SUP / s**3)

    @property
    def lipschitz(self) -> float:
        if self.kind == "tanh":
            return abs(self.a * self.b)
        if self.kind == "sin":
            return abs(self.a * self.b)
        return abs(self.a) * math.exp(-0.5) / self.c

    @property
    def sup(self) -> float:
        return abs(self.a)

    def spec_string(self) -> str:
        if self.kind == "gauss":
            return f"gauss:{self.a!r},{self.b!r},{self.c!r}"
        return f"{self.kind}:{self.a!r},{self.b!r}"

    @classmethod
    def parse(cls, text: str) -> "TestFunction":
        name, _, arg = text.strip().lower().partition(":")
        if name in ("tanh", "sin"):
            return cls(name, *_parse_floats(arg, f"test function {name}", 2))
        if name == "gauss":
            return cls(name, *_parse_floats(arg, "test function gauss", 3))
        raise ParameterError(f"unknown test function {text!r}")


def gen_pdmp_apply(g: TestFunction, x: float, env: EnvironmentDraw, drift: Drift, rate: Rate) -> float:
    """``b g'(x) + f(x) sum_j [g(x + U_j / sqrt N) - g(x)]`` for the frozen environment."""
    gx, g1 = (float(v) for v in g.derivs(x, 1))
    jumps = g(x + env.values / math.sqrt(env.N)) - gx
    return float(drift(x)) * g1 + float(rate(x)) * math.fsum(jumps)


def gen_limit_apply(g: TestFunction, x: float, w: float, sigma2: float, drift: Drift, rate: Rate) -> float:
    """``b g' + w f g' + sigma^2 f g'' / 2``."""
    _, g1, g2 = (float(v) for v in g.derivs(x, 2))
    f = float(rate(x))
    return float(drift(x)) * g1 + w * f * g1 + 0.5 * sigma2 * f * g2


@dataclass(frozen=True)
class GapBoundReport:
    lhs: float
    rhs: float
    stats: EnvStats
    k: float
    norm3: float
    f_x: float
    coupling_term: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


def generator_gap_bound(
    g: TestFunction,
    x: float,
    env: EnvironmentDraw,
    coupled: CoupledEnvironment,
    drift: Drift,
    rate: Rate,
    *,
    check: bool = True,
) -> GapBoundReport:
    """Compare the two generators at ``x`` against their third-order Taylor bound."""
    if coupled.N != env.N or not np.array_equal(coupled.draw.values, env.values):
        raise ParameterError("coupled environment does not match the disorder draw")
    N = env.N
    stats = environment_statistics(env)
    if N >= 2:
        k = coupled.k_stat
        coupling_term = k * math.log(N) / math.sqrt(N)
    elif coupled.coupler_kind == "exact-gaussian":
        k, coupling_term = 0.0, 0.0
    else:
        raise ParameterError("the coupling constant needs N >= 2 unless the coupling is exact")
    w = coupled.w()
    lhs = abs(gen_pdmp_apply(g, x, env, drift, rate) - gen_limit_apply(g, x, w, env.law.sigma2, drift, rate))
    f_x = float(rate(x))
    rhs = f_x * g.norm3 * (stats.abs3_term / 6.0 + coupling_term + stats.var_gap / 2.0)
    report = GapBoundReport(lhs, rhs, stats, k, g.norm3, f_x, coupling_term)
    if check and not report.holds:
        raise InequalityViolation(f"generator gap {lhs!r} exceeds its bound {rhs!r} at x={x}, N={N}")
    return report


def taylor_remainder_bound(g: TestFunction, x: float, env: EnvironmentDraw, drift: Drift, rate: Rate):
    """(|A g - A_limit g with w = S_N|, bound without the coupling term)."""
    stats = environment_statistics(env)
    lhs = abs(gen_pdmp_apply(g, x, env, drift, rate) - gen_limit_apply(g, x, stats.s_n, env.law.sigma2, drift, rate))
    rhs = float(rate(x)) * g.norm3 * (stats.abs3_term / 6.0 + stats.var_gap / 2.0)
    return lhs, rhs
