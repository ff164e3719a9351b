"""Disorder laws, frozen environment draws and their summary statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import ParameterError
from .rng import derive_key, uniforms

LAW_KINDS = ("rademacher", "uniform", "laplace", "gaussian")


@dataclass(frozen=True)
class DisorderLaw:
    """Centered law with exponential moments.

    ``param`` is the half-width for ``uniform``, the scale for ``laplace`` and
    the standard deviation for ``gaussian``; it is ignored for ``rademacher``.
    """

    kind: str
    param: float = 1.0

    def __post_init__(self):
        if self.kind not in LAW_KINDS:
            raise ParameterError(f"unknown disorder law {self.kind!r}")
        if self.kind != "rademacher" and not (self.param > 0 and math.isfinite(self.param)):
            raise ParameterError(f"{self.kind} law needs a positive finite parameter, got {self.param}")

    @classmethod
    def rademacher(cls) -> "DisorderLaw":
        return cls("rademacher", 1.0)

    @classmethod
    def uniform(cls, half_width: float) -> "DisorderLaw":
        return cls("uniform", half_width)

    @classmethod
    def laplace(cls, scale: float) -> "DisorderLaw":
        return cls("laplace", scale)

    @classmethod
    def gaussian(cls, std: float) -> "DisorderLaw":
        return cls("gaussian", std)

    @property
    def sigma2(self) -> float:
        a = self.param
        return {
            "rademacher": 1.0,
            "uniform": a * a / 3.0,
            "laplace": 2.0 * a * a,
            "gaussian": a * a,
        }[self.kind]

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def exp_moment_alpha(self) -> float:
        # any alpha works for bounded and Gaussian laws; Laplace needs alpha < 1/scale
        if self.kind == "laplace":
            return 0.5 / self.param
        return 1.0

    def quantile(self, u: np.ndarray) -> np.ndarray:
        """Inverse CDF applied to open-interval uniforms."""
        u = np.asarray(u, dtype=np.float64)
        a = self.param
        if self.kind == "rademacher":
            return np.where(u < 0.5, -1.0, 1.0)
        if self.kind == "uniform":
            return a * (2.0 * u - 1.0)
        if self.kind == "laplace":
            return np.where(u < 0.5, a * np.log(2.0 * u), -a * np.log(2.0 * (1.0 - u)))
        return a * special.ndtri(u)

    def cdf(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        a = self.param
        if self.kind == "rademacher":
            return np.where(x < -1.0, 0.0, np.where(x < 1.0, 0.5, 1.0))
        if self.kind == "uniform":
            return np.clip((x + a) / (2.0 * a), 0.0, 1.0)
        if self.kind == "laplace":
            return np.where(x < 0, 0.5 * np.exp(x / a), 1.0 - 0.5 * np.exp(-x / a))
        return special.ndtr(x / a)

    def spec_string(self) -> str:
        if self.kind == "rademacher":
            return "rademacher"
        return f"{self.kind}:{self.param!r}"

    @classmethod
    def parse(cls, text: str) -> "DisorderLaw":
        text = text.strip().lower()
        name, _, arg = text.partition(":")
        if name in ("cauchy", "student", "pareto", "levy", "stable"):
            raise ParameterError(
                f"law {name!r} is heavy-tailed: disorder laws must be centered with exponential moments"
            )
        if name == "rademacher":
            if arg:
                raise ParameterError("rademacher takes no parameter")
            return cls.rademacher()
        if name not in LAW_KINDS:
            raise ParameterError(f"unknown disorder law {text!r}")
        try:
            value = float(arg)
        except ValueError:
            raise ParameterError(f"law {text!r} needs one numeric parameter") from None
        return cls(name, value)


@dataclass(frozen=True)
class EnvironmentDraw:
    law: DisorderLaw
    N: int
    values: np.ndarray = field(repr=False)
    seed: int

    def __post_init__(self):
        self.values.setflags(write=False)


@dataclass(frozen=True)
class EnvStats:
    s_n: float
    abs3_term: float
    var_gap: float
    abs4_mean: float
    lil_envelope: float | None


def sample_environment(law: DisorderLaw, N: int, seed: int) -> EnvironmentDraw:
    """Draw ``U_1..U_N``; ``U_j`` depends only on ``(seed, j)``."""
    if N < 1:
        raise ParameterError(f"N must be >= 1, got {N}")
    key = derive_key(seed, "env")
    values = law.quantile(uniforms(key, 0, N))
    return EnvironmentDraw(law, int(N), values, int(seed))


def environment_from_values(law: DisorderLaw, values, seed: int = 0) -> EnvironmentDraw:
    """Wrap hand-written disorder values (tests, fixtures)."""
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise ParameterError("environment values must be a nonempty 1-d sequence")
    return EnvironmentDraw(law, arr.size, arr, seed)


def scaled_partial_sums(draw: EnvironmentDraw) -> np.ndarray:
    n = np.arange(1, draw.N + 1, dtype=np.float64)
    return np.cumsum(draw.values) / np.sqrt(n)


def environment_statistics(draw: EnvironmentDraw) -> EnvStats:
    u = draw.values
    N = draw.N
    rn = math.sqrt(N)
    au = np.abs(u)
    s_n = math.fsum(u) / rn
    abs3 = math.fsum(au**3) / (N * rn)
    var_gap = abs(math.fsum(u * u) / N - draw.law.sigma2)
    abs4 = math.fsum(au**4) / N
    lil = 2.0 * math.sqrt(math.log(math.log(N))) if N >= 3 else None
    return EnvStats(s_n, abs3, var_gap, abs4, lil)


@dataclass(frozen=True)
class ExpMomentEstimate:
    mean: float
    ci: float
    saturated: bool


def exp_moment_estimate(
    law: DisorderLaw, gamma: float, N: int, replicates: int, seed: int
) -> ExpMomentEstimate:
    """Monte Carlo estimate of E exp(gamma |S_N|) with a 95% half-width.

    Replicates whose exponent would overflow are clipped at the largest finite
    double and the result is flagged ``saturated``.
    """
    if replicates < 100:
        raise ParameterError("exp_moment_estimate needs at least 100 replicates")
    if gamma <= 0:
        raise ParameterError("gamma must be positive")
    s = np.empty(replicates)
    for r in range(replicates):
        draw = sample_environment(law, N, derive_key(seed, N, r, "replicate"))
        s[r] = math.fsum(draw.values) / math.sqrt(N)
    expo = gamma * np.abs(s)
    limit = math.log(np.finfo(np.float64).max) - math.log(replicates) - 1.0
    saturated = bool(np.any(expo > limit))
    vals = np.exp(np.minimum(expo, limit))
    mean = math.fsum(vals) / replicates
    top = float(vals.max())
    sd = top * float(np.std(vals / top, ddof=1))  # scaled so the squares cannot overflow
    return ExpMomentEstimate(mean, 1.96 * sd / math.sqrt(replicates), saturated)
