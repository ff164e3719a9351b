"""Drift and rate coefficients, initial laws and the model bundle."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .environment import DisorderLaw
from .errors import ParameterError


def _tanh_derivs(k: float, x, order: int):
    """Derivatives of ``tanh(k x)`` up to ``order`` (index 0 is the function)."""
    T = np.tanh(k * x)
    s = 1.0 - T * T
    out = [T, k * s, -2.0 * k**2 * T * s, 2.0 * k**3 * s * (3.0 * T * T - 1.0),
           8.0 * k**4 * T * s * (2.0 - 3.0 * T * T)]
    return out[: order + 1]


def _parse_floats(text: str, name: str, count: int) -> list[float]:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != count:
        raise ParameterError(f"{name} expects {count} comma-separated numbers, got {text!r}")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise ParameterError(f"{name}: could not parse numbers in {text!r}") from None
    if not all(math.isfinite(v) for v in vals):
        raise ParameterError(f"{name}: parameters must be finite")
    return vals


@dataclass(frozen=True)
class Drift:
    """``linear``: b(x) = -a1 x + a2.  ``tanh``: b(x) = -a1 tanh(a2 x)."""

    kind: str
    a1: float
    a2: float

    def __post_init__(self):
        if self.kind not in ("linear", "tanh"):
            raise ParameterError(f"unknown drift kind {self.kind!r}")

    @classmethod
    def linear(cls, alpha: float, c: float) -> "Drift":
        return cls("linear", float(alpha), float(c))

    @classmethod
    def tanh(cls, scale: float, gain: float) -> "Drift":
        return cls("tanh", float(scale), float(gain))

    @classmethod
    def zero(cls) -> "Drift":
        return cls.linear(0.0, 0.0)

    def __call__(self, x):
        return self.derivs(x, 0)[0]

    def derivs(self, x, order: int = 4) -> list:
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "linear":
            out = [-self.a1 * x + self.a2, -self.a1 + 0 * x] + [0 * x] * 3
            return out[: order + 1]
        d = _tanh_derivs(self.a2, x, order)
        return [-self.a1 * v for v in d]

    @property
    def lipschitz(self) -> float:
        if self.kind == "linear":
            return abs(self.a1)
        return abs(self.a1 * self.a2)

    def spec_string(self) -> str:
        return f"{self.kind}:{self.a1!r},{self.a2!r}"

    @classmethod
    def parse(cls, text: str) -> "Drift":
        name, _, arg = text.strip().lower().partition(":")
        if name == "zero":
            return cls.zero()
        if name in ("linear", "tanh"):
            a, b = _parse_floats(arg, f"drift {name}", 2)
            return cls(name, a, b)
        raise ParameterError(f"unknown drift {text!r}")


@dataclass(frozen=True)
class Rate:
    """``const``: f = lam (p1).  ``tanh``: f(x) = f0 + f1 (1 + tanh(kappa x)) / 2."""

    kind: str
    p1: float
    p2: float = 0.0
    p3: float = 0.0

    def __post_init__(self):
        if self.kind == "const":
            if self.p1 < 0:
                raise ParameterError("constant rate must be nonnegative")
        elif self.kind == "tanh":
            if not self.p1 > 0:
                raise ParameterError(
                    "tanh rate needs f0 > 0: sqrt(f) must stay C^4 with bounded derivatives"
                )
            if self.p2 < 0:
                raise ParameterError("tanh rate needs f1 >= 0 so that f stays nonnegative")
        else:
            raise ParameterError(f"unknown rate kind {self.kind!r}")

    @classmethod
    def constant(cls, lam: float) -> "Rate":
        return cls("const", float(lam))

    @classmethod
    def tanh(cls, f0: float, f1: float, kappa: float) -> "Rate":
        return cls("tanh", float(f0), float(f1), float(kappa))

    def __call__(self, x):
        return self.derivs(x, 0)[0]

    def derivs(self, x, order: int = 4) -> list:
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "const":
            return ([self.p1 + 0 * x] + [0 * x] * 4)[: order + 1]
        d = _tanh_derivs(self.p3, x, order)
        out = [self.p1 + 0.5 * self.p2 * (1.0 + d[0])]
        out += [0.5 * self.p2 * v for v in d[1:]]
        return out

    def sqrt_derivs(self, x, order: int = 4) -> list:
        """Derivatives of sqrt(f) by the chain rule (requires f > 0)."""
        f, f1, f2, f3, f4 = self.derivs(x, 4)
        r = np.sqrt(f)
        out = [
            r,
            f1 / (2 * r),
            (2 * f * f2 - f1**2) / (4 * f * r),
            (4 * f**2 * f3 - 6 * f * f1 * f2 + 3 * f1**3) / (8 * f**2 * r),
            (8 * f**3 * f4 - 4 * f**2 * (4 * f1 * f3 + 3 * f2**2) + 36 * f * f1**2 * f2 - 15 * f1**4)
            / (16 * f**3 * r),
        ]
        return out[: order + 1]

    @property
    def lipschitz(self) -> float:
        if self.kind == "const":
            return 0.0
        return 0.5 * self.p2 * abs(self.p3)

    @property
    def sup(self) -> float:
        return self.p1 if self.kind == "const" else self.p1 + self.p2

    def spec_string(self) -> str:
        if self.kind == "const":
            return f"const:{self.p1!r}"
        return f"tanh:{self.p1!r},{self.p2!r},{self.p3!r}"

    @classmethod
    def parse(cls, text: str) -> "Rate":
        name, _, arg = text.strip().lower().partition(":")
        if name in ("const", "constant"):
            (lam,) = _parse_floats(arg, "rate const", 1)
            return cls.constant(lam)
        if name == "tanh":
            return cls.tanh(*_parse_floats(arg, "rate tanh", 3))
        raise ParameterError(f"unknown rate {text!r}")


@dataclass(frozen=True)
class InitialLaw:
    """``dirac(x0)``, ``gaussian(m, s)`` or ``perturbed(x0, eps, exponent)``.

    ``perturbed`` is the Dirac mass at ``x0 + eps * N**(-exponent)``: its
    distance to ``dirac(x0)`` is exactly ``eps * N**(-exponent)``.
    """

    kind: str
    a: float
    b: float = 0.0
    c: float = 0.0

    def __post_init__(self):
        if self.kind not in ("dirac", "gaussian", "perturbed"):
            raise ParameterError(f"unknown initial law {self.kind!r}")
        if self.kind == "gaussian" and not self.b >= 0:
            raise ParameterError("gaussian initial law needs s >= 0")
        if self.kind == "perturbed" and self.c < 0:
            raise ParameterError("perturbed initial law needs a nonnegative exponent")

    @classmethod
    def dirac(cls, x0: float) -> "InitialLaw":
        return cls("dirac", float(x0))

    @classmethod
    def gaussian(cls, m: float, s: float) -> "InitialLaw":
        return cls("gaussian", float(m), float(s))

    @classmethod
    def perturbed(cls, x0: float, eps: float, exponent: float) -> "InitialLaw":
        return cls("perturbed", float(x0), float(eps), float(exponent))

    def location(self, N: int = 1) -> float:
        if self.kind == "perturbed":
            return self.a + self.b * float(N) ** (-self.c)
        return self.a

    def is_deterministic(self) -> bool:
        return self.kind != "gaussian" or self.b == 0

    def sample(self, n: int, N: int, rng: np.random.Generator) -> np.ndarray:
        if self.is_deterministic():
            return np.full(n, self.location(N))
        return self.a + self.b * rng.standard_normal(n)

    def moment(self, p: int, N: int = 1) -> float:
        """E|X_0|^p (finite for every p: all shipped laws have Gaussian tails)."""
        if self.is_deterministic():
            return abs(self.location(N)) ** p
        m, s = self.a, self.b
        val, _ = integrate.quad(lambda z: abs(m + s * z) ** p * math.exp(-0.5 * z * z), -np.inf, np.inf)
        return val / math.sqrt(2 * math.pi)

    def spec_string(self) -> str:
        if self.kind == "dirac":
            return f"dirac:{self.a!r}"
        if self.kind == "gaussian":
            return f"gaussian:{self.a!r},{self.b!r}"
        return f"perturbed:{self.a!r},{self.b!r},{self.c!r}"

    @classmethod
    def parse(cls, text: str) -> "InitialLaw":
        name, _, arg = text.strip().lower().partition(":")
        if name == "dirac":
            (x0,) = _parse_floats(arg, "init dirac", 1)
            return cls.dirac(x0)
        if name == "gaussian":
            return cls.gaussian(*_parse_floats(arg, "init gaussian", 2))
        if name == "perturbed":
            return cls.perturbed(*_parse_floats(arg, "init perturbed", 3))
        if name in ("cauchy", "pareto", "student"):
            raise ParameterError(f"initial law {name!r} lacks the sixth moments required of initial conditions")
        raise ParameterError(f"unknown initial law {text!r}")


def kr_distance(nu: InitialLaw, nubar: InitialLaw, N: int = 1) -> float:
    """Kantorovich-Rubinstein distance between two initial laws."""
    if nu.is_deterministic() and nubar.is_deterministic():
        return abs(nu.location(N) - nubar.location(N))
    if nu.kind == nubar.kind == "gaussian" and nu.b == nubar.b:
        return abs(nu.a - nubar.a)

    def q(law, u):
        return law.location(N) if law.is_deterministic() else law.a + law.b * special.ndtri(u)

    val, _ = integrate.quad(lambda u: abs(q(nu, u) - q(nubar, u)), 0.0, 1.0, limit=200)
    return val


@dataclass(frozen=True)
class ModelSpec:
    drift: Drift
    rate: Rate
    law: DisorderLaw
    init_particle: InitialLaw
    init_limit: InitialLaw
    T: float

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ParameterError(f"horizon T must be positive, got {self.T}")

    @property
    def sigma2(self) -> float:
        return self.law.sigma2

    def kernel_params(self) -> np.ndarray:
        """Flat parameter vector consumed by the thinning kernels."""
        return np.array(
            [
                0.0 if self.drift.kind == "linear" else 1.0,
                self.drift.a1,
                self.drift.a2,
                0.0 if self.rate.kind == "const" else 1.0,
                self.rate.p1,
                self.rate.p2,
                self.rate.p3,
                self.rate.lipschitz,
            ]
        )


def constant_rate_model(lam: float, law: DisorderLaw, x0: float = 0.0, T: float = 1.0) -> ModelSpec:
    return ModelSpec(Drift.zero(), Rate.constant(lam), law, InitialLaw.dirac(x0), InitialLaw.dirac(x0), T)


def tanh_model(law: DisorderLaw | None = None, x0: float = 0.0, T: float = 1.0) -> ModelSpec:
    """Restoring tanh drift with a tanh rate bounded below by 1."""
    law = law or DisorderLaw.rademacher()
    return ModelSpec(Drift.tanh(1.0, 1.0), Rate.tanh(1.0, 1.0, 1.0), law, InitialLaw.dirac(x0), InitialLaw.dirac(x0), T)
