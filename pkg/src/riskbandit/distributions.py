"""Parametric loss distributions with seeded samplers and analytic risk oracles.

Every sampler is inverse-CDF on a stream of uniforms, so the first ``k`` of
``n`` draws equal the ``k`` draws obtained at count ``k``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

__all__ = [
    "Seed",
    "ArmDistribution",
    "Pareto",
    "Exponential",
    "Gaussian",
    "Uniform",
    "Constant",
    "NotC1",
    "MeanUndefined",
    "sample",
    "analytic_mean",
    "analytic_var",
    "analytic_cvar",
    "moment_bound",
    "parse_distribution",
]

QUAD_RTOL = 1e-6


class NotC1(ValueError):
    """Raised when a quantile-based oracle is asked of a non-continuous law."""


class MeanUndefined(ValueError):
    """Raised when the requested expectation diverges."""


@dataclass(frozen=True)
class Seed:
    """Master seed plus integer stream labels.

    Mixing rule: the labels are passed as the ``spawn_key`` of a numpy
    ``SeedSequence`` whose entropy is ``master``; the resulting state seeds a
    Philox counter-based generator. Streams with different labels are
    statistically independent, and the mapping is independent of thread or
    process interleaving.
    """

    master: int
    labels: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= int(self.master) < 2**64:
            raise ValueError("master seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "labels", tuple(int(v) for v in self.labels))

    def child(self, *labels: int) -> "Seed":
        return Seed(self.master, self.labels + tuple(labels))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.master), spawn_key=self.labels)
        return np.random.Generator(np.random.Philox(ss))


class ArmDistribution:
    """Base class for the loss models. Subclasses are frozen dataclasses."""

    c1 = True

    def ppf(self, u):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def var(self, alpha: float) -> float:
        _check_alpha(alpha)
        if not self.c1:
            raise NotC1(f"{self} is not continuous with a strictly increasing CDF")
        return float(self.ppf(alpha))

    def cvar(self, alpha: float) -> float:
        raise NotImplementedError

    def moment(self, p: float) -> float:
        """E|X|^p, +inf when divergent."""
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError

    def sample_uniforms(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(self.ppf(u), dtype=float)

    def literal(self) -> str:
        raise NotImplementedError

    def scaled(self, lam: float) -> "ArmDistribution":
        """Law of ``lam * X`` for ``lam > 0``, sharing the same uniform map."""
        raise NotImplementedError


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


@dataclass(frozen=True)
class Pareto(ArmDistribution):
    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ValueError("Pareto needs shape > 0 and scale > 0")

    @classmethod
    def from_mean(cls, shape: float, mean: float) -> "Pareto":
        if shape <= 1:
            raise MeanUndefined("a Pareto mean exists only for shape > 1")
        return cls(shape, mean * (shape - 1.0) / shape)

    def ppf(self, u):
        return self.scale * np.power(1.0 - np.asarray(u, dtype=float), -1.0 / self.shape)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(x < self.scale, 0.0, 1.0 - np.power(self.scale / np.maximum(x, self.scale), self.shape))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        xs = np.maximum(x, self.scale)
        return np.where(x < self.scale, 0.0, self.shape * self.scale**self.shape / xs ** (self.shape + 1))

    def mean(self):
        if self.shape <= 1:
            raise MeanUndefined(f"Pareto mean diverges for shape={self.shape}")
        return self.shape * self.scale / (self.shape - 1.0)

    def cvar(self, alpha):
        if self.shape <= 1:
            raise MeanUndefined(f"Pareto tail mean diverges for shape={self.shape}")
        return self.shape / (self.shape - 1.0) * self.var(alpha)

    def moment(self, p):
        if p >= self.shape:
            return math.inf
        return self.shape * self.scale**p / (self.shape - p)

    def literal(self):
        return f"pareto(shape={self.shape!r},scale={self.scale!r})"

    def scaled(self, lam):
        return Pareto(self.shape, lam * self.scale)


@dataclass(frozen=True)
class Exponential(ArmDistribution):
    m: float

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError("Exponential needs mean > 0")

    def ppf(self, u):
        return -self.m * np.log1p(-np.asarray(u, dtype=float))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 0.0, -np.expm1(-np.maximum(x, 0.0) / self.m))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 0.0, np.exp(-np.maximum(x, 0.0) / self.m) / self.m)

    def mean(self):
        return self.m

    def cvar(self, alpha):
        _check_alpha(alpha)
        return self.m * (1.0 - math.log1p(-alpha))

    def moment(self, p):
        return math.gamma(p + 1.0) * self.m**p

    def literal(self):
        return f"exp(mean={self.m!r})"

    def scaled(self, lam):
        return Exponential(lam * self.m)


@dataclass(frozen=True)
class Gaussian(ArmDistribution):
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("Gaussian needs std > 0")

    def ppf(self, u):
        return self.mu + self.sigma * special.ndtri(np.asarray(u, dtype=float))

    def sample_uniforms(self, u):
        # Generator.random() can return exactly 0; shift by half an ulp of the grid.
        return np.asarray(self.ppf(np.asarray(u) + 2.0**-54), dtype=float)

    def cdf(self, x):
        return special.ndtr((np.asarray(x, dtype=float) - self.mu) / self.sigma)

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2 * math.pi))

    def mean(self):
        return self.mu

    def cvar(self, alpha):
        z = self.var(alpha)
        z = (z - self.mu) / self.sigma
        phi = math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
        return self.mu + self.sigma * phi / (1.0 - alpha)

    def moment(self, p):
        if self.mu == 0:
            return self.sigma**p * 2 ** (p / 2) * math.gamma((p + 1) / 2) / math.sqrt(math.pi)
        f = lambda x: abs(x) ** p * float(self.pdf(x))
        lo, hi = self.mu - 40 * self.sigma, self.mu + 40 * self.sigma
        # the kink of |x|^p at 0 goes in as a breakpoint
        points = [0.0] if lo < 0.0 < hi else None
        val, _ = integrate.quad(f, lo, hi, points=points, epsrel=QUAD_RTOL, epsabs=0.0, limit=200)
        return val

    def literal(self):
        return f"gauss(mean={self.mu!r},std={self.sigma!r})"

    def scaled(self, lam):
        return Gaussian(lam * self.mu, lam * self.sigma)


@dataclass(frozen=True)
class Uniform(ArmDistribution):
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("Uniform needs lo < hi")

    def ppf(self, u):
        return self.lo + (self.hi - self.lo) * np.asarray(u, dtype=float)

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.lo) & (x <= self.hi), 1.0 / (self.hi - self.lo), 0.0)

    def mean(self):
        return 0.5 * (self.lo + self.hi)

    def cvar(self, alpha):
        return 0.5 * (self.hi + self.var(alpha))

    def moment(self, p):
        prim = lambda x: math.copysign(abs(x) ** (p + 1), x) / (p + 1)
        return (prim(self.hi) - prim(self.lo)) / (self.hi - self.lo)

    def literal(self):
        return f"uniform(lo={self.lo!r},hi={self.hi!r})"

    def scaled(self, lam):
        return Uniform(lam * self.lo, lam * self.hi)


@dataclass(frozen=True)
class Constant(ArmDistribution):
    c: float

    c1 = False

    def ppf(self, u):
        return np.full(np.shape(u), float(self.c))

    def cdf(self, x):
        return np.where(np.asarray(x, dtype=float) < self.c, 0.0, 1.0)

    def mean(self):
        return float(self.c)

    def cvar(self, alpha):
        _check_alpha(alpha)
        raise NotC1("Constant has no strictly increasing CDF; CVaR oracle is not provided")

    def moment(self, p):
        return abs(self.c) ** p

    def literal(self):
        return f"const(c={self.c!r})"

    def scaled(self, lam):
        return Constant(lam * self.c)


def sample(dist: ArmDistribution, seed: Seed, n: int) -> np.ndarray:
    """Draw ``n`` i.i.d. losses from ``dist`` on the stream identified by ``seed``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return dist.sample_uniforms(seed.generator().random(n))


def analytic_mean(dist: ArmDistribution) -> float:
    return dist.mean()


def analytic_var(dist: ArmDistribution, alpha: float) -> float:
    """The alpha-quantile F^{-1}(alpha)."""
    return dist.var(alpha)


def analytic_cvar(dist: ArmDistribution, alpha: float) -> float:
    return dist.cvar(alpha)


def moment_bound(dist: ArmDistribution, p: float) -> float:
    if not p > 1:
        raise ValueError("moment order p must exceed 1")
    return dist.moment(p)


_LITERAL = re.compile(r"^([a-z]+)\((.*)\)$")
_KINDS = {
    "pareto": (Pareto, ("shape", "scale")),
    "exp": (Exponential, ("mean",)),
    "gauss": (Gaussian, ("mean", "std")),
    "uniform": (Uniform, ("lo", "hi")),
    "const": (Constant, ("c",)),
}


def parse_distribution(text: str) -> ArmDistribution:
    """Parse literals such as ``pareto(shape=3,scale=0.6)`` or ``EXP( mean = 1 )``.

    Pareto also accepts ``mean=`` in place of ``scale=``.
    """
    s = re.sub(r"\s+", "", str(text)).lower()
    m = _LITERAL.match(s)
    if not m or m.group(1) not in _KINDS:
        raise ValueError(f"unrecognised distribution literal {text!r}")
    kind, body = m.groups()
    kwargs = {}
    for part in filter(None, body.split(",")):
        key, sep, val = part.partition("=")
        if not sep:
            raise ValueError(f"expected key=value in {text!r}, got {part!r}")
        try:
            kwargs[key] = float(val)
        except ValueError:
            raise ValueError(f"non-numeric value {val!r} for {key!r} in {text!r}") from None
    cls, names = _KINDS[kind]
    if kind == "pareto" and "mean" in kwargs and "scale" not in kwargs:
        if set(kwargs) != {"shape", "mean"}:
            raise ValueError(f"pareto takes shape and scale (or mean), got {sorted(kwargs)}")
        return Pareto.from_mean(kwargs["shape"], kwargs["mean"])
    if set(kwargs) != set(names):
        raise ValueError(f"{kind} takes {', '.join(names)}; got {', '.join(sorted(kwargs)) or 'nothing'}")
    return cls(*(kwargs[k] for k in names))
