"""Empirical and truncation-based estimators of the mean and CVaR of a loss."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "InsufficientSamples",
    "ConfidenceLevel",
    "TruncationSchedule",
    "RiskObjective",
    "tail_count",
    "empirical_var",
    "empirical_cvar",
    "truncate_clamp",
    "truncated_cvar",
    "truncated_mean",
    "objective_estimate",
]


class InsufficientSamples(ValueError):
    """Raised when floor(n * beta) == 0, so no order statistic carries the tail."""


@dataclass(frozen=True)
class ConfidenceLevel:
    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")

    @property
    def beta(self) -> float:
        return 1.0 - self.alpha


def tail_count(n: int, alpha: float) -> tuple[int, float]:
    """Return ``(floor(n*beta), n*beta)`` for ``beta = 1 - alpha``.

    ``n*beta`` is snapped to the nearest integer when it lies within 1e-9
    relative of it, so that e.g. ``10 * (1 - 0.8)`` counts as 2 and not
    1.9999999999999996.
    """
    nb = n * (1.0 - alpha)
    r = round(nb)
    if abs(nb - r) <= 1e-9 * max(1.0, nb):
        nb = float(r)
    return math.floor(nb), nb


def _tail(x, alpha):
    x = np.asarray(x, dtype=float).ravel()
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    k, nb = tail_count(x.size, alpha)
    if k < 1:
        raise InsufficientSamples(
            f"need floor(n*(1-alpha)) >= 1; got n={x.size}, alpha={alpha}"
        )
    # the k largest values, unordered
    top = np.partition(x, x.size - k)[x.size - k:]
    return top, k, nb


def empirical_var(samples, alpha: float) -> float:
    """The floor(n*beta)-th largest sample."""
    top, _, _ = _tail(samples, alpha)
    return float(top.min())


def empirical_cvar(samples, alpha: float) -> float:
    """Sum of the floor(n*beta) largest samples divided by n*beta.

    Equal to the indicator-sum estimator ``sum(X_i * 1{X_i >= VaR_hat}) / (n*beta)``
    whenever the samples are distinct; with ties exactly floor(n*beta)
    order statistics are used.
    """
    top, _, nb = _tail(samples, alpha)
    return float(top.sum() / nb)


def truncate_clamp(x, b: float):
    """Project onto [-b, b]."""
    if not b > 0:
        raise ValueError("truncation level b must be positive")
    out = np.clip(x, -b, b)
    return float(out) if np.ndim(out) == 0 else out


def truncated_cvar(samples, alpha: float, b: float) -> float:
    """Empirical CVaR of the samples after clamping them to [-b, b]."""
    if not b > 0:
        raise ValueError("truncation level b must be positive")
    top, _, nb = _tail(samples, alpha)
    # clamping is monotone, so it commutes with taking the top order statistics
    return float(np.clip(top, -b, b).sum() / nb)


def truncated_mean(samples, b: float) -> float:
    """Sample mean with every |x| > b replaced by zero (not clamped)."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise InsufficientSamples("truncated_mean needs at least one sample")
    if not b > 0:
        raise ValueError("truncation level b must be positive")
    return float(np.where(np.abs(x) <= b, x, 0.0).sum() / x.size)


@dataclass(frozen=True)
class TruncationSchedule:
    """Truncation level as a function of the sample count.

    ``kind`` is ``"grow"`` (b(n) = n**value), ``"fixed"`` (b = value) or
    ``"none"``. Text form: ``grow:0.4``, ``fixed:640``, ``none``.
    """

    kind: str = "none"
    value: float | None = None

    def __post_init__(self):
        if self.kind == "none":
            object.__setattr__(self, "value", None)
        elif self.kind == "grow":
            if self.value is None or not 0.0 < self.value < 1.0:
                raise ValueError(f"growth exponent q must lie in (0, 1), got {self.value}")
        elif self.kind == "fixed":
            if self.value is None or not self.value > 0:
                raise ValueError(f"fixed truncation level must be positive, got {self.value}")
        else:
            raise ValueError(f"unknown truncation kind {self.kind!r}")

    @classmethod
    def none(cls):
        return cls("none")

    @classmethod
    def grow(cls, q: float):
        return cls("grow", float(q))

    @classmethod
    def fixed(cls, b: float):
        return cls("fixed", float(b))

    @classmethod
    def parse(cls, text: str) -> "TruncationSchedule":
        s = str(text).strip().lower()
        if s in ("none", ""):
            return cls.none()
        kind, sep, val = s.partition(":")
        if not sep or kind not in ("grow", "fixed"):
            raise ValueError(f"truncation must be none | fixed:<b> | grow:<q>, got {text!r}")
        try:
            v = float(val)
        except ValueError:
            raise ValueError(f"bad truncation parameter in {text!r}") from None
        return cls(kind, v)

    def check_for_cvar(self):
        """CVaR growth must satisfy q < 1/2 so that b(n)^2 grows sublinearly."""
        if self.kind == "grow" and not self.value < 0.5:
            raise ValueError(f"CVaR growth exponent q_c must lie in (0, 1/2), got {self.value}")
        return self

    def level(self, n: int) -> float | None:
        if self.kind == "none":
            return None
        if self.kind == "fixed":
            return self.value
        return float(n) ** self.value

    def __str__(self):
        return "none" if self.kind == "none" else f"{self.kind}:{self.value!r}"


@dataclass(frozen=True)
class RiskObjective:
    """Goodness metric xi1 * E[X] + xi2 * CVaR_alpha(X); smaller is better."""

    xi1: float
    xi2: float
    alpha: float = 0.95

    def __post_init__(self):
        if self.xi1 < 0 or self.xi2 < 0:
            raise ValueError("weights xi1, xi2 must be nonnegative")
        if not self.xi1 + self.xi2 > 0:
            raise ValueError("at least one of xi1, xi2 must be positive")
        ConfidenceLevel(self.alpha)

    @property
    def beta(self) -> float:
        return 1.0 - self.alpha

    def analytic(self, dist) -> float:
        val = 0.0
        if self.xi1:
            val += self.xi1 * dist.mean()
        if self.xi2:
            val += self.xi2 * dist.cvar(self.alpha)
        return val


def objective_estimate(
    samples,
    objective: RiskObjective,
    mean_schedule: TruncationSchedule | None = None,
    cvar_schedule: TruncationSchedule | None = None,
) -> float:
    """xi1 * drop-truncated mean + xi2 * clamp-truncated CVaR.

    Truncation levels are resolved at n = len(samples); a ``none`` schedule
    leaves that term untruncated. Terms with zero weight are not evaluated.
    """
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    total = 0.0
    if objective.xi1:
        b = mean_schedule.level(n) if mean_schedule is not None else None
        if b is None:
            if n == 0:
                raise InsufficientSamples("mean estimate needs at least one sample")
            m = float(x.mean())
        else:
            m = truncated_mean(x, b)
        total += objective.xi1 * m
    if objective.xi2:
        b = cvar_schedule.level(n) if cvar_schedule is not None else None
        c = empirical_cvar(x, objective.alpha) if b is None else truncated_cvar(x, objective.alpha, b)
        total += objective.xi2 * c
    return total
