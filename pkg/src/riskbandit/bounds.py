"""Closed-form concentration inequalities, error bounds and truncation levels.

All evaluators return the raw right-hand side, even when it exceeds one.
Sample-size thresholds are computed in log space because they routinely
exceed 1e15; ``log10_threshold`` carries the exact magnitude and
``format_magnitude`` renders it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from riskbandit.bandit import log_bar
from riskbandit.risk import RiskObjective

__all__ = [
    "MomentAssumption",
    "GapCountMismatch",
    "ErrorBound",
    "DeviationBound",
    "thm1_bounded_cvar_bound",
    "thm2_ht_cvar_bound",
    "min_truncation",
    "min_truncation_terms",
    "var_magnitude_bound",
    "ue_error_bound",
    "sr_error_bound",
    "oblivious_mean_dev_bound",
    "oblivious_cvar_dev_bound",
    "truncated_mean_dev_bound",
    "nonoblivious_settings",
    "nonoblivious_mean_dev_bound",
    "nonoblivious_cvar_dev_bound",
    "format_magnitude",
]

LN10 = math.log(10.0)


class GapCountMismatch(ValueError):
    pass


@dataclass(frozen=True)
class MomentAssumption:
    """E|X|^p <= B, shared by every arm."""

    p: float
    B: float

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError(f"moment order p must exceed 1, got {self.p}")
        if not (0 < self.B < math.inf):
            raise ValueError(f"moment bound B must be positive and finite, got {self.B}")


class ErrorBound(NamedTuple):
    value: float
    valid: bool
    threshold: float
    log10_threshold: float
    mean_term: float
    cvar_term: float

    @property
    def vacuous(self) -> bool:
        return self.value >= 1.0


class DeviationBound(NamedTuple):
    value: float
    n_star: float
    log10_n_star: float

    @property
    def vacuous(self) -> bool:
        return self.value >= 1.0


def _exp_or_inf(log_x):
    return math.exp(log_x) if log_x < 709.0 else math.inf


def format_magnitude(log10_x: float, digits: int = 6) -> str:
    """Plain decimal up to 1e15, ``10^<exponent>`` above."""
    if log10_x > 15:
        return f"10^{log10_x:.{digits}g}"
    return f"{10.0 ** log10_x:.{digits}g}"


def thm1_bounded_cvar_bound(n: float, alpha: float, b: float, eps: float) -> float:
    """P(|CVaR_hat - CVaR| >= eps) bound for losses supported on [-b, b]."""
    r = eps / b
    return 6.0 * math.exp(-n * (1.0 - alpha) * r * r / (10.0 + 1.6 * r))


def thm2_ht_cvar_bound(n: float, alpha: float, b: float, delta: float) -> float:
    """Clamp-truncated CVaR deviation bound; valid only once b >= min_truncation."""
    return 6.0 * math.exp(-n * (1.0 - alpha) * delta * delta / (48.0 * b * b))


def var_magnitude_bound(assumption: MomentAssumption, alpha: float) -> float:
    """Upper bound on |VaR_alpha| implied by E|X|^p <= B."""
    return (assumption.B / min(alpha, 1.0 - alpha)) ** (1.0 / assumption.p)


def min_truncation_terms(delta, alpha, assumption, v_abs=None) -> dict[str, float]:
    p, B = assumption.p, assumption.B
    return {
        "half_gap": delta / 2.0,
        "var_magnitude": var_magnitude_bound(assumption, alpha) if v_abs is None else float(v_abs),
        "bias": (2.0 * B / (delta * (1.0 - alpha))) ** (1.0 / (p - 1.0)),
    }


def min_truncation(delta: float, alpha: float, assumption: MomentAssumption, v_abs: float | None = None) -> float:
    """Smallest clamp level for which the heavy-tailed CVaR bound holds.

    When ``v_abs`` (|VaR_alpha|) is unknown the moment-based bound on it is used.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    return max(min_truncation_terms(delta, alpha, assumption, v_abs).values())


def _check_gaps(gaps):
    g = [float(x) for x in gaps]
    if not g:
        raise ValueError("need at least one suboptimality gap")
    if any(x <= 0 for x in g):
        raise ValueError("suboptimality gaps must be positive")
    if any(a > b for a, b in zip(g, g[1:])):
        raise ValueError("suboptimality gaps must be sorted nondecreasing")
    return g


def _log_n_star(objective: RiskObjective, gap2, assumption, q_m, q_c):
    """log of the four-term sample threshold; metrics with zero weight are skipped."""
    p, B = assumption.p, assumption.B
    beta = objective.beta
    logs = []
    if objective.xi1:
        if q_m is None:
            raise ValueError("q_m is required when xi1 > 0")
        logs.append(math.log(12.0 * objective.xi1 * B / gap2) / (q_m * min(p - 1.0, 1.0)))
    if objective.xi2:
        if q_c is None:
            raise ValueError("q_c is required when xi2 > 0")
        logs.append(math.log(8.0 * objective.xi2 * B / (beta * gap2)) / (q_c * (p - 1.0)))
        logs.append(math.log(B / min(objective.alpha, beta)) / (q_c * p))
        logs.append(math.log(gap2 / (8.0 * objective.xi2)) / q_c)
    return max(logs)


def ue_error_bound(
    T: float,
    K: int,
    gaps: Sequence[float],
    objective: RiskObjective,
    q_m: float | None,
    q_c: float | None,
    assumption: MomentAssumption,
) -> ErrorBound:
    """Misidentification bound for uniform exploration with growing truncation.

    Valid for T > K * n_star.
    """
    if K < 2 or T < K:
        raise ValueError("need K >= 2 and T >= K")
    g2 = _check_gaps(gaps)[0]
    beta = objective.beta
    m = T / K
    mean_term = cvar_term = 0.0
    if objective.xi1:
        mean_term = 2 * K * math.exp(-(m ** (1.0 - q_m)) * g2 / (16.0 * objective.xi1))
    if objective.xi2:
        cvar_term = 6 * K * math.exp(-(m ** (1.0 - 2.0 * q_c)) * beta * g2**2 / (768.0 * objective.xi2**2))
    log_thr = math.log(K) + _log_n_star(objective, g2, assumption, q_m, q_c)
    return ErrorBound(
        mean_term + cvar_term,
        math.log(T) > log_thr,
        _exp_or_inf(log_thr),
        log_thr / LN10,
        mean_term,
        cvar_term,
    )


def sr_error_bound(
    T: float,
    K: int,
    gaps: Sequence[float],
    objective: RiskObjective,
    q_m: float | None,
    q_c: float | None,
    assumption: MomentAssumption,
) -> ErrorBound:
    """Misidentification bound for successive rejects with growing truncation.

    ``gaps`` holds Delta[2..K]. Valid for T > K + K * log_bar(K) * n_star.
    """
    if K < 2 or not T > K:
        raise ValueError("need K >= 2 and T > K")
    if len(gaps) != K - 1:
        raise GapCountMismatch(f"expected {K - 1} gaps for K={K}, got {len(gaps)}")
    g = np.asarray(_check_gaps(gaps))
    i = np.arange(2, K + 1, dtype=float)
    weight = K + 1.0 - i
    lb = log_bar(K)
    scale = (T - K) / lb
    beta = objective.beta
    mean_term = cvar_term = 0.0
    if objective.xi1:
        e = 1.0 - q_m
        mean_term = float(np.sum(weight * 2.0 * np.exp(-(scale**e) * g / (i**e) / (16.0 * objective.xi1))))
    if objective.xi2:
        e = 1.0 - 2.0 * q_c
        cvar_term = float(
            np.sum(weight * 6.0 * np.exp(-beta / (768.0 * objective.xi2**2) * scale**e * g**2 / i**e))
        )
    log_ns = _log_n_star(objective, float(g[0]), assumption, q_m, q_c)
    log_thr = float(np.logaddexp(math.log(K), math.log(K * lb) + log_ns))
    return ErrorBound(
        mean_term + cvar_term,
        math.log(T) > log_thr,
        _exp_or_inf(log_thr),
        log_thr / LN10,
        mean_term,
        cvar_term,
    )


def oblivious_mean_dev_bound(n: float, q: float, delta: float, assumption: MomentAssumption) -> DeviationBound:
    """P(|mean_hat - mean| >= delta) with drop truncation at b = n**q, valid for n > n_star."""
    value = 2.0 * math.exp(-(n ** (1.0 - q)) * delta / 4.0)
    log_ns = math.log(3.0 * assumption.B / delta) / (q * min(1.0, assumption.p - 1.0))
    return DeviationBound(value, _exp_or_inf(log_ns), log_ns / LN10)


def oblivious_cvar_dev_bound(
    n: float, q: float, delta: float, alpha: float, assumption: MomentAssumption
) -> DeviationBound:
    """P(|CVaR_hat - CVaR| >= delta) with clamp truncation at b = n**q, valid for n > n_star."""
    if not 0 < q < 0.5:
        raise ValueError("q must lie in (0, 1/2)")
    p, B = assumption.p, assumption.B
    beta = 1.0 - alpha
    value = 6.0 * math.exp(-(n ** (1.0 - 2.0 * q)) * beta * delta**2 / 48.0)
    log_ns = max(
        math.log(2.0 * B / (beta * delta)) / (q * (p - 1.0)),
        math.log(B / min(alpha, beta)) / (q * p),
        math.log(delta / 2.0) / q,
    )
    return DeviationBound(value, _exp_or_inf(log_ns), log_ns / LN10)


def truncated_mean_dev_bound(n: int, b_sequence, delta: float, assumption: MomentAssumption) -> float:
    """High-probability (1 - delta) deviation radius of the drop-truncated mean.

    ``b_sequence`` holds the truncation level used for each of the n samples.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    b = np.asarray(b_sequence, dtype=float)
    if b.size != n or n < 1:
        raise ValueError("b_sequence must have length n >= 1")
    if np.any(b <= 0) or np.any(np.diff(b) < 0):
        raise ValueError("b_sequence must be positive and nondecreasing")
    p, B = assumption.p, assumption.B
    bn = float(b[-1])
    radius = float(np.sum(B / b ** (p - 1.0))) / n + 2.0 * bn * math.log(2.0 / delta) / n
    if p <= 2:
        radius += B / (2.0 * bn ** (p - 1.0))
    else:
        radius += B ** (2.0 / p) / (2.0 * bn)
    return radius


def nonoblivious_settings(
    objective: RiskObjective, gaps: Sequence[float], assumption: MomentAssumption
) -> tuple[float | None, float | None]:
    """Static truncation levels (b_m, b_c) when p, B and Delta[2] are known.

    A level is None when its metric carries zero weight.
    """
    g2 = _check_gaps(gaps)[0]
    p, B = assumption.p, assumption.B
    beta = objective.beta
    b_m = b_c = None
    if objective.xi1:
        b_m = (12.0 * B * objective.xi1 / g2) ** (1.0 / min(1.0, p - 1.0))
    if objective.xi2:
        b_c = max(
            (8.0 * objective.xi2 * B / (beta * g2)) ** (1.0 / (p - 1.0)),
            (B / min(objective.alpha, beta)) ** (1.0 / p),
        )
    return b_m, b_c


def nonoblivious_mean_dev_bound(n: float, b: float, delta: float) -> float:
    return 2.0 * math.exp(-n * delta / (4.0 * b))


def nonoblivious_cvar_dev_bound(n: float, alpha: float, b: float, delta: float) -> float:
    return thm2_ht_cvar_bound(n, alpha, b, delta)
