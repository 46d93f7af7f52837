"""Generalized successive rejects for risk-aware fixed-budget best-arm identification.

Arms are indexed from 0. Losses are minimized: at the end of every phase
the surviving arm with the LARGEST estimated objective is rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from riskbandit.distributions import ArmDistribution, MeanUndefined, NotC1, Seed
from riskbandit.risk import InsufficientSamples, RiskObjective, TruncationSchedule, tail_count

__all__ = [
    "BudgetTooSmall",
    "InsufficientPhaseBudget",
    "NonUniqueOptimum",
    "BanditInstance",
    "PhaseSchedule",
    "PhaseRecord",
    "RunTrace",
    "log_bar",
    "ue_schedule",
    "sr_schedule",
    "run_gsr",
    "true_best_arm",
]


class BudgetTooSmall(ValueError):
    pass


class InsufficientPhaseBudget(ValueError):
    pass


class NonUniqueOptimum(ValueError):
    pass


def log_bar(K: int) -> float:
    """1/2 + sum_{i=2}^{K} 1/i."""
    if K < 2:
        raise ValueError("K must be at least 2")
    return 0.5 + math.fsum(1.0 / i for i in range(2, K + 1))


@dataclass(frozen=True)
class PhaseSchedule:
    """Cumulative per-arm pull counts n_1 <= ... <= n_{K-1}."""

    counts: tuple[int, ...]

    def __post_init__(self):
        c = tuple(int(v) for v in self.counts)
        if not c:
            raise ValueError("a phase schedule needs at least one phase")
        if any(v < 0 for v in c) or any(a > b for a, b in zip(c, c[1:])):
            raise ValueError(f"pull counts must be nonnegative and nondecreasing: {c}")
        object.__setattr__(self, "counts", c)

    @property
    def K(self) -> int:
        return len(self.counts) + 1

    @property
    def budget(self) -> int:
        """Total pulls used: sum_{k<K-1} n_k + 2 n_{K-1}."""
        return sum(self.counts[:-1]) + 2 * self.counts[-1]

    def feasible(self, T: int) -> bool:
        return self.budget <= T


def ue_schedule(K: int, T: int) -> PhaseSchedule:
    """Uniform exploration: every arm is pulled floor(T/K) times."""
    if K < 2:
        raise ValueError("K must be at least 2")
    n = T // K
    if n < 1:
        raise BudgetTooSmall(f"T={T} gives zero pulls per arm for K={K}")
    return PhaseSchedule((n,) * (K - 1))


def sr_schedule(K: int, T: int) -> PhaseSchedule:
    """Successive rejects: n_k = ceil((T - K) / (log_bar(K) * (K + 1 - k))).

    If rounding ever breaks the budget, the top plateau of counts is lowered
    one unit at a time until it fits.
    """
    if K < 2:
        raise ValueError("K must be at least 2")
    if not T > K:
        raise BudgetTooSmall(f"successive rejects needs T > K (T={T}, K={K})")
    lb = log_bar(K)
    counts = [math.ceil((T - K) / (lb * (K + 1 - k))) for k in range(1, K)]
    while sum(counts[:-1]) + 2 * counts[-1] > T:
        j = len(counts) - 1
        while j > 0 and counts[j - 1] == counts[j]:
            j -= 1
        counts[j] -= 1
        if counts[0] < 1:
            raise BudgetTooSmall(f"no feasible successive-rejects schedule for T={T}, K={K}")
    return PhaseSchedule(tuple(counts))


@dataclass(frozen=True)
class BanditInstance:
    """K >= 2 arms and the objective that ranks them.

    The optimal arm is derived from the analytic oracles at construction;
    an exact tie raises NonUniqueOptimum. When an oracle is unavailable
    (e.g. CVaR of a Constant arm) the check is deferred to ``true_best_arm``.
    """

    arms: tuple[ArmDistribution, ...]
    objective: RiskObjective
    _values: tuple[float, ...] | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        arms = tuple(self.arms)
        if len(arms) < 2:
            raise ValueError("a bandit instance needs at least two arms")
        object.__setattr__(self, "arms", arms)
        try:
            vals = tuple(self.objective.analytic(a) for a in arms)
        except (NotC1, MeanUndefined):
            vals = None
        object.__setattr__(self, "_values", vals)
        if vals is not None:
            _argmin_unique(vals)

    @property
    def K(self) -> int:
        return len(self.arms)

    def analytic_values(self) -> tuple[float, ...]:
        if self._values is None:
            return tuple(self.objective.analytic(a) for a in self.arms)
        return self._values

    @property
    def optimal_arm(self) -> int:
        return _argmin_unique(self.analytic_values())

    def gaps(self) -> list[float]:
        """Sorted suboptimality gaps Delta[2] <= ... <= Delta[K]."""
        v = sorted(self.analytic_values())
        return [x - v[0] for x in v[1:]]


def _argmin_unique(vals):
    best = min(vals)
    tol = 1e-12 * max(1.0, abs(best))
    winners = [i for i, v in enumerate(vals) if v - best <= tol]
    if len(winners) > 1:
        raise NonUniqueOptimum(f"arms {winners} share the optimal objective value {best}")
    return winners[0]


def true_best_arm(instance: BanditInstance) -> int:
    return instance.optimal_arm


@dataclass(frozen=True)
class PhaseRecord:
    survivors: tuple[int, ...]
    counts: tuple[int, ...]
    estimates: tuple[float, ...]
    rejected: int


@dataclass(frozen=True)
class RunTrace:
    phases: tuple[PhaseRecord, ...]
    selected: int
    total_pulls: int

    def to_dict(self) -> dict:
        return {
            "selected": self.selected,
            "total_pulls": self.total_pulls,
            "phases": [
                {
                    "phase": k + 1,
                    "survivors": list(p.survivors),
                    "counts": list(p.counts),
                    "estimates": list(p.estimates),
                    "rejected": p.rejected,
                }
                for k, p in enumerate(self.phases)
            ],
        }


def run_gsr(
    instance: BanditInstance,
    schedule: PhaseSchedule,
    mean_schedule: TruncationSchedule | None = None,
    cvar_schedule: TruncationSchedule | None = None,
    seed: Seed = Seed(0),
    streams: Sequence[int] | None = None,
) -> RunTrace:
    """Run one pass of generalized successive rejects.

    Arm ``i`` draws its losses from the stream ``seed.child(streams[i])``
    (default ``streams[i] = i``). Samples accumulate across phases; at phase
    k each survivor's statistic uses all n_k of its samples, truncated at the
    level its schedule gives for n_k. Ties in the rejection are broken
    toward the smallest arm index.
    """
    K = instance.K
    if schedule.K != K:
        raise ValueError(f"schedule is for K={schedule.K} arms, instance has K={K}")
    obj = instance.objective
    counts = schedule.counts
    if counts[0] < 1:
        raise InsufficientPhaseBudget("the first phase must pull every arm at least once")
    if obj.xi2 and tail_count(counts[0], obj.alpha)[0] < 1:
        raise InsufficientPhaseBudget(
            f"n_1={counts[0]} is below ceil(1/(1-alpha)) for alpha={obj.alpha}; "
            "phase-1 CVaR estimates are undefined"
        )
    if streams is None:
        streams = range(K)
    if len(streams) != K:
        raise ValueError("need one stream label per arm")
    mean_schedule = mean_schedule or TruncationSchedule.none()
    cvar_schedule = cvar_schedule or TruncationSchedule.none()

    gens = [seed.child(s).generator() for s in streams]
    bufs = [np.empty(counts[-1]) for _ in range(K)]
    filled = [0] * K
    survivors = list(range(K))
    xi1, xi2, alpha = obj.xi1, obj.xi2, obj.alpha
    records = []
    prev = 0
    total = 0

    for nk in counts:
        b_m = mean_schedule.level(nk)
        b_c = cvar_schedule.level(nk)
        if xi2:
            k_tail, nb = tail_count(nk, alpha)
            cut = nk - k_tail
        est = []
        for i in survivors:
            d = nk - filled[i]
            if d:
                bufs[i][filled[i]:nk] = instance.arms[i].sample_uniforms(gens[i].random(d))
                filled[i] = nk
            x = bufs[i][:nk]
            val = 0.0
            if xi1:
                if b_m is None:
                    m = x.sum() / nk
                else:
                    m = np.where(np.abs(x) <= b_m, x, 0.0).sum() / nk
                val += xi1 * m
            if xi2:
                top = np.partition(x, cut)[cut:]
                if b_c is not None:
                    top = np.clip(top, -b_c, b_c)
                val += xi2 * (top.sum() / nb)
            est.append(float(val))
        total += len(survivors) * (nk - prev)
        prev = nk
        j = int(np.argmax(est))
        rejected = survivors[j]
        records.append(PhaseRecord(tuple(survivors), (nk,) * len(survivors), tuple(est), rejected))
        del survivors[j]

    return RunTrace(tuple(records), survivors[0], total)
