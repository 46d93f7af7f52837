"""Seeded Monte-Carlo estimates of the misidentification probability.

Run ``r`` of configuration ``label`` at budget ``T`` uses the seed
``Seed(master, (crc32(label), T, r))``; arm ``i`` then draws from
``Seed(master, (crc32(label), T, r, i))``. Every grid point is therefore a
pure function of the master seed, whatever the order or process in which
runs execute.
"""

from __future__ import annotations

import csv
import math
import os
import tempfile
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from riskbandit.bandit import (
    BanditInstance,
    InsufficientPhaseBudget,
    PhaseSchedule,
    run_gsr,
    sr_schedule,
    ue_schedule,
)
from riskbandit.bounds import MomentAssumption, nonoblivious_settings
from riskbandit.distributions import Exponential, Pareto, Seed
from riskbandit.risk import RiskObjective, TruncationSchedule, tail_count

__all__ = [
    "CSV_HEADER",
    "AlgorithmConfig",
    "ExperimentSpec",
    "ErrorPoint",
    "SweepResult",
    "run_seed",
    "check_feasible",
    "estimate_error_probability",
    "sweep",
    "write_csv",
    "read_csv",
    "geometric_grid",
    "preset_fig1",
    "preset_fig3",
    "FIG1_CVAR_QC",
    "DEFAULT_MASTER_SEED",
]

CSV_HEADER = ("label", "algo", "T", "runs", "errors", "p_e", "stderr", "master_seed")
DEFAULT_MASTER_SEED = 20200
# growth exponent for the oblivious CVaR run in the ten-arm preset
FIG1_CVAR_QC = 0.4


@dataclass(frozen=True)
class AlgorithmConfig:
    label: str
    kind: str = "sr"
    mean_trunc: TruncationSchedule = field(default_factory=TruncationSchedule.none)
    cvar_trunc: TruncationSchedule = field(default_factory=TruncationSchedule.none)

    def __post_init__(self):
        if self.kind not in ("sr", "ue"):
            raise ValueError(f"algorithm kind must be 'sr' or 'ue', got {self.kind!r}")
        if not self.label or "," in self.label or "\n" in self.label:
            raise ValueError(f"label must be nonempty and free of commas/newlines: {self.label!r}")
        self.cvar_trunc.check_for_cvar()

    def schedule(self, K: int, T: int) -> PhaseSchedule:
        return sr_schedule(K, T) if self.kind == "sr" else ue_schedule(K, T)


@dataclass(frozen=True)
class ExperimentSpec:
    instance: BanditInstance
    configs: tuple[AlgorithmConfig, ...]
    T_grid: tuple[int, ...]
    runs: int = 2000
    master_seed: int = DEFAULT_MASTER_SEED
    name: str = ""

    def __post_init__(self):
        configs = tuple(self.configs)
        labels = [c.label for c in configs]
        if len(set(labels)) != len(labels):
            raise ValueError(f"configuration labels must be unique: {labels}")
        grid = tuple(int(t) for t in self.T_grid)
        if any(t <= 0 for t in grid) or any(a >= b for a, b in zip(grid, grid[1:])):
            raise ValueError(f"T_grid must be strictly increasing positive integers: {grid}")
        if self.runs < 1:
            raise ValueError("runs must be positive")
        object.__setattr__(self, "configs", configs)
        object.__setattr__(self, "T_grid", grid)


@dataclass(frozen=True)
class ErrorPoint:
    label: str
    algo: str
    T: int
    runs: int
    errors: int
    master_seed: int

    @property
    def p_e(self) -> float:
        return self.errors / self.runs

    @property
    def stderr(self) -> float:
        p = self.p_e
        return math.sqrt(p * (1.0 - p) / self.runs)

    def row(self) -> list[str]:
        return [
            self.label,
            self.algo,
            str(self.T),
            str(self.runs),
            str(self.errors),
            _fmt(self.p_e),
            _fmt(self.stderr),
            str(self.master_seed),
        ]


def _fmt(x: float) -> str:
    return format(x, ".10g")


def run_seed(master_seed: int, label: str, T: int, run: int) -> Seed:
    return Seed(master_seed, (zlib.crc32(label.encode("utf-8")), int(T), int(run)))


def check_feasible(instance: BanditInstance, config: AlgorithmConfig, T: int) -> PhaseSchedule:
    """Build the phase schedule and verify the GSR preconditions without running."""
    schedule = config.schedule(instance.K, T)
    if not schedule.feasible(T):
        raise InsufficientPhaseBudget(f"schedule {schedule.counts} exceeds budget T={T}")
    obj = instance.objective
    if obj.xi2 and tail_count(schedule.counts[0], obj.alpha)[0] < 1:
        raise InsufficientPhaseBudget(
            f"{config.label}: T={T} gives n_1={schedule.counts[0]}, too few for CVaR at alpha={obj.alpha}"
        )
    return schedule


def _count_errors(instance, config, T, master_seed, best, lo, hi):
    schedule = config.schedule(instance.K, T)
    errors = 0
    for r in range(lo, hi):
        trace = run_gsr(
            instance,
            schedule,
            config.mean_trunc,
            config.cvar_trunc,
            run_seed(master_seed, config.label, T, r),
        )
        errors += trace.selected != best
    return errors


def _chunks(runs, n):
    edges = np.linspace(0, runs, n + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def estimate_error_probability(
    instance: BanditInstance,
    config: AlgorithmConfig,
    T: int,
    runs: int,
    master_seed: int = DEFAULT_MASTER_SEED,
    workers: int = 1,
    pool: ProcessPoolExecutor | None = None,
) -> ErrorPoint:
    """Fraction of ``runs`` seeded GSR executions that miss the true optimal arm."""
    check_feasible(instance, config, T)
    best = instance.optimal_arm
    if pool is None and workers <= 1:
        errors = _count_errors(instance, config, T, master_seed, best, 0, runs)
    else:
        own = pool is None
        pool = pool or ProcessPoolExecutor(max_workers=workers)
        try:
            futs = [
                pool.submit(_count_errors, instance, config, T, master_seed, best, a, b)
                for a, b in _chunks(runs, 4 * max(workers, 1))
            ]
            errors = sum(f.result() for f in futs)
        finally:
            if own:
                pool.shutdown()
    return ErrorPoint(config.label, config.kind, int(T), int(runs), int(errors), int(master_seed))


@dataclass
class SweepResult:
    points: list[ErrorPoint]
    failures: list[tuple[str, int, str]]

    def curve(self, label: str) -> list[ErrorPoint]:
        return [p for p in self.points if p.label == label]

    def get(self, label: str, T: int) -> ErrorPoint:
        for p in self.points:
            if p.label == label and p.T == T:
                return p
        raise KeyError((label, T))


def write_csv(points: Sequence[ErrorPoint], path, plot_data: bool = True) -> None:
    """Write the result CSV atomically, plus one ``T,p_e,stderr`` file per label."""
    path = Path(path)
    _atomic_write(path, [list(CSV_HEADER)] + [p.row() for p in points])
    if plot_data:
        for label in dict.fromkeys(p.label for p in points):
            rows = [["T", "p_e", "stderr"]]
            rows += [[str(p.T), _fmt(p.p_e), _fmt(p.stderr)] for p in points if p.label == label]
            _atomic_write(plot_data_path(path, label), rows)


def plot_data_path(path, label: str) -> Path:
    path = Path(path)
    safe = "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in label)
    return path.with_name(f"{path.stem}.{safe}.csv")


def _atomic_write(path: Path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerows(rows)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_csv(path) -> list[ErrorPoint]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if tuple(header or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        return [
            ErrorPoint(row[0], row[1], int(row[2]), int(row[3]), int(row[4]), int(row[7]))
            for row in r
            if row
        ]


def sweep(
    spec: ExperimentSpec,
    out=None,
    workers: int = 1,
    resume: bool = True,
    progress=None,
) -> SweepResult:
    """Evaluate every (config, T) grid point, optionally writing ``out`` as CSV.

    Infeasible grid points are reported in ``failures`` and skipped. With
    ``resume``, rows already present in ``out`` for the same runs and master
    seed are reused instead of recomputed.
    """
    done = {}
    if out is not None and resume and Path(out).exists():
        for p in read_csv(out):
            if p.runs == spec.runs and p.master_seed == spec.master_seed:
                done[(p.label, p.T)] = p
    todo, failures = [], []
    for cfg in spec.configs:
        for T in spec.T_grid:
            try:
                check_feasible(spec.instance, cfg, T)
            except ValueError as exc:
                failures.append((cfg.label, T, str(exc)))
            else:
                todo.append((cfg, T))
    points = []
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for cfg, T in todo:
            if (cfg.label, T) in done and done[(cfg.label, T)].algo == cfg.kind:
                points.append(done[(cfg.label, T)])
                continue
            pt = estimate_error_probability(
                spec.instance, cfg, T, spec.runs, spec.master_seed, workers, pool=pool
            )
            points.append(pt)
            if progress is not None:
                progress(pt)
    finally:
        if pool is not None:
            pool.shutdown()
    if out is not None:
        write_csv(points, out)
    return SweepResult(points, failures)


def geometric_grid(lo: int, hi: int, num: int) -> tuple[int, ...]:
    return tuple(int(round(t)) for t in np.geomspace(lo, hi, num))


FIG_GRID = geometric_grid(500, 50000, 10)


def fig1_arms():
    """Ten arms: one Pareto(3) with mean 0.9, four Pareto(3) and five Exponential with mean 1."""
    return (Pareto.from_mean(3.0, 0.9),) + (Pareto.from_mean(3.0, 1.0),) * 4 + (Exponential(1.0),) * 5


def preset_fig1(
    family: str = "cvar",
    runs: int = 2000,
    T_grid: Sequence[int] | None = None,
    master_seed: int = DEFAULT_MASTER_SEED,
    q_c: float = FIG1_CVAR_QC,
) -> ExperimentSpec:
    """Ten-arm heavy-tailed instance: oblivious vs non-oblivious successive rejects.

    ``family="mean"`` minimizes the mean (oblivious q_m = 0.75 against a
    static drop-truncation level from p=2, B=2, Delta=0.1). ``family="cvar"``
    minimizes CVaR at alpha=0.95 (oblivious b = n**q_c against the static
    clamp level (4B/(Delta*beta))**(1/(p-1)) = 640 from p=2, B=2, Delta=0.25).
    """
    assumption = MomentAssumption(p=2.0, B=2.0)
    grid = FIG_GRID if T_grid is None else tuple(T_grid)
    if family == "mean":
        obj = RiskObjective(1.0, 0.0, 0.95)
        b_m, _ = nonoblivious_settings(obj, [0.1], assumption)
        configs = (
            AlgorithmConfig("fig1-mean-oblivious-qm0.75", "sr", mean_trunc=TruncationSchedule.grow(0.75)),
            AlgorithmConfig("fig1-mean-nonoblivious", "sr", mean_trunc=TruncationSchedule.fixed(b_m)),
        )
    elif family == "cvar":
        obj = RiskObjective(0.0, 1.0, 0.95)
        p, B, gap = assumption.p, assumption.B, 0.25
        b_c = (4.0 * B / (gap * obj.beta)) ** (1.0 / (p - 1.0))
        configs = (
            AlgorithmConfig(f"fig1-cvar-oblivious-qc{q_c:g}", "sr", cvar_trunc=TruncationSchedule.grow(q_c)),
            AlgorithmConfig("fig1-cvar-nonoblivious", "sr", cvar_trunc=TruncationSchedule.fixed(b_c)),
        )
    else:
        raise ValueError(f"family must be 'mean' or 'cvar', got {family!r}")
    return ExperimentSpec(BanditInstance(fig1_arms(), obj), configs, grid, runs, master_seed, f"fig1-{family}")


FIG3_QM = (0.4, 0.5, 0.7)
# moment assumption handed to the non-oblivious comparator; E|X|^1.5 <= 1.55 for both arms
FIG3_ASSUMPTION = MomentAssumption(p=1.5, B=2.0)
FIG3_GAP = 0.1


def preset_fig3(
    runs: int = 2000,
    T_grid: Sequence[int] | None = None,
    master_seed: int = DEFAULT_MASTER_SEED,
) -> ExperimentSpec:
    """Two arms, mean minimization: Pareto(1.9) with mean 1.0 against Exponential with mean 0.9.

    The heavy-tailed arm is the suboptimal one, and slow truncation growth
    underestimates its mean.
    """
    obj = RiskObjective(1.0, 0.0, 0.95)
    arms = (Pareto.from_mean(1.9, 1.0), Exponential(0.9))
    b_m, _ = nonoblivious_settings(obj, [FIG3_GAP], FIG3_ASSUMPTION)
    configs = tuple(
        AlgorithmConfig(f"fig3-oblivious-qm{q:g}", "sr", mean_trunc=TruncationSchedule.grow(q)) for q in FIG3_QM
    ) + (AlgorithmConfig("fig3-nonoblivious", "sr", mean_trunc=TruncationSchedule.fixed(b_m)),)
    grid = FIG_GRID if T_grid is None else tuple(T_grid)
    return ExperimentSpec(BanditInstance(arms, obj), configs, grid, runs, master_seed, "fig3")
