"""Command-line entry point: ``riskbandit estimate|bound|run|sweep|preset``.

Exit status is 0 on success, 1 on user error (bad flags, bad config, bad
data, infeasible budgets) and 2 on anything unexpected. Result files are
written atomically at the very end, so a failing command leaves the output
path untouched.

Instance config files are YAML::

    arms:
      - pareto(shape=3, scale=0.6)
      - exp(mean=1.0)
    objective: {xi1: 0, xi2: 1, alpha: 0.95}
    algorithms:
      - {label: oblivious, kind: sr, q_c: 0.4}
      - {label: static, kind: sr, cvar_trunc: "fixed:640"}
    experiment: {T_grid: [500, 1500, 5000], runs: 2000, seed: 20200}

``RISKBANDIT_SEED`` overrides the config seed; an explicit ``--seed`` flag
overrides both.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
import yaml

from riskbandit import bounds as bd
from riskbandit.bandit import BanditInstance, log_bar, run_gsr
from riskbandit.distributions import ArmDistribution, MeanUndefined, NotC1, Seed, parse_distribution
from riskbandit.experiments import (
    DEFAULT_MASTER_SEED,
    FIG1_CVAR_QC,
    AlgorithmConfig,
    ErrorPoint,
    ExperimentSpec,
    check_feasible,
    preset_fig1,
    preset_fig3,
    sweep,
)
from riskbandit.risk import (
    RiskObjective,
    TruncationSchedule,
    empirical_cvar,
    empirical_var,
    truncated_cvar,
    truncated_mean,
)

SEED_ENV = "RISKBANDIT_SEED"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- config


class ConfigIssue(NamedTuple):
    where: str
    message: str

    def __str__(self):
        return f"{self.where}: {self.message}"


class ConfigError(ValueError):
    def __init__(self, issues: Sequence[ConfigIssue]):
        self.issues = list(issues)
        super().__init__("\n".join(str(i) for i in self.issues))


@dataclass(frozen=True)
class ConfigDocument:
    arms: tuple[ArmDistribution, ...]
    objective: RiskObjective
    algorithms: tuple[AlgorithmConfig, ...] = ()
    T_grid: tuple[int, ...] = ()
    runs: int = 2000
    seed: int = DEFAULT_MASTER_SEED
    name: str = ""
    instance: BanditInstance = field(default=None, compare=False, repr=False)

    @property
    def K(self) -> int:
        return len(self.arms)

    def experiment_spec(self, runs: int | None = None, seed: int | None = None) -> ExperimentSpec:
        if not self.algorithms:
            raise ValueError("config has no 'algorithms' block; nothing to sweep")
        return ExperimentSpec(
            self.instance,
            self.algorithms,
            self.T_grid,
            self.runs if runs is None else runs,
            self.seed if seed is None else seed,
            self.name,
        )

    def to_dict(self) -> dict:
        algos = []
        for a in self.algorithms:
            algos.append(
                {"label": a.label, "kind": a.kind, "mean_trunc": str(a.mean_trunc), "cvar_trunc": str(a.cvar_trunc)}
            )
        d = {
            "arms": [a.literal() for a in self.arms],
            "objective": {"xi1": self.objective.xi1, "xi2": self.objective.xi2, "alpha": self.objective.alpha},
            "algorithms": algos,
            "experiment": {"T_grid": list(self.T_grid), "runs": self.runs, "seed": self.seed},
        }
        if self.name:
            d["experiment"]["name"] = self.name
        return d

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)


def _node_positions(node, path=(), out=None):
    """Map every key path in a composed YAML tree to its 1-based (line, column)."""
    if out is None:
        out = {}
    out[path] = (node.start_mark.line + 1, node.start_mark.column + 1)
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            if isinstance(k, yaml.ScalarNode):
                _node_positions(v, path + (k.value,), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _node_positions(v, path + (i,), out)
    return out


def _path_str(path):
    s = ""
    for p in path:
        s += f"[{p}]" if isinstance(p, int) else (f".{p}" if s else str(p))
    return s or "<document>"


class _Checker:
    def __init__(self, positions):
        self.positions = positions
        self.issues: list[ConfigIssue] = []

    def error(self, path, message):
        where = _path_str(path)
        # fall back to the nearest enclosing node that has a position
        p = tuple(path)
        while p not in self.positions and p:
            p = p[:-1]
        if p in self.positions:
            line, col = self.positions[p]
            where = f"line {line}, column {col} ({where})"
        self.issues.append(ConfigIssue(where, message))

    def number(self, value, path, integer=False):
        ok = isinstance(value, int) if integer else isinstance(value, (int, float))
        if isinstance(value, bool) or not ok:
            self.error(path, f"expected {'an integer' if integer else 'a number'}, got {value!r}")
            return None
        if not integer and not math.isfinite(value):
            self.error(path, f"expected a finite number, got {value!r}")
            return None
        return value

    def mapping(self, value, path, allowed):
        if not isinstance(value, dict):
            self.error(path, "expected a mapping")
            return None
        for k in value:
            if k not in allowed:
                self.error(tuple(path) + (k,), f"unknown key {k!r}; expected one of {sorted(allowed)}")
        return value


TOP_KEYS = {"arms", "objective", "algorithms", "experiment"}
ALGO_KEYS = {"label", "kind", "mean_trunc", "cvar_trunc", "q_m", "q_c"}


def _parse_algorithm(chk, raw, i):
    path = ("algorithms", i)
    a = chk.mapping(raw, path, ALGO_KEYS)
    if a is None:
        return None
    n_before = len(chk.issues)
    label = a.get("label")
    if not isinstance(label, str) or not label:
        chk.error(path + ("label",), "each algorithm needs a nonempty string label")
    kind = a.get("kind", "sr")
    if kind not in ("sr", "ue"):
        chk.error(path + ("kind",), f"kind must be 'sr' or 'ue', got {kind!r}")
    scheds = {}
    for metric, qkey in (("mean_trunc", "q_m"), ("cvar_trunc", "q_c")):
        sched = TruncationSchedule.none()
        if metric in a and qkey in a:
            chk.error(path + (qkey,), f"give either {metric} or {qkey}, not both")
        elif qkey in a:
            q = chk.number(a[qkey], path + (qkey,))
            if q is not None:
                try:
                    sched = TruncationSchedule.grow(q)
                    if metric == "cvar_trunc":
                        sched.check_for_cvar()
                except ValueError as exc:
                    chk.error(path + (qkey,), str(exc))
        elif metric in a:
            try:
                sched = TruncationSchedule.parse(str(a[metric]))
                if metric == "cvar_trunc":
                    sched.check_for_cvar()
            except ValueError as exc:
                chk.error(path + (metric,), str(exc))
        scheds[metric] = sched
    if len(chk.issues) > n_before:
        return None
    try:
        return AlgorithmConfig(label, kind, scheds["mean_trunc"], scheds["cvar_trunc"])
    except ValueError as exc:
        chk.error(path + ("label",), str(exc))
        return None


def parse_config(text: str) -> ConfigDocument:
    """Parse and validate a YAML instance/experiment config.

    Raises ConfigError carrying every problem found, each located by line,
    column and key path.
    """
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None) or getattr(exc, "context_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "<document>"
        msg = getattr(exc, "problem", None) or str(exc)
        raise ConfigError([ConfigIssue(where, f"YAML syntax error: {msg}")]) from None
    chk = _Checker(_node_positions(root) if root is not None else {})
    if chk.mapping(data, (), TOP_KEYS) is None:
        raise ConfigError(chk.issues)

    arms = []
    raw_arms = data.get("arms")
    if not isinstance(raw_arms, list):
        chk.error(("arms",), "required: a list of distribution literals")
    else:
        if len(raw_arms) < 2:
            chk.error(("arms",), f"need at least two arms, got {len(raw_arms)}")
        for i, lit in enumerate(raw_arms):
            try:
                arms.append(parse_distribution(str(lit)))
            except ValueError as exc:
                chk.error(("arms", i), str(exc))

    objective = None
    raw_obj = data.get("objective")
    if raw_obj is None:
        chk.error(("objective",), "required: mapping with xi1, xi2, alpha")
    elif chk.mapping(raw_obj, ("objective",), {"xi1", "xi2", "alpha"}) is not None:
        vals = {}
        for k, default in (("xi1", 0.0), ("xi2", 0.0), ("alpha", 0.95)):
            vals[k] = chk.number(raw_obj.get(k, default), ("objective", k))
        if None not in vals.values():
            if not 0.0 < vals["alpha"] < 1.0:
                chk.error(("objective", "alpha"), f"alpha must lie in (0, 1), got {vals['alpha']}")
            else:
                try:
                    objective = RiskObjective(float(vals["xi1"]), float(vals["xi2"]), float(vals["alpha"]))
                except ValueError as exc:
                    chk.error(("objective",), str(exc))

    algorithms = []
    raw_alg = data.get("algorithms", [])
    if not isinstance(raw_alg, list):
        chk.error(("algorithms",), "expected a list of algorithm blocks")
    else:
        for i, raw in enumerate(raw_alg):
            cfg = _parse_algorithm(chk, raw, i)
            if cfg is not None:
                algorithms.append(cfg)
        labels = [c.label for c in algorithms]
        for i, lab in enumerate(labels):
            if lab in labels[:i]:
                chk.error(("algorithms", i, "label"), f"duplicate label {lab!r}")

    grid, runs, seed, name = (), 2000, DEFAULT_MASTER_SEED, ""
    raw_exp = data.get("experiment", {})
    if chk.mapping(raw_exp, ("experiment",), {"T_grid", "runs", "seed", "name"}) is not None:
        g = raw_exp.get("T_grid", [])
        if not isinstance(g, list):
            chk.error(("experiment", "T_grid"), "expected a list of budgets")
        else:
            vals = [chk.number(t, ("experiment", "T_grid", i), integer=True) for i, t in enumerate(g)]
            if None not in vals:
                if any(t <= 0 for t in vals) or any(a >= b for a, b in zip(vals, vals[1:])):
                    chk.error(("experiment", "T_grid"), "budgets must be positive and strictly increasing")
                grid = tuple(vals)
        r = chk.number(raw_exp.get("runs", runs), ("experiment", "runs"), integer=True)
        if r is not None:
            if r < 1:
                chk.error(("experiment", "runs"), "runs must be positive")
            runs = r
        s = chk.number(raw_exp.get("seed", seed), ("experiment", "seed"), integer=True)
        if s is not None:
            if not 0 <= s < 2**64:
                chk.error(("experiment", "seed"), "seed must be a 64-bit unsigned integer")
            seed = s
        name = str(raw_exp.get("name", ""))

    instance = None
    if not chk.issues:
        try:
            instance = BanditInstance(tuple(arms), objective)
        except ValueError as exc:
            chk.error(("arms",), str(exc))
    if chk.issues:
        raise ConfigError(chk.issues)
    return ConfigDocument(tuple(arms), objective, tuple(algorithms), grid, runs, seed, name, instance)


def load_config(path) -> ConfigDocument:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError([ConfigIssue(f"{path}: {i.where}", i.message) for i in exc.issues]) from None


def resolve_seed(flag: int | None, config_seed: int) -> int:
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            s = int(env.strip(), 0)
        except ValueError:
            raise UsageError(f"{SEED_ENV}={env!r} is not an integer") from None
        if not 0 <= s < 2**64:
            raise UsageError(f"{SEED_ENV} must be a 64-bit unsigned integer")
        return s
    return config_seed


# ---------------------------------------------------------------- parsing helpers


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _truncation(text):
    try:
        return TruncationSchedule.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _seed(text):
    try:
        s = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= s < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return s


def _g(x):
    return f"{x:.6g}"


def _table(rows, header):
    rows = [header] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows)


def _write_text_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


# ---------------------------------------------------------------- estimate


def read_numbers(stream, name="<stdin>") -> np.ndarray:
    vals = []
    for lineno, line in enumerate(stream, 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        try:
            v = float(s)
        except ValueError:
            raise UsageError(f"{name}:{lineno}: not a number: {s!r}") from None
        if not math.isfinite(v):
            raise UsageError(f"{name}:{lineno}: non-finite value {s!r}")
        vals.append(v)
    return np.array(vals)


def cmd_estimate(args, out):
    if args.file in (None, "-"):
        x = read_numbers(sys.stdin)
    else:
        try:
            with open(args.file) as fh:
                x = read_numbers(fh, args.file)
        except OSError as exc:
            raise UsageError(f"cannot read {args.file}: {exc.strerror}") from None
    if x.size == 0:
        raise UsageError("no samples given")
    args.trunc_cvar.check_for_cvar()
    obj = RiskObjective(args.xi1, args.xi2, args.alpha)
    n = x.size
    b_m = args.trunc_mean.level(n)
    b_c = args.trunc_cvar.level(n)
    mean = truncated_mean(x, b_m) if b_m is not None else float(x.mean())
    var = empirical_var(x, obj.alpha)
    cvar = truncated_cvar(x, obj.alpha, b_c) if b_c is not None else empirical_cvar(x, obj.alpha)
    rows = [("n", str(n))]
    if b_m is not None:
        rows.append(("b_mean", _g(b_m)))
    if b_c is not None:
        rows.append(("b_cvar", _g(b_c)))
    rows += [("mean", _g(mean)), ("VaR", _g(var)), ("CVaR", _g(cvar))]
    rows.append(("objective", _g(obj.xi1 * mean + obj.xi2 * cvar)))
    w = max(len(r[0]) for r in rows)
    print("\n".join(f"{k.ljust(w)}  {v}" for k, v in rows), file=out)


# ---------------------------------------------------------------- bound


def _fmt_thr(log10_thr):
    return bd.format_magnitude(log10_thr)


def _yn(flag):
    return "yes" if flag else "no"


def _gaps(args, K):
    g = args.gaps
    if len(g) == 1 and K > 2:
        g = g * (K - 1)
    return g


def _bound_rows(kind, a):
    """Rows of (term, value, valid, threshold) for one bound family."""
    if kind == "thm1":
        return [("thm1", _g(bd.thm1_bounded_cvar_bound(a.n, a.alpha, a.b, a.eps)), "-", "-")]
    if kind == "thm2":
        if (a.p is None) != (a.B is None):
            raise UsageError("thm2: give both --p and --B, or neither")
        thr = bd.min_truncation(a.delta, a.alpha, bd.MomentAssumption(a.p, a.B)) if a.p else None
        val = bd.thm2_ht_cvar_bound(a.n, a.alpha, a.b, a.delta)
        if thr is None:
            return [("thm2", _g(val), "-", "-")]
        return [("thm2", _g(val), _yn(a.b > thr), f"b > {_g(thr)}")]
    ma = bd.MomentAssumption(a.p, a.B)
    if kind == "min-trunc":
        terms = bd.min_truncation_terms(a.delta, a.alpha, ma, a.v_abs)
        rows = [(k, _g(v), "-", "-") for k, v in terms.items()]
        return rows + [("min_truncation", _g(max(terms.values())), "-", "-")]
    if kind == "var-mag":
        return [("var_magnitude", _g(bd.var_magnitude_bound(ma, a.alpha)), "-", "-")]
    if kind in ("ue", "sr"):
        obj = RiskObjective(a.xi1, a.xi2, a.alpha)
        gaps = _gaps(a, a.K)
        fn = bd.ue_error_bound if kind == "ue" else bd.sr_error_bound
        r = fn(a.T, a.K, gaps, obj, a.q_m, a.q_c, ma)
        thr = f"T > {_fmt_thr(r.log10_threshold)}"
        rows = []
        if obj.xi1:
            rows.append(("mean_term", _g(r.mean_term), _yn(r.valid), thr))
        if obj.xi2:
            rows.append(("cvar_term", _g(r.cvar_term), _yn(r.valid), thr))
        rows.append((f"{kind}_error_bound" + (" (vacuous)" if r.vacuous else ""), _g(r.value), _yn(r.valid), thr))
        if kind == "sr":
            rows.append(("log_bar", _g(log_bar(a.K)), "-", "-"))
        return rows
    if kind == "obl-mean":
        r = bd.oblivious_mean_dev_bound(a.n, a.q, a.delta, ma)
        return [("obl_mean", _g(r.value), _yn(math.log10(a.n) > r.log10_n_star), f"n > {_fmt_thr(r.log10_n_star)}")]
    if kind == "obl-cvar":
        r = bd.oblivious_cvar_dev_bound(a.n, a.q, a.delta, a.alpha, ma)
        return [("obl_cvar", _g(r.value), _yn(math.log10(a.n) > r.log10_n_star), f"n > {_fmt_thr(r.log10_n_star)}")]
    if kind == "tea":
        n = int(a.n)
        if (a.b is None) == (a.q is None):
            raise UsageError("tea: give exactly one of --b (constant level) or --q (level i**q)")
        b_seq = [a.b] * n if a.b is not None else [(i + 1) ** a.q for i in range(n)]
        return [("radius", _g(bd.truncated_mean_dev_bound(n, b_seq, a.delta, ma)), "-", "-")]
    if kind == "nonobl":
        obj = RiskObjective(a.xi1, a.xi2, a.alpha)
        g2 = a.gaps[0]
        b_m, b_c = bd.nonoblivious_settings(obj, a.gaps, ma)
        rows = []
        if b_m is not None:
            rows.append(("b_m", _g(b_m), "-", "-"))
            if a.n:
                rows.append(("mean_dev", _g(bd.nonoblivious_mean_dev_bound(a.n, b_m, g2)), "-", "-"))
        if b_c is not None:
            rows.append(("b_c", _g(b_c), "-", "-"))
            if a.n:
                rows.append(("cvar_dev", _g(bd.nonoblivious_cvar_dev_bound(a.n, a.alpha, b_c, g2)), "-", "-"))
        return rows
    raise UsageError(f"unknown bound {kind!r}")


def cmd_bound(args, out):
    rows = _bound_rows(args.kind, args)
    header = ["term", "value", "valid", "threshold"]
    print(_table(rows, header), file=out)
    if args.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        _write_text_atomic(args.csv, buf.getvalue())


# ---------------------------------------------------------------- run / sweep / preset


def cmd_run(args, out):
    doc = load_config(args.config)
    obj = doc.objective
    if args.xi1 is not None or args.xi2 is not None or args.alpha is not None:
        obj = RiskObjective(
            obj.xi1 if args.xi1 is None else args.xi1,
            obj.xi2 if args.xi2 is None else args.xi2,
            obj.alpha if args.alpha is None else args.alpha,
        )
    instance = BanditInstance(doc.arms, obj)
    cfg = AlgorithmConfig("cli-run", args.algo, args.trunc_mean, args.trunc_cvar)
    schedule = check_feasible(instance, cfg, args.T)
    seed = resolve_seed(args.seed, doc.seed)
    trace = run_gsr(instance, schedule, cfg.mean_trunc, cfg.cvar_trunc, Seed(seed))
    try:
        best = instance.optimal_arm
    except (NotC1, MeanUndefined):
        best = None

    lines = [f"algo={args.algo} T={args.T} K={instance.K} seed={seed} n={list(schedule.counts)}"]
    for k, ph in enumerate(trace.phases, 1):
        est = ", ".join(f"{i}:{_g(v)}" for i, v in zip(ph.survivors, ph.estimates))
        lines.append(f"phase {k}: n={ph.counts[0]} estimates {{{est}}} reject {ph.rejected}")
    tail = f"selected arm {trace.selected}"
    if best is not None:
        tail += f" (true best arm {best}, {'correct' if best == trace.selected else 'wrong'})"
    lines.append(tail)
    lines.append(f"total pulls {trace.total_pulls} of {args.T}")
    print("\n".join(lines), file=out)

    if args.json:
        d = {"algo": args.algo, "T": args.T, "seed": seed, "true_best_arm": best, **trace.to_dict()}
        text = json.dumps(d, indent=2) + "\n"
        if args.json == "-":
            out.write(text)
        else:
            _write_text_atomic(args.json, text)


def _print_points(points: Sequence[ErrorPoint], out):
    rows = [(p.label, p.algo, p.T, p.runs, p.errors, f"{p.p_e:.4f}", f"{p.stderr:.4f}") for p in points]
    print(_table(rows, ["label", "algo", "T", "runs", "errors", "p_e", "stderr"]), file=out)


def _infeasible(spec) -> list[str]:
    problems = []
    for cfg in spec.configs:
        for T in spec.T_grid:
            try:
                check_feasible(spec.instance, cfg, T)
            except ValueError as exc:
                problems.append(str(exc))
    return problems


def _run_sweep(spec, args, out):
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    problems = _infeasible(spec)
    if spec.T_grid and len(problems) == len(spec.T_grid) * len(spec.configs):
        raise ValueError("no grid point is feasible: " + problems[0])
    res = sweep(spec, args.out, workers=args.workers, resume=not args.no_resume)
    _print_points(res.points, out)
    for label, T, msg in res.failures:
        print(f"skipped {label} at T={T}: {msg}", file=sys.stderr)
    if args.out:
        print(f"wrote {args.out}", file=out)


def cmd_sweep(args, out):
    doc = load_config(args.config)
    seed = resolve_seed(args.seed, doc.seed)
    spec = doc.experiment_spec(runs=args.runs, seed=seed)
    if args.T_grid is not None:
        spec = ExperimentSpec(spec.instance, spec.configs, args.T_grid, spec.runs, spec.master_seed, spec.name)
    _run_sweep(spec, args, out)


def cmd_preset(args, out):
    seed = resolve_seed(args.seed, DEFAULT_MASTER_SEED)
    runs = 2000 if args.runs is None else args.runs
    if args.name == "fig1":
        spec = preset_fig1(args.family, runs, args.T_grid, seed, q_c=args.q_c)
    else:
        if args.family != "cvar" or args.q_c != FIG1_CVAR_QC:
            raise UsageError("--family and --q-c apply to fig1 only")
        spec = preset_fig3(runs, args.T_grid, seed)
    _run_sweep(spec, args, out)


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="riskbandit", description="Risk-aware best-arm identification toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("estimate", help="mean/VaR/CVaR/objective of newline-delimited numbers")
    e.add_argument("file", nargs="?", help="input file (default: standard input)")
    e.add_argument("--alpha", type=float, default=0.95)
    e.add_argument("--xi1", type=float, default=1.0)
    e.add_argument("--xi2", type=float, default=1.0)
    e.add_argument("--trunc-mean", type=_truncation, default=TruncationSchedule.none(), metavar="MODE",
                   help="none | fixed:<b> | grow:<q> (drop truncation)")
    e.add_argument("--trunc-cvar", type=_truncation, default=TruncationSchedule.none(), metavar="MODE",
                   help="none | fixed:<b> | grow:<q> (clamp truncation, q < 1/2)")
    e.set_defaults(func=cmd_estimate)

    b = sub.add_parser("bound", help="evaluate a concentration or error bound")
    bsub = b.add_subparsers(dest="kind", required=True, parser_class=_Parser)

    def bparser(name, help_, *flags):
        q = bsub.add_parser(name, help=help_)
        for f in flags:
            f(q)
        q.add_argument("--csv", metavar="PATH", help="also write the table as CSV")
        return q

    req = lambda name, **kw: (lambda q: q.add_argument(name, type=float, required=True, **kw))
    opt = lambda name, default=None, **kw: (lambda q: q.add_argument(name, type=float, default=default, **kw))
    alpha = opt("--alpha", 0.95)
    moment = [req("--p"), req("--B")]
    objective = [opt("--xi1", 0.0), opt("--xi2", 0.0), alpha]
    gaps = lambda q: q.add_argument("--gaps", type=_float_list, required=True,
                                    help="Delta[2..K], comma-separated; a single value is repeated")

    bparser("thm1", "bounded-support CVaR deviation", req("--n"), alpha, req("--b"), req("--eps"))
    bparser("thm2", "truncated CVaR deviation", req("--n"), alpha, req("--b"), req("--delta"),
            opt("--p", help="with --B, also check b against the minimum level"), opt("--B"))
    bparser("min-trunc", "minimum truncation level", req("--delta"), alpha, *moment, opt("--v-abs"))
    bparser("var-mag", "moment bound on |VaR|", alpha, *moment)
    for kind, help_ in (("ue", "uniform exploration error bound"), ("sr", "successive rejects error bound")):
        bparser(kind, help_, req("--T"), lambda q: q.add_argument("--K", type=int, required=True), gaps,
                *objective, opt("--q-m"), opt("--q-c"), *moment)
    bparser("obl-mean", "oblivious truncated-mean deviation", req("--n"), req("--q"), req("--delta"), *moment)
    bparser("obl-cvar", "oblivious truncated-CVaR deviation", req("--n"), req("--q"), req("--delta"), alpha, *moment)
    bparser("tea", "truncated-mean deviation radius", req("--n"), opt("--b"), opt("--q"), req("--delta"), *moment)
    bparser("nonobl", "static truncation levels from known p, B, gap", gaps, *objective, *moment,
            opt("--n", help="also evaluate the deviation bounds at this sample size"))
    b.set_defaults(func=cmd_bound)

    r = sub.add_parser("run", help="one seeded run of generalized successive rejects")
    r.add_argument("--config", required=True)
    r.add_argument("--algo", choices=("ue", "sr"), default="sr")
    r.add_argument("--T", type=int, required=True)
    r.add_argument("--seed", type=_seed)
    r.add_argument("--xi1", type=float)
    r.add_argument("--xi2", type=float)
    r.add_argument("--alpha", type=float)
    r.add_argument("--trunc-mean", type=_truncation, default=TruncationSchedule.none(), metavar="MODE")
    r.add_argument("--trunc-cvar", type=_truncation, default=TruncationSchedule.none(), metavar="MODE")
    r.add_argument("--json", metavar="PATH", help="write the trace as JSON ('-' for stdout)")
    r.set_defaults(func=cmd_run)

    def sweep_flags(q):
        q.add_argument("--runs", type=int)
        q.add_argument("--T-grid", type=_int_list, metavar="T1,T2,...")
        q.add_argument("--seed", type=_seed)
        q.add_argument("--workers", type=int, default=1)
        q.add_argument("--out", metavar="CSV")
        q.add_argument("--no-resume", action="store_true", help="recompute rows already in --out")

    s = sub.add_parser("sweep", help="error-probability sweep for a config file")
    s.add_argument("--config", required=True)
    sweep_flags(s)
    s.set_defaults(func=cmd_sweep)

    pr = sub.add_parser("preset", help="figure presets")
    pr.add_argument("name", choices=("fig1", "fig3"))
    pr.add_argument("--family", choices=("cvar", "mean"), default="cvar")
    pr.add_argument("--q-c", type=float, default=FIG1_CVAR_QC)
    sweep_flags(pr)
    pr.set_defaults(func=cmd_preset)
    return p


def dispatch(argv: Sequence[str] | None = None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "runs", None) is not None and args.runs < 1:
            raise UsageError("--runs must be positive")
        args.func(args, out)
    except SystemExit as exc:
        # --help / --version
        return int(exc.code or 0)
    except (UsageError, ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
