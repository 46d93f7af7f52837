import csv
import math

import pytest

from riskbandit.bandit import BanditInstance
from riskbandit.distributions import Constant, Exponential, Pareto, Uniform
from riskbandit.experiments import (
    CSV_HEADER,
    FIG_GRID,
    AlgorithmConfig,
    ErrorPoint,
    ExperimentSpec,
    estimate_error_probability,
    plot_data_path,
    preset_fig1,
    preset_fig3,
    read_csv,
    run_seed,
    sweep,
)
from riskbandit.risk import RiskObjective, TruncationSchedule

MEAN = RiskObjective(1.0, 0.0)


def small_spec(grid=(20, 40, 80), runs=50, seed=3):
    inst = BanditInstance([Uniform(0, 1), Uniform(0.2, 1.2), Uniform(0.3, 1.1)], MEAN)
    configs = (AlgorithmConfig("sr-plain", "sr"), AlgorithmConfig("ue-trunc", "ue", TruncationSchedule.grow(0.5)))
    return ExperimentSpec(inst, configs, grid, runs, seed, "small")


class TestErrorPoint:
    def test_constant_arms(self):
        inst = BanditInstance([Constant(0.9), Constant(1.0)], MEAN)
        for T in (4, 10, 1000):
            pt = estimate_error_probability(inst, AlgorithmConfig("c"), T, 100, 1)
            assert pt.errors == 0 and pt.p_e == 0.0 and pt.stderr == 0.0

    def test_row_format(self):
        pt = ErrorPoint("a", "sr", 500, 3, 1, 7)
        assert pt.row() == ["a", "sr", "500", "3", "1", "0.3333333333", "0.272165527", "7"]

    def test_deterministic(self):
        spec = small_spec()
        cfg = spec.configs[0]
        a = estimate_error_probability(spec.instance, cfg, 40, 200, 11)
        b = estimate_error_probability(spec.instance, cfg, 40, 200, 11)
        assert a == b
        c = estimate_error_probability(spec.instance, cfg, 40, 200, 12)
        assert c.master_seed == 12

    def test_workers_match_serial(self):
        spec = small_spec()
        cfg = spec.configs[1]
        serial = estimate_error_probability(spec.instance, cfg, 40, 300, 5)
        parallel = estimate_error_probability(spec.instance, cfg, 40, 300, 5, workers=2)
        assert serial == parallel

    def test_run_seed_varies(self):
        assert run_seed(1, "a", 10, 0) != run_seed(1, "a", 10, 1)
        assert run_seed(1, "a", 10, 0) != run_seed(1, "b", 10, 0)
        assert run_seed(1, "a", 10, 0) == run_seed(1, "a", 10, 0)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            AlgorithmConfig("x", "gsr")
        with pytest.raises(ValueError):
            AlgorithmConfig("a,b")
        with pytest.raises(ValueError):
            AlgorithmConfig("x", cvar_trunc=TruncationSchedule.grow(0.6))

    def test_spec_validation(self):
        inst = small_spec().instance
        with pytest.raises(ValueError):
            ExperimentSpec(inst, (AlgorithmConfig("a"), AlgorithmConfig("a", "ue")), (10,))
        with pytest.raises(ValueError):
            ExperimentSpec(inst, (AlgorithmConfig("a"),), (10, 10))
        with pytest.raises(ValueError):
            ExperimentSpec(inst, (AlgorithmConfig("a"),), (10,), runs=0)


class TestSweep:
    def test_empty_grid(self, tmp_path):
        out = tmp_path / "empty.csv"
        res = sweep(small_spec(grid=()), out)
        assert res.points == [] and res.failures == []
        assert out.read_bytes() == (",".join(CSV_HEADER) + "\n").encode()

    def test_cardinality_and_companions(self, tmp_path):
        out = tmp_path / "res.csv"
        res = sweep(small_spec(), out)
        assert len(res.points) == 6
        rows = list(csv.reader(out.open()))
        assert tuple(rows[0]) == CSV_HEADER and len(rows) == 7
        assert b"\r" not in out.read_bytes()
        for label in ("sr-plain", "ue-trunc"):
            plot = list(csv.reader(plot_data_path(out, label).open()))
            assert plot[0] == ["T", "p_e", "stderr"]
            assert [int(r[0]) for r in plot[1:]] == [20, 40, 80]
        assert [p.T for p in res.curve("ue-trunc")] == [20, 40, 80]

    def test_stderr_column(self, tmp_path):
        out = tmp_path / "res.csv"
        sweep(small_spec(runs=77), out)
        for row in list(csv.DictReader(out.open())):
            errors, runs = int(row["errors"]), int(row["runs"])
            p = errors / runs
            se = math.sqrt(p * (1 - p) / runs)
            # columns carry 10 significant digits; compare after the same rounding
            assert abs(float(row["p_e"]) - float(format(p, ".10g"))) <= 1e-12
            assert abs(float(row["stderr"]) - float(format(se, ".10g"))) <= 1e-12
            assert float(row["stderr"]) == pytest.approx(se, rel=1e-9)

    def test_reproducible_bytes(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        sweep(small_spec(), a)
        sweep(small_spec(), b, workers=2)
        assert a.read_bytes() == b.read_bytes()

    def test_resume(self, tmp_path):
        out = tmp_path / "res.csv"
        spec = small_spec()
        sweep(ExperimentSpec(spec.instance, spec.configs, (20, 40), spec.runs, spec.master_seed), out)
        first = read_csv(out)
        computed = []
        res = sweep(spec, out, progress=computed.append)
        assert [(p.label, p.T) for p in computed] == [("sr-plain", 80), ("ue-trunc", 80)]
        assert all(p in res.points for p in first)
        fresh = tmp_path / "fresh.csv"
        sweep(spec, fresh)
        assert out.read_bytes() == fresh.read_bytes()
        # a different run count invalidates the stored rows
        computed.clear()
        sweep(ExperimentSpec(spec.instance, spec.configs, spec.T_grid, 60, spec.master_seed), out, progress=computed.append)
        assert len(computed) == 6

    def test_partial_failure(self, tmp_path):
        inst = BanditInstance([Exponential(1.0), Exponential(2.0)], RiskObjective(0, 1, 0.95))
        spec = ExperimentSpec(inst, (AlgorithmConfig("ue", "ue"),), (20, 39, 100), 20, 1)
        res = sweep(spec, tmp_path / "x.csv")
        assert [T for _, T, _ in res.failures] == [20, 39]
        assert [p.T for p in res.points] == [100]

    def test_read_round_trip(self, tmp_path):
        out = tmp_path / "res.csv"
        res = sweep(small_spec(), out)
        assert read_csv(out) == res.points


class TestPresets:
    def test_fig1(self):
        spec = preset_fig1()
        arms = spec.instance.arms
        assert len(arms) == 10
        assert arms[0].shape == 3.0 and arms[0].scale == pytest.approx(0.6)
        assert all(a.scale == pytest.approx(2 / 3) for a in arms[1:5])
        assert all(a == Exponential(1.0) for a in arms[5:])
        assert spec.instance.optimal_arm == 0
        assert spec.instance.objective.alpha == 0.95
        non = spec.configs[1]
        assert non.cvar_trunc.kind == "fixed" and non.cvar_trunc.value == pytest.approx(640)
        assert spec.T_grid == FIG_GRID

    def test_fig1_mean(self):
        spec = preset_fig1("mean")
        assert spec.instance.optimal_arm == 0
        obl, non = spec.configs
        assert obl.mean_trunc == TruncationSchedule.grow(0.75)
        assert non.mean_trunc.value == pytest.approx(240)
        with pytest.raises(ValueError):
            preset_fig1("var")

    def test_fig3(self):
        spec = preset_fig3()
        a1, a2 = spec.instance.arms
        assert a1.scale == pytest.approx(0.9 / 1.9) and a1.scale == pytest.approx(0.47368, abs=1e-5)
        assert a2 == Exponential(0.9)
        assert spec.instance.optimal_arm == 1
        assert math.isinf(a1.moment(2.0)) and math.isfinite(a1.moment(1.89))
        assert [c.mean_trunc.value for c in spec.configs] == [0.4, 0.5, 0.7, pytest.approx(57600)]

    def test_grid(self):
        assert FIG_GRID[0] == 500 and FIG_GRID[-1] == 50000 and len(FIG_GRID) == 10


def separated(lo_pt, hi_pt, k=2.0):
    return hi_pt.p_e - lo_pt.p_e >= k * math.hypot(lo_pt.stderr, hi_pt.stderr)


class TestStatisticalTrends:
    def test_fig1_mean_oblivious_improves(self):
        spec = preset_fig1("mean")
        cfg = spec.configs[0]
        small = estimate_error_probability(spec.instance, cfg, 500, 2000, spec.master_seed)
        large = estimate_error_probability(spec.instance, cfg, 2000, 2000, spec.master_seed)
        assert large.p_e < small.p_e
        assert separated(large, small)

    @pytest.mark.parametrize("family", ["mean", "cvar"])
    def test_fig1_monotone_trend(self, family):
        spec = preset_fig1(family, runs=2000, T_grid=(500, 5000))
        res = sweep(spec)
        for cfg in spec.configs:
            assert separated(res.get(cfg.label, 5000), res.get(cfg.label, 500))

    def test_fig3_monotone_trend(self):
        spec = preset_fig3(runs=2000, T_grid=(500, 5000))
        res = sweep(spec)
        for cfg in spec.configs:
            assert separated(res.get(cfg.label, 5000), res.get(cfg.label, 500))
