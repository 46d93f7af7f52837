"""Trace one run of successive rejects on the ten-arm heavy-tailed instance."""

from riskbandit.bandit import run_gsr, sr_schedule
from riskbandit.distributions import Seed
from riskbandit.experiments import preset_fig1
from riskbandit.risk import TruncationSchedule

spec = preset_fig1("cvar")
inst = spec.instance
trace = run_gsr(inst, sr_schedule(inst.K, 5000), TruncationSchedule.none(), TruncationSchedule.grow(0.4), Seed(1))
for k, ph in enumerate(trace.phases, 1):
    est = " ".join(f"{i}:{v:.2f}" for i, v in zip(ph.survivors, ph.estimates))
    print(f"phase {k}: n={ph.counts[0]}  {est}  reject {ph.rejected}")
print(f"selected {trace.selected}, optimal {inst.optimal_arm}, pulls {trace.total_pulls}")
