"""Evaluate the error-probability and deviation bounds at a few settings."""

from riskbandit.bounds import (
    MomentAssumption,
    format_magnitude,
    nonoblivious_settings,
    oblivious_cvar_dev_bound,
    sr_error_bound,
    thm1_bounded_cvar_bound,
    ue_error_bound,
)
from riskbandit.risk import RiskObjective

cvar = RiskObjective(0.0, 1.0, 0.95)
a = MomentAssumption(2.0, 2.0)

print("bounded-support CVaR concentration, n=100, alpha=.95, U=1")
for eps in (0.25, 0.5, 1.0):
    print(f"  eps={eps}: {thm1_bounded_cvar_bound(100, 0.95, 1, eps):.4g}")

for name, fn in (("uniform exploration", ue_error_bound), ("successive rejects", sr_error_bound)):
    bound = fn(1e4, 10, [0.25] * 9, cvar, None, 0.2, a)
    print(f"{name}: value {bound.value:.3g}, valid={bound.valid}, budget needed {format_magnitude(bound.log10_threshold)}")

dev = oblivious_cvar_dev_bound(1e4, 0.2, 0.25, 0.95, a)
print(f"oblivious CVaR deviation: {dev.value:.3g}, needs n >= {format_magnitude(dev.log10_n_star)}")
b_m, b_c = nonoblivious_settings(cvar, [0.25], a)
print(f"gap-aware truncation level for CVaR: {b_c:g}")
