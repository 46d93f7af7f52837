"""Short error-probability sweeps for both presets, written to ./demo-out."""

from pathlib import Path

from riskbandit.experiments import preset_fig1, preset_fig3, sweep

out = Path("demo-out")
out.mkdir(exist_ok=True)
for name, spec in (
    ("fig1-cvar", preset_fig1("cvar", runs=300, T_grid=(500, 2000, 8000))),
    ("fig3", preset_fig3(runs=300, T_grid=(500, 2000, 8000))),
):
    res = sweep(spec, out / f"{name}.csv", resume=False)
    for cfg in spec.configs:
        curve = ", ".join(f"T={p.T}: {p.p_e:.3f}" for p in res.curve(cfg.label))
        print(f"{cfg.label:<30} {curve}")
