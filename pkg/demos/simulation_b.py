"""ECE-15 urban cycle for the head vehicle, tracking-equilibrium mode.

The head follows the bundled ECE-15 breakpoints (0 to 50 km/h with stops) for
195 s. Deviations are measured against the instantaneous head velocity, which
is also the reference the controllers recenter on at every step.

    python3 demos/simulation_b.py [--dataset 0] [--noise 0.001]
"""
import argparse

from rdeeplcc.harness import LABELS, ScenarioConfig, metric_rm, metric_rs, run_scenario

ap = argparse.ArgumentParser()
ap.add_argument("--dataset", type=int, default=0)
ap.add_argument("--noise", type=float, default=0.001, help="process noise and tube noise bound")
args = ap.parse_args()

cfg = ScenarioConfig(scenario="drive_cycle", equilibrium="tracking", T_s=195.0,
                     noise_bound=args.noise, w_bound=args.noise)
runs = run_scenario(cfg, dataset=args.dataset)
base = runs["hdv"]
for m, log in runs.items():
    if not log.valid:
        print(f"{LABELS[m]:<10} {log.status}: {log.message}")
        continue
    rm, rs = metric_rm(log), metric_rs(log)
    line = f"{LABELS[m]:<10} R_m {rm:.3f}  R_s {rs:.3f}"
    if m != "hdv" and base.valid:
        line += f"  ({100 * (rm / metric_rm(base) - 1):+.1f}% / {100 * (rs / metric_rs(base) - 1):+.1f}%)"
    print(line)
