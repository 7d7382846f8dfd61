"""How the data-driven model set and the error tube scale with the noise bound.

For one archive, estimate the set of models consistent with the data, design
the gain and propagate the error tube for several noise bounds. The tightened
input box is 5 - (tube input radius); once that goes negative the tube
controller has no feasible plan.

    python3 demos/tube_growth.py
"""
import numpy as np

from rdeeplcc.gainsynth import GainSynthesisError, synthesize_gain
from rdeeplcc.harness import ScenarioConfig, collect_with_retries, dataset_streams
from rdeeplcc.platoon import build_model
from rdeeplcc.sysid import default_noise, error_reach_tube, estimate_system_set
from rdeeplcc.zonoset import matzono_interval_hull

Q = np.diag(np.tile([0.5, 1.0], 3))
for w in (0.001, 0.005, 0.01, 0.05):
    cfg = ScenarioConfig(noise_bound=w, w_bound=w)
    rng_data, rng_gain, _ = dataset_streams(0)
    archive = collect_with_retries(cfg, build_model(), rng_data)
    noise = default_noise(3, w, 0.5)
    sys = estimate_system_set(archive, noise)
    lo, hi = matzono_interval_hull(sys.m_ab)
    try:
        # a smaller validation budget keeps the demo quick
        gain = synthesize_gain(sys.m_ab, (Q, [[0.1]]), N_k=20_000, rng=rng_gain)
    except GainSynthesisError as exc:
        print(f"w={w}: {exc}")
        continue
    tube = error_reach_tube(sys, gain.K, noise, None, 5)
    print(f"w={w:<6} widest model entry +-{(hi - lo).max() / 2:.3f}  "
          f"tube input radius {np.array2string(tube.input_radii(), precision=2)}")
