# Jerk, path length, and comfort: quantifying how smooth a trial was.

import numpy as np

from sessionforge import Scenario, gen_session, sync_session
from sessionforge.metrics import (
    comfort_check,
    compute_trial_metrics,
    jerk_series,
    path_length,
    task_aggregate,
)
from sessionforge.synth import ProfileSpec, gen_min_jerk_trajectory

# jerk_series applies a forward third-difference stencil, which is exact on
# cubics: p = t^3 has constant jerk 6 m/s^3 at any sample spacing.
t = np.arange(0, 2, 1 / 12)
cubic = np.column_stack([t**3, np.zeros_like(t), np.zeros_like(t)])
print("cubic jerk:", np.unique(np.round(jerk_series(cubic, 1 / 12), 9)))

# A minimum-jerk reach carries its own analytic answer to compare against.
t, positions, profile = gen_min_jerk_trajectory((0, 0, 0), (1, 0, 0), 2.0, 12.0)
measured = float(np.mean(jerk_series(positions, 1 / 12)))
h = 1 / 12
analytic = profile.mean_jerk(h, (len(t) - 2) * h)  # span the stencil covers
print(f"min-jerk mean jerk: measured {measured:.3f}, analytic {analytic:.3f} m/s^3")
print("path length:", path_length(positions), "m (displacement, monotone profile)")

# Full trial: a door-opening scenario where the wheelchair also moves.
scenario = Scenario(
    seed=3,
    duration=6.0,
    ee_profile=ProfileSpec(kind="min_jerk", p0=(0, 0, 0), pf=(0.5, 0.2, 0.3)),
    wheelchair_profile=ProfileSpec(kind="min_jerk", p0=(0, 0), pf=(1.2, 0.4)),
)
session, truth = gen_session(scenario)
tm = compute_trial_metrics(sync_session(session))
print(f"trial {tm.trial_id}: duration {tm.duration:.2f} s")
print(f"  EE   path {tm.ee_path_length:.3f} m (true {truth.ee_path_length:.3f}),"
      f" mean jerk {tm.ee_mean_jerk:.3f} m/s^3")
print(f"  chair mean jerk {tm.wheelchair_mean_jerk:.3f} m/s^3"
      f" (true path {truth.wheelchair_path_length:.3f} m)")

# Task-level numbers aggregate trials as mean +/- sample SD.
agg = task_aggregate([1.9, 2.3, 2.1])
print(f"task aggregate: {agg.mean:.2f} +/- {agg.sd:.2f} (n={agg.n_trial})")

# Wheelchair comfort is banded against 0.3-0.9 m/s^3 (inclusive bounds).
for jerk in (0.1, 0.3, 0.5, 0.95):
    print(f"  mean jerk {jerk:.2f} m/s^3 -> {comfort_check(jerk).wheelchair_band} the band")
