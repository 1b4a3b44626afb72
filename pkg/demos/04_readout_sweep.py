"""Trend benchmark: error versus readout ratio.

Sweeps the readout ratio gamma with both the global-shutter and the
constant-velocity model on discretely generated (non-linearized) scenes.
The global-shutter error grows with gamma while the rolling-shutter-aware
model stays flat.  Uses fewer trials than the acceptance suite so it runs
in a few seconds.
"""

from rsdiffsfm import ExperimentConfig, run_sweep

cfg = ExperimentConfig(
    models=["gs", "cv"],
    gammas=[0.1, 0.4, 0.7, 1.0],
    trials=5,
    n_points=100,
    ransac_iters=50,
    use_refine=True,
    seed=7,
)
rows = run_sweep(cfg)

print(f"{'gamma':>6} {'model':>6} {'v err (deg)':>12} {'w err (deg)':>12} {'trials':>7}")
for gamma, _, _, _, model, te, re, n in rows:
    print(f"{gamma:>6.1f} {model:>6} {te:>12.4f} {re:>12.4f} {n:>7}")

te = {(m, g): t for g, _, _, _, m, t, _, _ in rows}
print(f"\ngs error growth x{te[('gs', 1.0)] / te[('gs', 0.1)]:.2f} "
      f"from gamma 0.1 to 1.0; cv x{te[('cv', 1.0)] / te[('cv', 0.1)]:.2f}")
