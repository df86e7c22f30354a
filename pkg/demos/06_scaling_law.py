#!/usr/bin/env python3
"""Error decay of the latent least-squares decoder as measurements grow.

Runs a reduced version of the main sweep (fewer trials than the acceptance
suite, same protocol: toeplitz 0.3 rows, sigma 0.1, 3% sign flips, 10
restarts x 1000 steps) and fits the log-log slope of the median error, which
should sit near -1/2.
"""

import os

import numpy as np

from obgcs import ExperimentGrid, fit_scaling, run_grid

grid = ExperimentGrid(
    generator={"k": 5, "n": 100, "hidden_dims": [64], "seed": 0},
    m_values=[250, 500, 1000, 2000, 4000],
    sigma=0.1, q=0.97, nu=0.3,
    trials_per_cell=6,
    decoders=("ls",),
    base_seed=123,
    workers=os.cpu_count(),
)
print("running", len(grid.m_values) * grid.trials_per_cell, "cells ...")
results = run_grid(grid)

print(f"\n{'m':>6} {'median |x-cx*|':>16}")
for m in grid.m_values:
    med = np.median([r.l2_err for r in results if r.m == m])
    print(f"{m:>6} {med:>16.4f}")

fit = fit_scaling(results, "ls")
print(f"\nlog-log slope {fit['slope']:.3f} (inverse-sqrt law predicts -0.5), "
      f"r^2 = {fit['r2']:.3f}")
