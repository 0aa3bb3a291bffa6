"""
Shrinking the kernel: the porous-medium limit
=============================================

As sigma -> 0 the pressure tends to the density itself and the front
speed should approach 1/sqrt(2).  Each run refines the grid so that a cell
stays well below the kernel width.
"""

import math

from kswave import ExperimentConfig, propagation_speed, run
from kswave.cli import sweep_entry_config

base = ExperimentConfig()
for s2 in (0.5, 0.1, 0.01):
    cfg = sweep_entry_config(base, "sigma2", s2)
    _, trace = run(cfg)
    s = propagation_speed(trace, 0.0, 15.0, 40.0)
    print(f"sigma^2 = {s2:<5g} M = {cfg.grid.M:<5d} speed {s:.4f}")
print(f"limit 1/sqrt(2) = {1 / math.sqrt(2):.4f}")
