"""
Watching outputs settle as depth grows
======================================

Runs the depth experiment for two families: one whose masks approach the
identity fast enough, and the constant mask (1, 1) whose outputs keep growing.
"""

# %%
import math
import tempfile
from pathlib import Path

import numpy as np

from convlim import ExperimentConfig, PaddedVector, family_network, forward, lq_distance_estimate, run_depth_experiment

out = Path(tempfile.mkdtemp()) / "residuals.csv"
cfg = ExperimentConfig(
    d=1,
    family={"name": "unit_center_power", "c": 1, "alpha": 2},
    checkpoints=[25, 50, 100, 200],
    output=str(out),
)
run_depth_experiment(cfg)
print(out.read_text())

# %%
net = family_network(cfg.family, 1)
for q in (1, 2, math.inf):
    print(f"L^{q} estimate between depths 50 and 100:", lq_distance_estimate(net, 50, 100, q, math.inf, 10_000, 0))

# %%
flat = family_network({"name": "constant", "mask": [1, 1]}, 1)
print([PaddedVector(forward(flat, np.ones(1), n)).norm() for n in range(1, 13)])
