"""Validate and execute a few grasp presets in closed loop.

Run: python3 demos/grasp_run.py
"""

import numpy as np

from tendonhand import HandSimulator, load_config
from tendonhand.grasps import execute_pose, load_poses, validate_pose

cfg = load_config()
poses = load_poses()
print(f"{len(poses)} presets loaded")

for name in ("large_diameter", "tip_pinch", "lateral"):
    pose = poses[name]
    check = validate_pose(pose, cfg.hand)
    rep = execute_pose(pose, HandSimulator(cfg, seed=0), timeout=1.0)
    print(f"\n{name} ({pose.category}): within limits {check.feasible}, "
          f"settled in {rep.settling_time:.2f} s, worst final error {rep.max_error_deg:.4f} deg")
    print("joint targets (deg), rows thumb..little, columns MCP1 MCP2 PIP:")
    print(np.round(pose.degrees, 1))
