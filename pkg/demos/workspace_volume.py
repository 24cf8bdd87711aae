"""Fingertip workspace volume and how the estimate depends on sampling.

Run: python3 demos/workspace_volume.py
"""

from tendonhand import load_config
from tendonhand.workspace import estimate_volume, finger_volume, sample_workspace

geom = load_config().finger

# a plain 50-per-joint grid leaves holes near full extension, where one grid
# step moves the fingertip by nearly 3 mm
sparse = sample_workspace(geom, resolution=50)
print(f"plain 50^3 grid, 1 mm voxels:    {estimate_volume(sparse, voxel=1.0):7.2f} cm^3")

# refining each axis until a step moves the tip by at most one voxel
for res in (50, 60):
    vol, cloud = finger_volume(geom, resolution=res, voxel=1.0)
    print(f"refined {res}^3 grid, 1 mm voxels: {vol:7.2f} cm^3 from {len(cloud)} points")

# occupancy counts every voxel the surface touches, so coarser voxels inflate more
for voxel in (0.5, 1.0, 2.0):
    vol, _ = finger_volume(geom, resolution=50, voxel=voxel)
    print(f"voxel {voxel:3.1f} mm: {vol:7.2f} cm^3")
