"""Fingertip workspace sampling and voxel-occupancy volume."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .errors import InvalidArgumentError
from .kinematics import fingertip_positions

log = logging.getLogger(__name__)


@dataclass
class WorkspaceCloud:
    points: np.ndarray                 # (N, 3) mm, finger frame unless exported
    finger: np.ndarray                 # (N,) finger index per point
    voxel_size: float = 1.0
    volume_cm3: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)


def _lever_arms(geom):
    """Upper bound on fingertip distance from each joint axis (mm)."""
    arms = [geom.reach, geom.L2 + geom.L3, geom.L3]
    if geom.dip_active:
        arms.append(geom.dip_length)
    return arms


def joint_grid(geom, resolution, max_spacing=None):
    """Per-joint sample values over the joint-limit box.

    Each axis gets ``resolution`` evenly spaced values. With ``max_spacing``
    (mm) an axis is subdivided further, by an integer factor, until one
    grid step moves the fingertip by at most ``max_spacing``; the original
    grid values stay in the refined grid.
    """
    if resolution < 2:
        raise InvalidArgumentError("resolution must be >= 2")
    axes = []
    for (lo, hi), arm in zip(geom.limits, _lever_arms(geom)):
        n = resolution
        if max_spacing is not None and hi > lo:
            step = arm * (hi - lo) / (resolution - 1)
            n = (resolution - 1) * max(1, math.ceil(step / max_spacing)) + 1
        axes.append(np.linspace(lo, hi, n))
    return axes


def sample_workspace(geom, resolution=50, max_spacing=None, method="grid", seed=0, finger=0):
    """Fingertip positions over the joint-limit box.

    ``method="grid"`` evaluates the full tensor grid from :func:`joint_grid`;
    ``method="halton"`` draws ``resolution**dof`` scrambled Halton points
    seeded by ``seed``.
    """
    lim = geom.limits
    if method == "grid":
        axes = joint_grid(geom, resolution, max_spacing)
        chunks = []
        inner = np.stack(np.meshgrid(*axes[1:], indexing="ij"), axis=-1).reshape(-1, geom.dof - 1)
        for t1 in axes[0]:
            theta = np.column_stack([np.full(len(inner), t1), inner])
            chunks.append(fingertip_positions(geom, theta))
        pts = np.concatenate(chunks)
    elif method == "halton":
        if resolution < 2:
            raise InvalidArgumentError("resolution must be >= 2")
        u = qmc.Halton(d=geom.dof, scramble=True, seed=seed).random(resolution ** geom.dof)
        pts = fingertip_positions(geom, lim[:, 0] + u * (lim[:, 1] - lim[:, 0]))
    else:
        raise InvalidArgumentError(f"unknown sampling method {method!r}")
    return WorkspaceCloud(points=pts, finger=np.full(len(pts), finger, dtype=np.int64))


def voxel_keys(points, voxel):
    """Unique integer voxel indices ``floor(p / voxel)`` as an ``(M, 3)`` array."""
    idx = np.floor(np.asarray(points) / voxel).astype(np.int64)
    return np.unique(idx, axis=0)


def estimate_volume(cloud, voxel=1.0):
    """Occupied-voxel volume in cm^3 (occupied voxel count times voxel volume)."""
    if voxel <= 0:
        raise InvalidArgumentError("voxel must be positive")
    pts = cloud.points if isinstance(cloud, WorkspaceCloud) else np.asarray(cloud)
    if len(pts) == 0:
        log.warning("empty workspace cloud; volume is zero")
        return 0.0
    # pack voxel indices into one int64 key per point, which is much faster to
    # deduplicate than rows
    idx = np.floor(pts / voxel).astype(np.int64)
    idx -= idx.min(axis=0)
    span = idx.max(axis=0) + 1
    keys = (idx[:, 0] * span[1] + idx[:, 1]) * span[2] + idx[:, 2]
    n = len(np.unique(keys))
    return n * voxel ** 3 / 1000.0


def finger_volume(geom, resolution=50, voxel=1.0, max_spacing=None):
    """Workspace volume (cm^3) with the grid refined to ``max_spacing``.

    ``max_spacing`` defaults to ``voxel`` so that neighbouring fingertip
    samples are never further apart than one voxel edge.
    """
    spacing = voxel if max_spacing is None else max_spacing
    cloud = sample_workspace(geom, resolution, max_spacing=spacing)
    return estimate_volume(cloud, voxel), cloud


def hand_workspace(hand, resolution=50, voxel=1.0, max_spacing=None):
    """Per-finger volumes and a palm-frame cloud of all five fingers.

    Volumes are computed in each finger's own frame; the mounting
    transforms are applied only to the exported points.
    """
    volumes, clouds, cache = {}, [], {}
    for i, (geom, mount) in enumerate(zip(hand.fingers, hand.mounts)):
        if geom not in cache:
            cache[geom] = finger_volume(geom, resolution, voxel, max_spacing)
        vol, cloud = cache[geom]
        volumes[hand.names[i]] = vol
        clouds.append((mount[:3, :3] @ cloud.points.T).T + mount[:3, 3])
    points = np.concatenate(clouds)
    finger = np.repeat(np.arange(len(clouds)), [len(c) for c in clouds])
    return WorkspaceCloud(points=points, finger=finger, voxel_size=voxel, volume_cm3=volumes)


def write_csv(cloud, path):
    with open(path, "w") as fh:
        fh.write("x,y,z,finger_id\n")
        for (x, y, z), f in zip(cloud.points.tolist(), cloud.finger.tolist()):
            fh.write(f"{x:.6f},{y:.6f},{z:.6f},{f}\n")


def write_ply(cloud, path):
    """ASCII PLY with a per-vertex ``finger`` property."""
    with open(path, "w") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write(f"element vertex {len(cloud.points)}\n")
        fh.write("property float x\nproperty float y\nproperty float z\nproperty uchar finger\n")
        fh.write("end_header\n")
        for (x, y, z), f in zip(cloud.points.tolist(), cloud.finger.tolist()):
            fh.write(f"{x:.6f} {y:.6f} {z:.6f} {f}\n")
