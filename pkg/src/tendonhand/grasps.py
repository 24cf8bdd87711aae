"""Grasp-taxonomy pose library, feasibility checks and closed-loop execution."""

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import InvalidArgumentError, PoseLookupError
from .kinematics import FINGER_NAMES, JOINT_NAMES

CATEGORIES = ("power", "precision", "intermediate")


@dataclass(frozen=True)
class GraspPose:
    name: str
    joints: np.ndarray   # (15,) rad, finger-major: thumb MCP1, MCP2, PIP, index MCP1, ...
    category: str

    def __post_init__(self):
        j = np.asarray(self.joints, dtype=float).reshape(-1)
        if j.shape != (15,):
            raise InvalidArgumentError(f"pose {self.name!r} needs 15 joint values, got {j.size}")
        if self.category not in CATEGORIES:
            raise InvalidArgumentError(f"pose {self.name!r}: unknown category {self.category!r}")
        object.__setattr__(self, "joints", j)

    @property
    def degrees(self):
        return np.degrees(self.joints).reshape(5, 3)


def joint_label(index):
    return f"{FINGER_NAMES[index // 3]}.{JOINT_NAMES[index % 3]}"


def load_poses(path=None):
    """Pose library as an ordered ``{name: GraspPose}`` dict."""
    if path is None:
        text = resources.files("tendonhand").joinpath("data/grasps.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    data = json.loads(text)
    poses = {}
    for p in data["poses"]:
        if p["name"] in poses:
            raise InvalidArgumentError(f"duplicate pose name {p['name']!r}")
        poses[p["name"]] = GraspPose(p["name"], np.radians(p["joints_deg"]), p["category"])
    return poses


def get_pose(name, poses=None):
    poses = load_poses() if poses is None else poses
    try:
        return poses[name]
    except KeyError:
        raise PoseLookupError(f"unknown grasp pose {name!r}") from None


@dataclass
class FeasibilityReport:
    name: str
    feasible: bool
    violations: list          # [(joint label, value deg, (lo, hi) deg)]
    fingertips: np.ndarray    # (5, 3) palm frame, mm

    def as_dict(self):
        return {
            "name": self.name,
            "feasible": self.feasible,
            "violations": [{"joint": j, "value_deg": v, "limits_deg": list(lim)}
                           for j, v, lim in self.violations],
            "fingertips_mm": np.round(self.fingertips, 6).tolist(),
        }


def validate_pose(pose, hand, tol=1e-9):
    """Joint-limit check plus fingertip positions for a pose."""
    joints = pose.joints
    violations = []
    for i, q in enumerate(joints):
        lo, hi = hand.fingers[i // 3].limits[i % 3]
        if not (lo - tol <= q <= hi + tol):
            violations.append((joint_label(i), float(np.degrees(q)),
                               (float(np.degrees(lo)), float(np.degrees(hi)))))
    tips = hand.fingertips(np.clip(joints, -np.pi, np.pi))
    return FeasibilityReport(pose.name, not violations, violations, tips)


@dataclass
class ExecutionReport:
    name: str
    reached: bool
    settling_time: float          # s; nan when the pose was not reached
    final_error_deg: np.ndarray   # (15,) absolute joint error at the end
    faults: list = field(default_factory=list)
    ticks: int = 0

    @property
    def max_error_deg(self):
        return float(np.max(self.final_error_deg))

    def as_dict(self):
        return {
            "name": self.name,
            "reached": self.reached,
            "settling_time_s": None if np.isnan(self.settling_time) else round(self.settling_time, 6),
            "max_error_deg": round(self.max_error_deg, 9),
            "final_error_deg": np.round(self.final_error_deg, 9).tolist(),
            "faults": self.faults,
            "ticks": self.ticks,
        }


def _active_faults(faults):
    out = []
    for k in ("protective_stop", "stale_sensor", "finger_fault"):
        if any(faults.get(k, [])):
            out.append(k)
    return out


def execute_pose(pose, sim, timeout=2.0, tol_deg=1.0, on_tick=None):
    """Drive ``sim`` to ``pose`` and report settling.

    The simulation runs for the full ``timeout``; the settling time is the
    end of the last outer tick at which any joint was further than
    ``tol_deg`` from its target. ``on_tick(k, sim)`` is called before each
    tick, which lets callers inject faults mid-run.
    """
    n_ticks = int(round(timeout / sim.timing.outer_dt))
    target = pose.joints
    tol = np.radians(tol_deg)
    last_out = -1
    faults = set()
    err = np.abs(sim.state.theta.reshape(-1) - target)
    if np.any(err > tol):
        last_out = 0
    for k in range(n_ticks):
        if on_tick is not None:
            on_tick(k, sim)
        s = sim.tick(target)
        faults.update(_active_faults(s.faults))
        err = np.abs(s.theta.reshape(-1) - target)
        if np.any(err > tol):
            last_out = k + 1
    reached = last_out < n_ticks and not np.any(err > tol) and "protective_stop" not in faults
    settle = last_out * sim.timing.outer_dt if last_out > 0 else 0.0
    return ExecutionReport(
        name=pose.name,
        reached=bool(reached),
        settling_time=settle if reached else float("nan"),
        final_error_deg=np.degrees(err),
        faults=sorted(faults),
        ticks=n_ticks,
    )
