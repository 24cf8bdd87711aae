"""Finger and hand kinematics.

Frame convention (finger base frame at the MCP1 joint):

* x points along the straight finger,
* z is the MCP1 (ab/adduction) axis,
* the MCP2 and PIP flexion axes are parallel to y; positive flexion curls
  the fingertip towards +z.

With the DIP joint locked the fingertip obeys three closure equations::

    X*s1 - Y*c1 = 0
    (L2 + L3*c3)*s2 + L3*s3*c2 - Z = 0
    (rho - L1)**2 + Z**2 - L2**2 - L3**2 - 2*L2*L3*c3 = 0

where ``rho = X*c1 + Y*s1`` is the signed distance from the MCP1 axis in
the finger plane. For fingertips on the palm side of that axis
(``rho >= 0``) it equals ``hypot(X, Y)``.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InvalidArgumentError, ReachabilityError, SingularTargetError

JOINT_NAMES = ("MCP1", "MCP2", "PIP")
FINGER_NAMES = ("thumb", "index", "middle", "ring", "little")

_DEG = np.pi / 180.0


def skew(w):
    return np.array([[0.0, -w[2], w[1]],
                     [w[2], 0.0, -w[0]],
                     [-w[1], w[0], 0.0]])


def revolute_screw(axis, point):
    """Unit screw ``(w, v)`` of a revolute joint about ``axis`` through ``point``."""
    w = np.asarray(axis, dtype=float)
    w = w / np.linalg.norm(w)
    v = -np.cross(w, np.asarray(point, dtype=float))
    return np.concatenate([w, v])


def screw_exp(screw, theta):
    """Matrix exponential ``exp([S] theta)`` of a unit revolute screw.

    ``theta`` may be a scalar or a 1-d array; the result is ``(4, 4)`` or
    ``(N, 4, 4)`` accordingly.
    """
    w, v = screw[:3], screw[3:]
    th = np.asarray(theta, dtype=float)
    K = skew(w)
    K2 = K @ K
    s = np.sin(th)[..., None, None]
    c = np.cos(th)[..., None, None]
    R = np.eye(3) + s * K + (1.0 - c) * K2
    G = th[..., None, None] * np.eye(3) + (1.0 - c) * K + (th[..., None, None] - s) * K2
    T = np.zeros(th.shape + (4, 4))
    T[..., :3, :3] = R
    T[..., :3, 3] = G @ v
    T[..., 3, 3] = 1.0
    return T


@dataclass(frozen=True)
class FingerGeometry:
    """Link lengths (mm) and joint limits (rad) of one finger.

    ``L3`` is the effective distal length with the DIP joint locked at 0.
    ``dip_length`` is the part of ``L3`` beyond the DIP joint; it only
    matters when ``dip_active`` is set, in which case a fourth revolute joint
    is appended to the chain.
    """

    L1: float = 16.0
    L2: float = 32.0
    L3: float = 44.0
    dip_length: float | None = 20.0
    joint_limits: tuple = ((-30 * _DEG, 30 * _DEG), (0.0, 90 * _DEG), (0.0, 90 * _DEG))
    dip_limits: tuple = (0.0, 90 * _DEG)
    dip_active: bool = False

    def __post_init__(self):
        for name in ("L1", "L2", "L3"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise InvalidArgumentError(f"{name} must be a positive length, got {value!r}")
        if self.dip_length is not None and not 0 < self.dip_length < self.L3:
            raise InvalidArgumentError("dip_length must lie strictly inside L3")
        if self.dip_active and self.dip_length is None:
            raise InvalidArgumentError("an active DIP joint needs dip_length")
        limits = np.asarray(self.joint_limits, dtype=float)
        if limits.shape != (3, 2) or np.any(limits[:, 0] > limits[:, 1]):
            raise InvalidArgumentError("joint_limits must be three (min, max) pairs")
        object.__setattr__(self, "joint_limits", tuple(map(tuple, limits.tolist())))
        object.__setattr__(self, "dip_limits", tuple(float(x) for x in self.dip_limits))

    @property
    def reach(self):
        return self.L1 + self.L2 + self.L3

    @property
    def dof(self):
        return 4 if self.dip_active else 3

    @property
    def limits(self):
        """``(dof, 2)`` array of joint limits, DIP included when active."""
        lim = np.array(self.joint_limits)
        if self.dip_active:
            lim = np.vstack([lim, self.dip_limits])
        return lim

    @cached_property
    def screw_axes(self):
        """``(dof, 6)`` array of space-frame screws ``(w, v)``."""
        flex = (0.0, -1.0, 0.0)
        axes = [
            revolute_screw((0.0, 0.0, 1.0), (0.0, 0.0, 0.0)),
            revolute_screw(flex, (self.L1, 0.0, 0.0)),
            revolute_screw(flex, (self.L1 + self.L2, 0.0, 0.0)),
        ]
        if self.dip_active:
            axes.append(revolute_screw(flex, (self.reach - self.dip_length, 0.0, 0.0)))
        return np.array(axes)

    @cached_property
    def home_pose(self):
        M = np.eye(4)
        M[0, 3] = self.reach
        return M

    @classmethod
    def from_dict(cls, d):
        lim = d.get("joint_limits_deg")
        kw = dict(
            L1=d["L1"], L2=d["L2"], L3=d["L3"],
            dip_length=d.get("dip_length"),
            dip_active=d.get("dip_active", False),
        )
        if lim is not None:
            kw["joint_limits"] = tuple((a * _DEG, b * _DEG) for a, b in lim)
        if "dip_limits_deg" in d:
            kw["dip_limits"] = tuple(x * _DEG for x in d["dip_limits_deg"])
        return cls(**kw)


@dataclass
class JointState:
    theta: np.ndarray
    theta_dot: np.ndarray = field(default_factory=lambda: np.zeros(3))


@dataclass
class FingertipPoint:
    position: np.ndarray
    orientation: np.ndarray


def _as_theta(geom, theta):
    th = np.asarray(theta, dtype=float)
    if th.shape[-1:] != (geom.dof,):
        raise InvalidArgumentError(f"expected {geom.dof} joint angles, got shape {th.shape}")
    if not np.all(np.isfinite(th)):
        raise InvalidArgumentError("joint angles must be finite")
    return th


def poe(screws, home, theta):
    """Product of exponentials ``exp([S1]t1) ... exp([Sn]tn) M``.

    ``theta`` is ``(n,)`` or ``(N, n)``.
    """
    th = np.asarray(theta, dtype=float)
    T = np.broadcast_to(np.eye(4), th.shape[:-1] + (4, 4))
    for i, S in enumerate(screws):
        T = T @ screw_exp(S, th[..., i])
    return T @ home


def forward_kinematics(geom, theta):
    """Fingertip pose at joint angles ``theta`` (rad), single or batched."""
    th = _as_theta(geom, theta)
    T = poe(geom.screw_axes, geom.home_pose, th)
    return FingertipPoint(position=T[..., :3, 3], orientation=T[..., :3, :3])


def fingertip_positions(geom, theta):
    """Batched fingertip positions only; cheaper than :func:`forward_kinematics`.

    Applies each joint exponential to the home point from the distal end
    inwards, so no ``(N, 4, 4)`` products are formed.
    """
    th = _as_theta(geom, theta)
    p = np.broadcast_to(geom.home_pose[:3, 3], th.shape[:-1] + (3,)).copy()
    for i in range(geom.dof - 1, -1, -1):
        w, v = geom.screw_axes[i, :3], geom.screw_axes[i, 3:]
        q = np.cross(w, v)  # point on the axis (w is a unit vector)
        t = th[..., i, None]
        r = p - q
        # Rodrigues rotation of r about w
        r = (r * np.cos(t) + np.cross(w, r) * np.sin(t)
             + (r @ w)[..., None] * w * (1.0 - np.cos(t)))
        p = r + q
    return p


def closure_residuals(geom, theta, position):
    """Residuals of the three locked-DIP closure equations."""
    th = np.asarray(theta, dtype=float)
    X, Y, Z = np.moveaxis(np.asarray(position, dtype=float), -1, 0)
    s1, c1 = np.sin(th[..., 0]), np.cos(th[..., 0])
    s2, c2 = np.sin(th[..., 1]), np.cos(th[..., 1])
    s3, c3 = np.sin(th[..., 2]), np.cos(th[..., 2])
    L1, L2, L3 = geom.L1, geom.L2, geom.L3
    rho = X * c1 + Y * s1
    return np.stack([
        X * s1 - Y * c1,
        (L2 + L3 * c3) * s2 + L3 * s3 * c2 - Z,
        (rho - L1) ** 2 + Z ** 2 - L2 ** 2 - L3 ** 2 - 2 * L2 * L3 * c3,
    ], axis=-1)


def inverse_kinematics(geom, target, check_limits=True, tol=1e-9):
    """Closed-form position IK for the locked-DIP finger (elbow-down branch).

    MCP1 comes from the first closure equation, PIP from the law of cosines
    and MCP2 from the remaining planar triangle. ``target`` may be ``(3,)``
    or ``(N, 3)``; batched calls raise on the first bad row.
    """
    if geom.dip_active:
        raise InvalidArgumentError("closed-form IK requires the DIP joint locked")
    p = np.asarray(target, dtype=float)
    if p.shape[-1:] != (3,) or not np.all(np.isfinite(p)):
        raise InvalidArgumentError("target must be a finite 3-vector")
    X, Y, Z = np.moveaxis(p, -1, 0)
    L1, L2, L3 = geom.L1, geom.L2, geom.L3

    planar = np.hypot(X, Y)
    if np.any(planar < 1e-12):
        raise SingularTargetError("target lies on the MCP1 axis; MCP1 angle undefined")

    # MCP1 is limited well inside +-90 deg, so take the root of tan(t1) = Y/X
    # in (-pi/2, pi/2]; rho may then be negative.
    t1 = np.arctan2(Y, X)
    t1 = np.where(t1 > np.pi / 2, t1 - np.pi, t1)
    t1 = np.where(t1 <= -np.pi / 2, t1 + np.pi, t1)
    rho = X * np.cos(t1) + Y * np.sin(t1)

    a = rho - L1
    d2 = a * a + Z * Z
    c3 = (d2 - L2 * L2 - L3 * L3) / (2 * L2 * L3)
    if np.any(c3 > 1 + 1e-12) or np.any(c3 < -1 - 1e-12):
        raise ReachabilityError(
            f"target out of reach: cos(PIP) = {np.max(np.abs(c3)):.6g} outside [-1, 1]",
            constraint="reach",
        )
    # half-angle form keeps precision near the straight finger
    num = np.maximum((L2 + L3) ** 2 - d2, 0.0)
    den = np.maximum(d2 - (L2 - L3) ** 2, 0.0)
    t3 = 2.0 * np.arctan2(np.sqrt(num), np.sqrt(den))
    t2 = np.arctan2(Z, a) - np.arctan2(L3 * np.sin(t3), L2 + L3 * np.cos(t3))
    t2 = (t2 + np.pi) % (2 * np.pi) - np.pi

    theta = np.stack([t1, t2, t3], axis=-1)
    if check_limits:
        lim = geom.limits
        bad = (theta < lim[:, 0] - tol) | (theta > lim[:, 1] + tol)
        if np.any(bad):
            j = int(np.nonzero(np.any(bad.reshape(-1, 3), axis=0))[0][0])
            raise ReachabilityError(
                f"solution violates the {JOINT_NAMES[j]} joint limit",
                constraint=f"joint_limit:{JOINT_NAMES[j]}",
            )
    return JointState(theta=theta, theta_dot=np.zeros_like(theta))


def jacobian(geom, theta):
    """Positional Jacobian ``d(position)/d(theta)`` in mm/rad, shape ``(3, dof)``."""
    th = _as_theta(geom, theta)
    if th.ndim != 1:
        raise InvalidArgumentError("jacobian takes a single joint vector")
    p = forward_kinematics(geom, th).position
    J = np.zeros((3, geom.dof))
    T = np.eye(4)
    for i, S in enumerate(geom.screw_axes):
        R, t = T[:3, :3], T[:3, 3]
        w = R @ S[:3]
        v = R @ S[3:] + np.cross(t, w)
        J[:, i] = np.cross(w, p) + v
        T = T @ screw_exp(S, th[i])
    return J


def fingertip_force_to_joint_torque(J, force):
    """Joint torques (N*mm) balancing a fingertip force (N): ``J.T @ F``."""
    return np.asarray(J, dtype=float).T @ np.asarray(force, dtype=float)


def within_limits(geom, theta, tol=0.0):
    th = np.asarray(theta, dtype=float)
    lim = geom.limits
    return np.all((th >= lim[:, 0] - tol) & (th <= lim[:, 1] + tol), axis=-1)


def transform(rotation=None, translation=(0.0, 0.0, 0.0)):
    T = np.eye(4)
    if rotation is not None:
        T[:3, :3] = rotation
    T[:3, 3] = translation
    return T


def rot_z(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def default_mounts():
    """Palm-frame mounting transforms, thumb first.

    Palm frame: x towards the fingertips, y across the palm towards the
    thumb, z the palm normal. The four fingers sit side by side on the
    distal palm edge; the thumb is mounted transversely, pointing along +y.
    The thumb placement is an estimate and can be overridden in the
    hand parameter file.
    """
    fingers = [transform(translation=(0.0, y, 0.0)) for y in (30.0, 10.0, -10.0, -30.0)]
    thumb = transform(rot_z(np.pi / 2), (-55.0, 45.0, 0.0))
    return [thumb] + fingers


@dataclass
class HandModel:
    fingers: list
    mounts: list
    names: tuple = FINGER_NAMES

    def __post_init__(self):
        if len(self.fingers) != 5 or len(self.mounts) != 5:
            raise InvalidArgumentError("a hand has exactly five fingers")
        self.mounts = [np.asarray(m, dtype=float) for m in self.mounts]
        for m in self.mounts:
            if m.shape != (4, 4):
                raise InvalidArgumentError("mounting transforms must be 4x4")

    @property
    def dof(self):
        return 3 * len(self.fingers)

    def fingertips(self, joints):
        """Palm-frame fingertip positions for a 15-vector of joint angles."""
        q = np.asarray(joints, dtype=float).reshape(5, 3)
        out = []
        for g, m, th in zip(self.fingers, self.mounts, q):
            p = forward_kinematics(g, th).position
            out.append(m[:3, :3] @ p + m[:3, 3])
        return np.array(out)


def default_hand():
    g = FingerGeometry()
    return HandModel(fingers=[g] * 5, mounts=default_mounts())
