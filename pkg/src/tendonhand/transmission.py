"""Antagonistic tendon-pulley transmission between motors and finger joints.

Each palm motor turns a pulley carrying two antagonistic tendons that cross
the two-axis MCP joint on diagonally opposite corners:

====== ================= =========================
index  tendon            shortening per joint rad
====== ================= =========================
0      palm1 left flex   +R_mcp1 (MCP1), +R_mcp2 (MCP2)
1      palm1 right ext   -R_mcp1, -R_mcp2
2      palm2 left ext    +R_mcp1, -R_mcp2
3      palm2 right flex  -R_mcp1, +R_mcp2
4      arm flex          +R_pip (PIP)
5      arm ext           -R_pip
====== ================= =========================

Turning both palm motors the same way reels in the two left tendons and
produces a pure MCP1 moment; turning them in opposite directions loads the
flexors against the extensors and produces a pure MCP2 moment. Positive
``tau_palm2`` therefore pulls the left extensor tendon.

Excursions are reported as shortening (tendon drawn towards its motor).
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

TENDON_NAMES = (
    "palm1_left_flex", "palm1_right_ext",
    "palm2_left_ext", "palm2_right_flex",
    "arm_flex", "arm_ext",
)


@dataclass(frozen=True)
class TendonRouting:
    """Joint pulley radii ``R_*`` and motor pulley radii ``r_*`` in mm."""

    R_mcp1: float = 5.0
    R_mcp2: float = 5.0
    R_pip: float = 5.0
    r_palm: float = 2.5
    r_arm: float = 2.5
    efficiency: float = 1.0

    def __post_init__(self):
        for name in ("R_mcp1", "R_mcp2", "R_pip", "r_palm", "r_arm"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise InvalidArgumentError(f"pulley radius {name} must be > 0, got {value!r}")
        if not 0 < self.efficiency <= 1:
            raise InvalidArgumentError("efficiency must lie in (0, 1]")

    @property
    def torque_matrix(self):
        """``A`` with ``joint_torques = efficiency * A @ motor_torques``."""
        a = self.R_mcp1 / self.r_palm
        b = self.R_mcp2 / self.r_palm
        c = self.R_pip / self.r_arm
        return np.array([[a, a, 0.0],
                         [b, -b, 0.0],
                         [0.0, 0.0, c]])

    @property
    def excursion_matrix(self):
        """``(6, 3)`` tendon shortening per joint radian, in mm."""
        R1, R2, R3 = self.R_mcp1, self.R_mcp2, self.R_pip
        return np.array([
            [R1, R2, 0.0],
            [-R1, -R2, 0.0],
            [R1, -R2, 0.0],
            [-R1, R2, 0.0],
            [0.0, 0.0, R3],
            [0.0, 0.0, -R3],
        ])

    @property
    def motor_pulley_radii(self):
        return np.array([self.r_palm, self.r_palm, self.r_arm])

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def motor_to_joint_torque(routing, tau_palm1, tau_palm2, tau_arm):
    """Joint moments ``(M_mcp1, M_mcp2, M_pip)`` in N*mm from motor torques.

    Arguments broadcast, so arrays of motor torques map elementwise.
    """
    t1, t2, ta = np.broadcast_arrays(*(np.asarray(t, dtype=float) for t in (tau_palm1, tau_palm2, tau_arm)))
    eta = routing.efficiency
    return np.stack([
        eta * routing.R_mcp1 / routing.r_palm * (t1 + t2),
        eta * routing.R_mcp2 / routing.r_palm * (t1 - t2),
        eta * routing.R_pip / routing.r_arm * ta,
    ], axis=-1)


def joint_to_motor_torque(routing, M):
    """Inverse of :func:`motor_to_joint_torque`: motor torques for joint moments ``M``."""
    M = np.asarray(M, dtype=float)
    eta = routing.efficiency
    s = M[..., 0] * routing.r_palm / (eta * routing.R_mcp1)  # tau1 + tau2
    d = M[..., 1] * routing.r_palm / (eta * routing.R_mcp2)  # tau1 - tau2
    ta = M[..., 2] * routing.r_arm / (eta * routing.R_pip)
    return np.stack([(s + d) / 2, (s - d) / 2, ta], axis=-1)


def tendon_excursion(routing, theta):
    """Shortening of the six tendons (mm) at joint angles ``theta`` (rad)."""
    return np.asarray(theta, dtype=float) @ routing.excursion_matrix.T


def motor_angles(routing, theta):
    """Output-shaft angles of (palm1, palm2, arm) that keep the tendons taut.

    Each motor reels in its "a" tendon, so its angle is that tendon's
    excursion over the motor pulley radius. Also valid for velocities.
    """
    e = tendon_excursion(routing, theta)
    return e[..., [0, 2, 4]] / routing.motor_pulley_radii


@dataclass
class TendonState:
    tensions: np.ndarray
    excursions: np.ndarray
    spring_pretension: float = 2.0
    spring_rate: float = 0.5


def spring_tension(state, stretch):
    """Tension (N) of a spring-terminated tendon stretched by ``stretch`` mm.

    Negative stretch is slack; a cable cannot push, so the result is clipped
    at zero.
    """
    if state.spring_rate < 0:
        raise InvalidArgumentError("spring_rate must be >= 0")
    return np.maximum(0.0, state.spring_pretension + state.spring_rate * np.asarray(stretch, dtype=float))


def pair_tensions(routing, motor_torques, pretension):
    """Tendon tensions (N) for the six tendons given the three motor torques.

    Each motor pulley splits its torque evenly between its antagonistic pair
    around the spring pre-tension; the unloaded side goes slack rather than
    negative.
    """
    tau = np.asarray(motor_torques, dtype=float)
    delta = tau / (2.0 * routing.motor_pulley_radii)
    out = np.empty(tau.shape[:-1] + (6,))
    out[..., 0::2] = np.maximum(0.0, pretension + delta)
    out[..., 1::2] = np.maximum(0.0, pretension - delta)
    return out
