"""Fingertip force and joint torque statics, and the force calibration."""

from dataclasses import dataclass

import numpy as np

from .kinematics import jacobian
from .transmission import joint_to_motor_torque

# MCP2 and PIP half flexed; the fingertip pushes along +z (the flexion side)
TEST_POSTURE = np.radians([0.0, 30.0, 30.0])


def joint_torque(geom, theta, force):
    """Joint torques (N*mm) that balance a fingertip force ``force`` (N)."""
    return jacobian(geom, theta).T @ np.asarray(force, dtype=float)


def recover_force(geom, theta, tau):
    """Fingertip force that the joint torques ``tau`` exert at ``theta``.

    Least-squares solve of ``J^T F = tau``; exact when J is non-singular.
    """
    J = jacobian(geom, theta)
    F, *_ = np.linalg.lstsq(J.T, np.asarray(tau, dtype=float), rcond=None)
    return F


def duality_residual(geom, theta, tau):
    """``|J^T F - tau|`` for the force recovered from ``tau``."""
    F = recover_force(geom, theta, tau)
    return float(np.linalg.norm(jacobian(geom, theta).T @ F - tau))


@dataclass
class ForceCalibration:
    force_n: float            # largest force magnitude along ``direction``
    limiting_motor: str
    joint_torques: np.ndarray  # at that force, N*mm
    motor_torques: np.ndarray  # palm 1, palm 2, arm; N*mm
    stall_torques: np.ndarray

    def as_dict(self):
        return {
            "force_n": self.force_n,
            "limiting_motor": self.limiting_motor,
            "joint_torques_nmm": self.joint_torques.tolist(),
            "motor_torques_nmm": self.motor_torques.tolist(),
            "stall_torques_nmm": self.stall_torques.tolist(),
        }


def max_fingertip_force(geom, routing, palm, arm, theta=TEST_POSTURE, direction=(0.0, 0.0, 1.0)):
    """Largest static fingertip force along ``direction`` before any motor stalls.

    Motor torque is linear in the force, so the limit is the smallest
    ratio of stall torque to motor torque per newton.
    """
    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    per_newton = joint_to_motor_torque(routing, joint_torque(geom, theta, u))
    stall = np.array([palm.stall_torque, palm.stall_torque, arm.stall_torque])
    with np.errstate(divide="ignore"):
        ratio = np.where(np.abs(per_newton) > 0, stall / np.abs(per_newton), np.inf)
    k = int(np.argmin(ratio))
    f = float(ratio[k])
    names = ("palm_1", "palm_2", "arm")
    return ForceCalibration(f, names[k], joint_torque(geom, theta, f * u), f * per_newton, stall)
