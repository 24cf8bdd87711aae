"""Brushed DC gearmotor model driven by a PWM H-bridge.

Units: torque in N*mm at the gearbox output, current in A, rotor speed in
rad/s, voltage in V. ``torque_constant`` (N*mm/A, rotor side) and
``back_emf_constant`` (V*s/rad) describe the same physics, so in SI they are
equal: ``torque_constant == 1000 * back_emf_constant``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InvalidArgumentError


@dataclass(frozen=True)
class MotorParams:
    name: str
    torque_constant: float     # N*mm/A at the rotor
    back_emf_constant: float   # V*s/rad at the rotor
    winding_resistance: float  # ohm
    gear_ratio: float
    stall_torque: float        # N*mm at the output shaft
    max_speed: float           # rad/s at the output shaft, no load at max supply
    voltage_range: tuple = (3.0, 12.0)
    inductance: float = 0.0    # H; 0 selects the algebraic winding model
    rotor_inertia: float = 0.0  # kg*m^2, rotor side

    def __post_init__(self):
        for f in ("torque_constant", "back_emf_constant", "winding_resistance",
                  "gear_ratio", "stall_torque", "max_speed"):
            v = getattr(self, f)
            if not np.isfinite(v) or v <= 0:
                raise ConfigurationError(f"{self.name}: {f} must be positive, got {v!r}")
        lo, hi = self.voltage_range
        if not 0 < lo < hi:
            raise ConfigurationError(f"{self.name}: bad voltage_range {self.voltage_range!r}")
        if self.inductance < 0 or self.rotor_inertia < 0:
            raise ConfigurationError(f"{self.name}: inductance and rotor_inertia must be >= 0")
        object.__setattr__(self, "voltage_range", (float(lo), float(hi)))

    @property
    def stall_current(self):
        """Current at which the output torque reaches ``stall_torque``."""
        return self.stall_torque / (self.gear_ratio * self.torque_constant)

    @property
    def torque_per_amp(self):
        return self.gear_ratio * self.torque_constant

    @classmethod
    def from_dict(cls, d):
        d = {k: v for k, v in d.items() if k != "source"}
        if "voltage_range" in d:
            d["voltage_range"] = tuple(d["voltage_range"])
        return cls(**d)


def motor_torque(params, current):
    """Output-shaft torque for a winding current, clamped to +-stall torque."""
    tau = params.gear_ratio * params.torque_constant * np.asarray(current, dtype=float)
    return np.clip(tau, -params.stall_torque, params.stall_torque)


def check_supply(params, supply):
    lo, hi = params.voltage_range
    if not lo <= supply <= hi:
        raise ConfigurationError(
            f"{params.name}: supply {supply} V outside the driver range [{lo}, {hi}] V")


def electrical_step(params, duty, supply, omega, dt, current=0.0):
    """Advance the winding current by ``dt`` seconds.

    ``duty`` in [-1, 1] scales the supply (sign selects the bridge
    direction); ``omega`` is the rotor speed. With zero inductance the
    current jumps to its steady state ``(duty*V - Ke*omega) / R``.
    """
    check_supply(params, supply)
    if dt <= 0:
        raise InvalidArgumentError("dt must be positive")
    v = np.asarray(duty, dtype=float) * supply - params.back_emf_constant * np.asarray(omega, dtype=float)
    if params.inductance == 0.0:
        return v / params.winding_resistance
    # exact discretisation of L di/dt = v - R i over the step
    tau_e = params.inductance / params.winding_resistance
    i_ss = v / params.winding_resistance
    return i_ss + (np.asarray(current, dtype=float) - i_ss) * np.exp(-dt / tau_e)


def electrical_power(params, duty, supply, current):
    return np.asarray(duty) * supply * np.asarray(current)


def mechanical_power(params, current, omega):
    """Output power (W) for rotor speed ``omega``; torque N*mm -> N*m."""
    return motor_torque(params, current) * 1e-3 * np.asarray(omega) / params.gear_ratio


# Datasheet-class defaults typical of 12 V parts of each family. They give a
# palm-limited fingertip force near 12 N (see statics.max_fingertip_force).
N20_PALM = MotorParams(
    name="N20",
    torque_constant=3.75,
    back_emf_constant=0.00375,
    winding_resistance=30.0,
    gear_ratio=100.0,
    stall_torque=150.0,
    max_speed=32.0,
    rotor_inertia=5e-9,
)

CHR_GM20_180_ARM = MotorParams(
    name="CHR-GM20-180",
    torque_constant=6.0,
    back_emf_constant=0.006,
    winding_resistance=4.0,
    gear_ratio=60.0,
    stall_torque=1080.0,
    max_speed=33.3,
    rotor_inertia=4e-8,
)
