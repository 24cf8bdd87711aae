"""Cascaded hand control and the fixed-step hand simulator.

Outer loop (50 Hz, central controller): joint-space PID on the sensed
angles gives desired joint torques, the transmission inverse turns those
into motor torques and then into per-motor current targets.

Inner loop (1 kHz, driver boards): current PID plus back-EMF feedforward
drives the PWM duty of each motor. A board that stops receiving command frames enters a protective stop
in which its current targets decay to zero through a first-order low-pass.

Everything advances in simulated time; the joint plant is a rigid inertia
with viscous damping per joint, integrated with semi-implicit Euler at the
inner rate.
"""

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from . import actuation, sensing, transmission
from .errors import ConfigurationError, InvalidArgumentError


@dataclass
class PidGains:
    """PID gains; every field may be a scalar or an array for vector loops."""

    kp: float = 0.0
    ki: float = 0.0
    kd: float = 0.0
    integral_limit: float = 1.0
    output_limit: float = 1.0

    def __post_init__(self):
        for f in ("kp", "ki", "kd", "integral_limit", "output_limit"):
            v = np.asarray(getattr(self, f), dtype=float)
            if np.any(~np.isfinite(v)):
                raise ConfigurationError(f"PID {f} must be finite")
            if f in ("kp", "ki", "kd") and np.any(v < 0):
                raise ConfigurationError(f"PID {f} must be >= 0")
            if f in ("integral_limit", "output_limit") and np.any(v <= 0):
                raise ConfigurationError(f"PID {f} must be > 0")
            setattr(self, f, v)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


class Pid:
    """Discrete PID with integral clamping and output saturation.

    The derivative acts on the measurement, not the error, so reference
    steps do not kick the output. ``saturated`` reports which outputs were
    clipped on the last update.
    """

    def __init__(self, gains, shape=()):
        self.gains = gains
        self.shape = shape
        self.reset()

    def reset(self):
        self.integral = np.zeros(self.shape)
        self.prev_meas = None
        self.saturated = np.zeros(self.shape, dtype=bool)
        self.fault = False

    def update(self, reference, measurement, dt):
        g = self.gains
        error = reference - measurement
        self.integral = np.clip(self.integral + g.ki * error * dt, -g.integral_limit, g.integral_limit)
        if self.prev_meas is None:
            deriv = np.zeros(self.shape)
        else:
            deriv = -(measurement - self.prev_meas) / dt
        self.prev_meas = measurement
        raw = g.kp * error + self.integral + g.kd * deriv
        out = np.clip(raw, -g.output_limit, g.output_limit)
        self.saturated = out != raw
        return out


def position_loop_step(pid, theta_ref, theta_meas, dt):
    """Desired joint torques (N*mm) from the joint-space position error.

    A non-finite measurement latches a fault on ``pid``; from then on the
    loop commands zero torque until :meth:`Pid.reset`.
    """
    theta_meas = np.asarray(theta_meas, dtype=float)
    theta_ref = np.asarray(theta_ref, dtype=float)
    if pid.fault or not (np.all(np.isfinite(theta_meas)) and np.all(np.isfinite(theta_ref))):
        pid.fault = True
        return np.zeros(np.broadcast(theta_ref, theta_meas).shape)
    return pid.update(theta_ref, theta_meas, dt)


def current_loop_step(pid, i_ref, i_meas, dt):
    """PWM duty in [-1, 1] from the current error; sign selects direction."""
    return pid.update(np.asarray(i_ref, dtype=float), np.asarray(i_meas, dtype=float), dt)


@dataclass(frozen=True)
class LoopTiming:
    outer_hz: int = 50
    inner_hz: int = 1000
    sensor_hz: int = 200
    watchdog_window: int = 5

    def __post_init__(self):
        if min(self.outer_hz, self.inner_hz, self.sensor_hz) <= 0:
            raise ConfigurationError("loop rates must be positive")
        if self.inner_hz % self.outer_hz:
            raise ConfigurationError("inner_hz must be a multiple of outer_hz")
        if self.inner_hz % self.sensor_hz or self.sensor_hz < self.outer_hz:
            raise ConfigurationError("sensor_hz must divide inner_hz and be >= outer_hz")
        if self.watchdog_window < 0:
            raise ConfigurationError("watchdog_window must be >= 0")

    @property
    def inner_per_outer(self):
        return self.inner_hz // self.outer_hz

    @property
    def inner_per_sensor(self):
        return self.inner_hz // self.sensor_hz

    @property
    def outer_dt(self):
        return 1.0 / self.outer_hz

    @property
    def inner_dt(self):
        return 1.0 / self.inner_hz


class WatchdogMode(enum.Enum):
    NORMAL = "normal"
    PROTECTIVE_STOP = "protective_stop"


def watchdog_step(last_host_frame_age, window):
    """Link liveness: protective stop once the newest frame is older than ``window`` ticks."""
    return WatchdogMode.PROTECTIVE_STOP if last_host_frame_age > window else WatchdogMode.NORMAL


def decay_to_zero(value, decay):
    """One tick of the protective low-pass ``x <- decay * x`` towards zero."""
    return decay * np.asarray(value, dtype=float)


def quantize_current(current, lsb):
    """int16 current setpoint codes as carried in driver command frames."""
    return np.clip(np.rint(np.asarray(current) / lsb), -32767, 32767).astype(np.int64)


def joint_inertia(geom, masses_g):
    """Per-joint inertia (N*mm*s^2) of the straight finger, links as uniform rods.

    Each joint carries every link distal to it; values are taken at the
    extended posture and held constant.
    """
    m1, m2, m3 = masses_g
    L1, L2, L3 = geom.L1, geom.L2, geom.L3

    def rod(m, a, L):
        # uniform rod from distance a to a + L along the finger
        return m * (a * a + a * L + L * L / 3.0)

    mcp1 = rod(m1, 0.0, L1) + rod(m2, L1, L2) + rod(m3, L1 + L2, L3)
    mcp2 = rod(m2, 0.0, L2) + rod(m3, L2, L3)
    pip = rod(m3, 0.0, L3)
    return 1e-6 * np.array([mcp1, mcp2, pip])  # g*mm^2 -> kg*m^2 * 1e3


def reflected_inertia(routing, palm, arm):
    """Rotor inertia seen at each joint (N*mm*s^2) through gearbox and tendons.

    Uses the diagonal of ``A.T @ diag(J_rotor * gear**2) @ A`` with ``A`` the
    joint-to-motor-shaft angle map; the off-diagonal terms vanish when the two
    palm motors are identical.
    """
    A = transmission.motor_angles(routing, np.eye(3)).T  # shaft angle per joint angle
    rotor = np.array([palm.rotor_inertia * palm.gear_ratio ** 2] * 2
                     + [arm.rotor_inertia * arm.gear_ratio ** 2])
    return 1e3 * np.diag(A.T @ np.diag(rotor) @ A)


# --- hand state, driver boards and links -------------------------------------

N_FINGERS = 5
N_BOARDS = 4
SLOTS_PER_BOARD = 4
SENSOR_BOARD_IDS = tuple(range(5))
DRIVER_BOARD_IDS = tuple(range(5, 9))


@dataclass
class HandState:
    theta: np.ndarray            # (5, 3) rad
    theta_dot: np.ndarray        # (5, 3) rad/s
    currents: np.ndarray         # (15,) A, motor order palm1, palm2, arm per finger
    motor_torques: np.ndarray    # (15,) N*mm
    joint_torques: np.ndarray    # (5, 3) N*mm
    tensions: np.ndarray         # (5, 6) N
    time: float = 0.0
    outer_tick: int = 0
    inner_tick: int = 0
    faults: dict = field(default_factory=dict)

    @classmethod
    def at_rest(cls, theta=None):
        th = np.zeros((N_FINGERS, 3)) if theta is None else np.array(theta, dtype=float).reshape(N_FINGERS, 3)
        return cls(theta=th, theta_dot=np.zeros((N_FINGERS, 3)), currents=np.zeros(15),
                   motor_torques=np.zeros(15), joint_torques=np.zeros((N_FINGERS, 3)),
                   tensions=np.zeros((N_FINGERS, 6)))

    def copy(self):
        return HandState(self.theta.copy(), self.theta_dot.copy(), self.currents.copy(),
                         self.motor_torques.copy(), self.joint_torques.copy(), self.tensions.copy(),
                         self.time, self.outer_tick, self.inner_tick, json.loads(json.dumps(self.faults)))


class DriverBoards:
    """The four motor driver boards, vectorised as a ``(4, 4)`` slot grid.

    Boards keep their own copy of the last commanded current codes, the age
    of the newest command frame and the protective-stop state.
    """

    def __init__(self, cfg, timing):
        self.timing = timing
        self.lsb = cfg.current_lsb
        self.decay = cfg.protective_decay
        self.supply = cfg.supply_voltage
        actuation.check_supply(cfg.palm_motor, self.supply)
        actuation.check_supply(cfg.arm_motor, self.supply)

        # map motor index -> flat slot index; unused slots run a palm channel at 0 A
        self.slot_of_motor = np.array([(b - 5) * SLOTS_PER_BOARD + s for b, s in cfg.motor_slots])
        n = N_BOARDS * SLOTS_PER_BOARD
        self.is_arm = np.zeros(n, dtype=bool)
        self.is_arm[self.slot_of_motor[2::3]] = True
        self.palm, self.arm = cfg.palm_motor, cfg.arm_motor

        pg = PidGains.from_dict(cfg.current_gains["palm"])
        ag = PidGains.from_dict(cfg.current_gains["arm"])
        gains = PidGains(**{
            f: np.where(self.is_arm, getattr(ag, f), getattr(pg, f))
            for f in ("kp", "ki", "kd", "integral_limit", "output_limit")
        })
        self.pid = Pid(gains, shape=(n,))
        self.target_codes = np.zeros(n, dtype=np.int64)
        self.target = np.zeros(n)          # effective (filtered) current target, A
        self.current = np.zeros(n)
        self.frame_age = np.zeros(N_BOARDS, dtype=np.int64)
        self.stopped = np.zeros(N_BOARDS, dtype=bool)
        self.duty_saturated = np.zeros(n, dtype=bool)

    def receive(self, board, codes):
        """Accept a command frame: four int16 current codes for ``board`` (0-3)."""
        self.target_codes[board * SLOTS_PER_BOARD:(board + 1) * SLOTS_PER_BOARD] = codes
        self.frame_age[board] = -1  # incremented to 0 by end_round

    def end_round(self):
        self.frame_age += 1
        for b in range(N_BOARDS):
            mode = watchdog_step(self.frame_age[b], self.timing.watchdog_window)
            stop = mode is WatchdogMode.PROTECTIVE_STOP
            if stop and not self.stopped[b]:
                # decay from what the motor actually carries, not from a
                # command it may not have reached
                sl = slice(b * SLOTS_PER_BOARD, (b + 1) * SLOTS_PER_BOARD)
                self.target[sl] = self.current[sl]
            self.stopped[b] = stop

    def inner_step(self, rotor_speed, dt):
        """One current-loop tick for every slot; returns output torques (N*mm)."""
        slot_stopped = np.repeat(self.stopped, SLOTS_PER_BOARD)
        commanded = self.target_codes * self.lsb
        self.target = np.where(slot_stopped, decay_to_zero(self.target, self.decay), commanded)
        duty = current_loop_step(self.pid, self.target, self.current, dt)
        # back-EMF feedforward from the rotor speed estimate; the PI part then
        # only has to cover the resistive drop
        ke = np.where(self.is_arm, self.arm.back_emf_constant, self.palm.back_emf_constant)
        raw = duty + ke * np.asarray(rotor_speed, dtype=float) / self.supply
        duty = np.clip(raw, -1.0, 1.0)
        # back-calculation anti-windup: while the bridge is saturated the
        # integrator gives back the excess so it resumes from the applied duty
        self.pid.integral = self.pid.integral - (raw - duty)
        self.duty_saturated = self.pid.saturated | (duty != raw)
        i_new = np.empty_like(self.current)
        for mask, params in ((~self.is_arm, self.palm), (self.is_arm, self.arm)):
            i_new[mask] = actuation.electrical_step(
                params, duty[mask], self.supply, rotor_speed[mask], dt, self.current[mask])
        self.current = i_new
        tau = np.where(self.is_arm,
                       actuation.motor_torque(self.arm, i_new),
                       actuation.motor_torque(self.palm, i_new))
        return tau


class DirectLink:
    """Bus bypass: sensor codes and command codes pass through unchanged."""

    def poll(self, tick, sensor_codes):
        """Sensor codes as seen by the central controller, plus stale flags."""
        return np.array(sensor_codes, copy=True), np.zeros(N_FINGERS, dtype=bool)

    def push(self, tick, slot_codes, boards):
        for b in range(N_BOARDS):
            boards.receive(b, slot_codes[b])


class HandSimulator:
    """Deterministic fixed-step simulation of the whole hand.

    ``link`` carries sensor readings and current commands between the
    central controller and the boards; :class:`DirectLink` bypasses the
    bus, ``tendonhand.bus.BusLink`` routes everything through encoded
    frames.
    """

    def __init__(self, cfg, link=None, seed=0, state=None):
        self.cfg = cfg
        self.timing = LoopTiming(**cfg.timing)
        self.link = DirectLink() if link is None else link
        self.seed = seed
        self.geom = cfg.finger
        self.routing = cfg.routing
        self.limits = self.geom.limits[:3]
        self.inertia = (joint_inertia(self.geom, cfg.link_masses_g)
                        + reflected_inertia(cfg.routing, cfg.palm_motor, cfg.arm_motor))
        self.damping = np.asarray(cfg.damping, dtype=float)
        gains = PidGains.from_dict(cfg.position_gains)
        self.position_pids = [Pid(gains, shape=(3,)) for _ in range(N_FINGERS)]
        palm, arm = cfg.palm_motor, cfg.arm_motor
        self._torque_per_amp = np.tile([palm.torque_per_amp] * 2 + [arm.torque_per_amp], N_FINGERS)
        self._stall_current = np.tile([palm.stall_current] * 2 + [arm.stall_current], N_FINGERS)
        self.current_clamped = np.zeros(15, dtype=bool)
        self.boards = DriverBoards(cfg, self.timing)
        self.state = HandState.at_rest() if state is None else state.copy()
        if state is None:
            self.state.tensions = transmission.pair_tensions(self.routing, np.zeros((N_FINGERS, 3)), cfg.pretension)
        self.theta_ref = self.state.theta.copy()
        self.sensor_tick = 0
        self.inner_ticks_last_round = 0
        self.inner_hook = None  # called as hook(sim) after every inner tick
        self._sample_sensors()
        self.central_codes = self.sensor_codes.copy()

    # -- sensing --
    def _sample_sensors(self):
        th = np.zeros((N_FINGERS, sensing.CHANNELS_PER_FINGER))
        th[:, :3] = self.state.theta  # fourth channel reads the DIP joint, locked at 0
        codes, oor = sensing.sample_codes(self.cfg.sensor, th, self.sensor_tick, self.seed)
        self.sensor_codes = codes
        self.sensor_out_of_range = oor
        self.sensor_tick += 1

    # -- central controller --
    def _current_targets(self, theta_meas):
        dt = self.timing.outer_dt
        torque = np.zeros((N_FINGERS, 3))
        for f, pid in enumerate(self.position_pids):
            torque[f] = position_loop_step(pid, self.theta_ref[f], theta_meas[f], dt)
        motor_tau = transmission.joint_to_motor_torque(self.routing, torque).reshape(-1)
        i_cmd = motor_tau / self._torque_per_amp
        self.current_clamped = np.abs(i_cmd) > self._stall_current
        i_cmd = np.clip(i_cmd, -self._stall_current, self._stall_current)
        codes = quantize_current(i_cmd, self.cfg.current_lsb)
        slot_codes = np.zeros(N_BOARDS * SLOTS_PER_BOARD, dtype=np.int64)
        slot_codes[self.boards.slot_of_motor] = codes
        return slot_codes.reshape(N_BOARDS, SLOTS_PER_BOARD)

    @property
    def finger_fault(self):
        return np.array([pid.fault for pid in self.position_pids])

    # -- one outer tick --
    def tick(self, refs):
        """Advance one outer period towards the 15 joint references (rad)."""
        refs = np.asarray(refs, dtype=float).reshape(N_FINGERS, 3)
        clipped = np.clip(refs, self.limits[:, 0], self.limits[:, 1])
        ref_clamped = bool(np.any(clipped != refs) & np.all(np.isfinite(refs)))
        self.theta_ref = np.where(np.isfinite(refs), clipped, refs)

        # central polls the sensor boards, runs the position loops, pushes current targets
        codes_seen, stale = self.link.poll(self.state.outer_tick, self.sensor_codes)
        self.central_codes = np.where(stale[:, None], self.central_codes, codes_seen)
        theta_meas = sensing.code_to_angle(self.cfg.sensor, self.central_codes[:, :3])
        slot_codes = self._current_targets(theta_meas)
        self.link.push(self.state.outer_tick, slot_codes, self.boards)
        self.boards.end_round()

        n_inner = self.timing.inner_per_outer
        dt = self.timing.inner_dt
        rotor = np.zeros(N_BOARDS * SLOTS_PER_BOARD)
        gear = np.where(self.boards.is_arm, self.cfg.arm_motor.gear_ratio, self.cfg.palm_motor.gear_ratio)
        s = self.state
        count = 0
        for k in range(n_inner):
            if k and k % self.timing.inner_per_sensor == 0:
                self._sample_sensors()
            shaft = transmission.motor_angles(self.routing, s.theta_dot).reshape(-1)
            rotor[self.boards.slot_of_motor] = shaft * gear[self.boards.slot_of_motor]
            tau_slot = self.boards.inner_step(rotor, dt)
            motor_tau = tau_slot[self.boards.slot_of_motor]
            jt = transmission.motor_to_joint_torque(
                self.routing, motor_tau[0::3], motor_tau[1::3], motor_tau[2::3])
            a = self.inertia
            s.theta_dot = (s.theta_dot + dt * jt / a) / (1.0 + dt * self.damping / a)
            s.theta = s.theta + dt * s.theta_dot
            lo, hi = self.limits[:, 0], self.limits[:, 1]
            at_lo, at_hi = s.theta < lo, s.theta > hi
            s.theta = np.clip(s.theta, lo, hi)
            s.theta_dot = np.where(at_lo, np.maximum(s.theta_dot, 0.0), s.theta_dot)
            s.theta_dot = np.where(at_hi, np.minimum(s.theta_dot, 0.0), s.theta_dot)
            s.joint_torques = jt
            s.motor_torques = motor_tau
            s.currents = self.boards.current[self.boards.slot_of_motor]
            s.inner_tick += 1
            count += 1
            if self.inner_hook is not None:
                self.inner_hook(self)
        self.inner_ticks_last_round = count
        s.tensions = transmission.pair_tensions(self.routing, s.motor_torques.reshape(N_FINGERS, 3), self.cfg.pretension)
        s.outer_tick += 1
        s.time = s.outer_tick * self.timing.outer_dt
        self._sample_sensors()

        s.faults = {
            "protective_stop": self.boards.stopped.tolist(),
            "stale_sensor": stale.tolist(),
            "finger_fault": self.finger_fault.tolist(),
            "ref_clamped": ref_clamped,
            "current_saturated": (self.current_clamped | (np.abs(s.currents) > self._stall_current)).tolist(),
        }
        return s

    def telemetry(self):
        """JSON-lines record for the tick just completed."""
        s = self.state
        rec = {
            "tick": s.outer_tick,
            "t": round(s.time, 9),
            "inner_ticks": self.inner_ticks_last_round,
            "theta": s.theta.reshape(-1).tolist(),
            "theta_ref": self.theta_ref.reshape(-1).tolist(),
            "currents": s.currents.tolist(),
            "torques": s.joint_torques.reshape(-1).tolist(),
            "faults": s.faults,
        }
        return json.dumps(rec, separators=(",", ":"))


def hand_controller_tick(sim, refs):
    """Advance ``sim`` by one outer tick; returns its :class:`HandState`."""
    return sim.tick(refs)
