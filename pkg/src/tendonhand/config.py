"""Hand parameter file loading.

The parameter file is JSON; its schema ships as ``docs/config_schema.json``
and is embedded below. Unknown keys are rejected.
"""

import copy
import json
from dataclasses import dataclass
from importlib import resources

import jsonschema
import numpy as np

from .actuation import MotorParams
from .errors import ConfigurationError
from .kinematics import FingerGeometry, HandModel
from .sensing import SensorChannel
from .transmission import TendonRouting

_num = {"type": "number"}
_vec3 = {"type": "array", "items": _num, "minItems": 3, "maxItems": 3}


def _obj(props, required=None):
    return {
        "type": "object",
        "properties": props,
        "required": list(props) if required is None else required,
        "additionalProperties": False,
    }


_gains = _obj({k: {"anyOf": [_num, _vec3]} for k in ("kp", "ki", "kd", "integral_limit", "output_limit")})
_motor = _obj({
    "name": {"type": "string"},
    "source": {"type": "string"},
    "torque_constant": _num,
    "back_emf_constant": _num,
    "winding_resistance": _num,
    "gear_ratio": _num,
    "stall_torque": _num,
    "max_speed": _num,
    "voltage_range": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
    "inductance": _num,
    "rotor_inertia": _num,
}, required=["name", "torque_constant", "back_emf_constant", "winding_resistance",
             "gear_ratio", "stall_torque", "max_speed"])
_matrix4 = {"type": "array", "minItems": 4, "maxItems": 4,
            "items": {"type": "array", "items": _num, "minItems": 4, "maxItems": 4}}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "tendonhand hand parameter file",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "$comment": {"type": "string"},
        "finger": _obj({
            "L1": _num, "L2": _num, "L3": _num,
            "dip_length": {"type": ["number", "null"]},
            "dip_active": {"type": "boolean"},
            "joint_limits_deg": {"type": "array", "minItems": 3, "maxItems": 3,
                                 "items": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}},
            "dip_limits_deg": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
        }, required=["L1", "L2", "L3"]),
        "mounts": {"type": "array", "items": _matrix4, "minItems": 5, "maxItems": 5},
        "routing": _obj({k: _num for k in ("R_mcp1", "R_mcp2", "R_pip", "r_palm", "r_arm", "efficiency")},
                        required=["R_mcp1", "R_mcp2", "R_pip", "r_palm", "r_arm"]),
        "motors": _obj({"palm": _motor, "arm": _motor}),
        "supply_voltage": _num,
        "sensor": _obj({"pot_range_deg": _num, "adc_bits": {"type": "integer"},
                        "sample_hz": _num, "noise_std_lsb": _num}, required=[]),
        "plant": _obj({"link_masses_g": _vec3, "damping": _vec3}),
        "tendons": _obj({"pretension": _num, "spring_rate": _num}),
        "control": _obj({
            "position_gains": _gains,
            "current_gains": _obj({"palm": _gains, "arm": _gains}),
            "protective_decay": _num,
            "current_lsb": _num,
        }),
        "timing": _obj({"outer_hz": {"type": "integer"}, "inner_hz": {"type": "integer"},
                        "sensor_hz": {"type": "integer"}, "watchdog_window": {"type": "integer"}}),
        "bus": _obj({"motor_slots": {
            "type": "array", "minItems": 15, "maxItems": 15,
            "items": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2}}}),
    },
    "required": ["finger", "routing", "motors", "supply_voltage", "plant", "control", "timing"],
}


@dataclass
class HandConfig:
    """Every parameter the simulator needs, parsed from a hand file."""

    hand: HandModel
    routing: TendonRouting
    palm_motor: MotorParams
    arm_motor: MotorParams
    supply_voltage: float
    sensor: SensorChannel
    link_masses_g: np.ndarray
    damping: np.ndarray
    pretension: float
    spring_rate: float
    position_gains: dict
    current_gains: dict
    protective_decay: float
    current_lsb: float
    timing: dict
    motor_slots: list
    raw: dict

    @property
    def finger(self):
        return self.hand.fingers[0]


def default_config_dict():
    text = resources.files("tendonhand").joinpath("data/hand_default.json").read_text()
    return json.loads(text)


def parse_config(d):
    try:
        jsonschema.validate(d, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigurationError(f"hand parameter file invalid at {where}: {exc.message}") from None
    d = copy.deepcopy(d)
    geom = FingerGeometry.from_dict(d["finger"])
    mounts = d.get("mounts")
    if mounts is None:
        from .kinematics import default_mounts
        mounts = default_mounts()
    hand = HandModel(fingers=[geom] * 5, mounts=mounts)

    slots = d.get("bus", {}).get("motor_slots") or [[5 + m // 4, m % 4] for m in range(15)]
    seen = set()
    for b, s in slots:
        if not 5 <= b <= 8 or not 0 <= s <= 3 or (b, s) in seen:
            raise ConfigurationError(f"invalid or duplicate motor slot {(b, s)}")
        seen.add((b, s))

    tendons = d.get("tendons", {"pretension": 2.0, "spring_rate": 0.5})
    ctl = d["control"]
    return HandConfig(
        hand=hand,
        routing=TendonRouting.from_dict(d["routing"]),
        palm_motor=MotorParams.from_dict(d["motors"]["palm"]),
        arm_motor=MotorParams.from_dict(d["motors"]["arm"]),
        supply_voltage=float(d["supply_voltage"]),
        sensor=SensorChannel.from_dict(d.get("sensor", {})),
        link_masses_g=np.asarray(d["plant"]["link_masses_g"], dtype=float),
        damping=np.asarray(d["plant"]["damping"], dtype=float),
        pretension=float(tendons["pretension"]),
        spring_rate=float(tendons["spring_rate"]),
        position_gains=ctl["position_gains"],
        current_gains=ctl["current_gains"],
        protective_decay=float(ctl["protective_decay"]),
        current_lsb=float(ctl["current_lsb"]),
        timing=d["timing"],
        motor_slots=[tuple(x) for x in slots],
        raw=d,
    )


def load_config(path=None):
    """Parse a hand parameter file; ``None`` loads the packaged defaults."""
    if path is None:
        return parse_config(default_config_dict())
    try:
        with open(path) as fh:
            d = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read hand parameter file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"hand parameter file is not valid JSON: {exc}") from None
    return parse_config(d)
