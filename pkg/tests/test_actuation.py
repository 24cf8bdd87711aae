import numpy as np
import pytest
from hypothesis import given, strategies as st

from tendonhand.actuation import (CHR_GM20_180_ARM, N20_PALM, MotorParams, electrical_power, electrical_step,
                                  mechanical_power, motor_torque)
from tendonhand.errors import ConfigurationError

ARM, PALM = CHR_GM20_180_ARM, N20_PALM


def test_zero_current_zero_torque():
    assert motor_torque(ARM, 0.0) == 0.0


@given(st.floats(-10, 10))
def test_torque_is_odd(i):
    assert motor_torque(ARM, -i) == -motor_torque(ARM, i)


def test_stall_current_gives_exact_stall_torque():
    assert motor_torque(ARM, ARM.stall_current) == ARM.stall_torque
    assert motor_torque(ARM, 10 * ARM.stall_current) == ARM.stall_torque


def test_kt_and_ke_consistent():
    for m in (ARM, PALM):
        assert m.torque_constant == pytest.approx(1000 * m.back_emf_constant)


def test_zero_duty_zero_speed_zero_current():
    assert electrical_step(PALM, 0.0, 12.0, 0.0, 1e-3) == 0.0


def test_full_duty_standstill_is_supply_over_resistance():
    assert electrical_step(PALM, 1.0, 12.0, 0.0, 1e-3) == pytest.approx(12.0 / PALM.winding_resistance)


@given(st.floats(-1, 1))
def test_no_load_speed_balances_back_emf(duty):
    omega = duty * 12.0 / ARM.back_emf_constant
    assert electrical_step(ARM, duty, 12.0, omega, 1e-3) == pytest.approx(0.0, abs=1e-12)


def test_inductive_winding_approaches_steady_state():
    m = MotorParams(**{**PALM.__dict__, "inductance": 1e-3})
    i = 0.0
    for _ in range(200):
        i = electrical_step(m, 1.0, 12.0, 0.0, 1e-3, i)
    assert i == pytest.approx(12.0 / m.winding_resistance, rel=1e-9)
    # one time constant reaches 1 - 1/e
    tau_e = m.inductance / m.winding_resistance
    i1 = electrical_step(m, 1.0, 12.0, 0.0, tau_e, 0.0)
    assert i1 == pytest.approx((1 - np.exp(-1)) * 12.0 / m.winding_resistance)


@pytest.mark.parametrize("supply", [2.0, 12.5])
def test_supply_outside_range_rejected(supply):
    with pytest.raises(ConfigurationError):
        electrical_step(PALM, 0.5, supply, 0.0, 1e-3)


def test_bad_params_rejected():
    with pytest.raises(ConfigurationError):
        MotorParams(**{**PALM.__dict__, "winding_resistance": 0.0})


def test_power_balance_at_standstill_is_all_heat():
    i = electrical_step(PALM, 0.5, 12.0, 0.0, 1e-3)
    assert mechanical_power(PALM, i, 0.0) == 0.0
    assert electrical_power(PALM, 0.5, 12.0, i) == pytest.approx(i * i * PALM.winding_resistance)


@given(st.floats(-1, 1), st.floats(-3000, 3000))
def test_electrical_power_covers_mechanical_and_copper(duty, omega):
    """V*i = R*i^2 + Ke*omega*i for the algebraic winding (unclamped torque)."""
    i = electrical_step(PALM, duty, 12.0, omega, 1e-3)
    lhs = electrical_power(PALM, duty, 12.0, i)
    rhs = PALM.winding_resistance * i * i + PALM.back_emf_constant * omega * i
    assert lhs == pytest.approx(rhs, abs=1e-9)
