"""Potentiometer + ADC joint angle measurement."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

CHANNELS_PER_FINGER = 4


@dataclass(frozen=True)
class SensorChannel:
    """One rotary potentiometer read by an ADC.

    The pot's electrical travel is centred on joint angle zero, so angle
    0 falls exactly on code ``2**(adc_bits - 1)``.
    """

    pot_range_deg: float = 333.3
    adc_bits: int = 16
    sample_hz: float = 200.0
    noise_std_lsb: float = 0.0

    def __post_init__(self):
        if self.pot_range_deg <= 0 or self.adc_bits < 1 or self.sample_hz <= 0:
            raise ConfigurationError("invalid sensor channel parameters")
        if self.noise_std_lsb < 0:
            raise ConfigurationError("noise_std_lsb must be >= 0")

    @property
    def n_codes(self):
        return 1 << self.adc_bits

    @property
    def step(self):
        """Quantisation step in radians."""
        return np.deg2rad(self.pot_range_deg) / self.n_codes

    @property
    def step_deg(self):
        return self.pot_range_deg / self.n_codes

    @property
    def angle_min(self):
        return -np.deg2rad(self.pot_range_deg) / 2

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def angle_to_code(channel, angle):
    """ADC code(s) for ``angle`` and an out-of-range flag."""
    raw = np.rint((np.asarray(angle, dtype=float) - channel.angle_min) / channel.step)
    out_of_range = (raw < 0) | (raw > channel.n_codes - 1)
    return np.clip(raw, 0, channel.n_codes - 1).astype(np.int64), out_of_range


def code_to_angle(channel, code):
    return channel.angle_min + np.asarray(code, dtype=np.int64) * channel.step


def noise_rng(seed, channel_id, tick):
    return np.random.default_rng([seed, channel_id, tick])


def sample_codes(channel, true_angle, tick=0, seed=0, channel_id=0):
    """Quantised reading as raw codes plus out-of-range flags.

    Noise (if configured) is drawn from a generator keyed on
    ``(seed, channel_id, tick)``, so a reading depends only on its inputs.
    """
    angle = np.asarray(true_angle, dtype=float)
    if channel.noise_std_lsb > 0:
        rng = noise_rng(seed, channel_id, tick)
        angle = angle + rng.normal(0.0, channel.noise_std_lsb * channel.step, size=angle.shape)
    return angle_to_code(channel, angle)


def sample(channel, true_angle, tick=0, seed=0, channel_id=0):
    """Measured joint angle (rad) after quantisation; see :func:`sample_codes`."""
    codes, _ = sample_codes(channel, true_angle, tick, seed, channel_id)
    return code_to_angle(channel, codes)
