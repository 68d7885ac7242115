"""Fan as a vibration source.

The fan's rotating unbalance shakes the chassis at the shaft frequency
``rpm / 60``. The force grows with the square of the angular speed, so the
source amplitude is modelled as ``amplitude_gain * f**2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .core import DEFAULT_RPM_MAX, GRAVITY, RpmSchedule, SampleTrace

OUNCE_KG = 0.028349523125
INCH_M = 0.0254


@dataclass(frozen=True)
class FanModel:
    """Mechanical parameters of a software-controllable chassis fan.

    ``harmonics`` holds ``(order, relative_amplitude)`` pairs added on top of the
    fundamental; empty by default since measured spectra show a single line.
    """

    rpm_max: float = DEFAULT_RPM_MAX
    spinup_tau: float = 0.25
    unbalance_mass: float = 0.1 * OUNCE_KG
    unbalance_radius: float = 2 * INCH_M
    amplitude_gain: float = 2e-4
    harmonics: tuple[tuple[int, float], ...] = ()
    initial_rpm: float | None = None

    def __post_init__(self):
        if self.rpm_max <= 0:
            raise ValueError("rpm_max must be positive")
        if self.spinup_tau < 0:
            raise ValueError("spinup_tau must be >= 0")
        if self.amplitude_gain < 0:
            raise ValueError("amplitude_gain must be >= 0")
        orders = [int(o) for o, _ in self.harmonics]
        if len(set(orders)) != len(orders):
            raise ValueError("harmonic orders must be distinct")
        for o, a in self.harmonics:
            if o < 2 or not 0 <= a <= 1:
                raise ValueError(f"bad harmonic ({o}, {a})")
        object.__setattr__(self, "harmonics", tuple((int(o), float(a)) for o, a in self.harmonics))


def rpm_to_hz(rpm):
    """Shaft (and vibration) frequency in Hz for a speed in RPM."""
    arr = np.asarray(rpm, dtype=float)
    if np.any(arr < 0):
        raise ValueError("rpm must be >= 0")
    hz = arr / 60
    return float(hz) if hz.ndim == 0 else hz


def centrifugal_force(mass: float, radius: float, rpm: float) -> float:
    """Force in newtons from an unbalance ``mass`` (kg) at ``radius`` (m).

    ``F = m * omega**2 * r`` with ``omega = 2*pi*rpm/60``.
    """
    if mass < 0:
        raise ValueError("mass must be >= 0")
    if radius <= 0:
        raise ValueError("radius must be > 0")
    if rpm <= 0:
        raise ValueError("rpm must be > 0")
    omega = 2 * np.pi * rpm / 60
    return mass * omega**2 * radius


def rpm_response(schedule: RpmSchedule, model: FanModel, sample_rate: float) -> np.ndarray:
    """Actual fan speed sampled at ``sample_rate``, tracking the commands with a first-order lag.

    Sample ``n`` sits at ``t = n / sample_rate``; the output has
    ``round(total_duration * sample_rate)`` samples. The fan starts at
    ``model.initial_rpm`` or, if unset, at the first commanded speed.
    """
    if sample_rate <= 0:
        raise ValueError("sample_rate must be positive")
    n = int(round(schedule.total_duration * sample_rate))
    if n < 1:
        raise ValueError("schedule shorter than one sample")
    commanded = schedule.commanded(np.arange(n) / sample_rate)
    if model.spinup_tau == 0:
        return commanded.astype(float)
    alpha = np.exp(-1.0 / (sample_rate * model.spinup_tau))
    start = commanded[0] if model.initial_rpm is None else model.initial_rpm
    # y[n] = alpha*y[n-1] + (1-alpha)*c[n], y[-1] = start
    out, _ = signal.lfilter([1 - alpha], [1, -alpha], commanded, zi=[alpha * start])
    return out


def synthesize_vibration(
    rpm_samples: np.ndarray,
    model: FanModel,
    phase_seed: int = 0,
    sample_rate: int = 500,
) -> SampleTrace:
    """Source-level acceleration for a sampled RPM curve.

    A phase-continuous oscillator follows ``f(t) = rpm(t)/60``; all vibration
    energy goes on the z axis on top of gravity.
    """
    rpm = np.asarray(rpm_samples, dtype=float)
    if rpm.ndim != 1 or rpm.size == 0:
        raise ValueError("rpm_samples must be a non-empty 1-D array")
    freq = rpm_to_hz(rpm)
    start_phase = np.random.default_rng(phase_seed).uniform(0, 2 * np.pi)
    phase = start_phase + 2 * np.pi * np.concatenate(([0.0], np.cumsum(freq[:-1]))) / sample_rate
    amp = model.amplitude_gain * freq**2
    vib = amp * np.sin(phase)
    for order, rel in model.harmonics:
        vib += rel * amp * np.sin(order * phase)
    samples = np.zeros((rpm.size, 3))
    samples[:, 2] = GRAVITY + vib
    return SampleTrace(sample_rate, samples)


def source_amplitude(rpm, model: FanModel):
    """Fundamental amplitude (m/s^2) at the source for the given speed(s)."""
    return model.amplitude_gain * rpm_to_hz(rpm) ** 2
