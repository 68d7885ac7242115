"""Surface and sensor simulation from fan commands to a phone's accelerometer trace.

The surface is reduced to one Lorentzian resonance plus a target SNR. SNR is
defined the same way the receiver-side meter measures it: Welch PSD (Hann,
``fft_size`` segments, 50 % overlap) at the carrier bin over the median PSD
across 10-60 Hz with the carrier's +-2 bins excluded.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy import signal

from .core import GRAVITY, PHONE_QUANTIZATION_STEP, RpmSchedule, SampleTrace
from .physics import FanModel, rpm_response, synthesize_vibration

NOISE_BAND_HZ = (10.0, 60.0)
NOISELESS = math.inf


@dataclass(frozen=True)
class ChannelParams:
    resonance_hz: float = 45.0
    resonance_gain: float = 0.0
    resonance_bandwidth: float = 5.0
    snr_db: float = 45.02
    noise_seed: int = 0
    quantization_step: float | None = PHONE_QUANTIZATION_STEP
    sample_rate: int = 500
    snr_fft_size: int = 256
    snr_reference_hz: float = 43.0

    def __post_init__(self):
        if not self.resonance_bandwidth > 0:
            raise ValueError("resonance_bandwidth must be > 0")
        if self.resonance_gain < 0:
            raise ValueError("resonance_gain must be >= 0")
        if self.sample_rate <= 0 or int(self.sample_rate) != self.sample_rate:
            raise ValueError("sample_rate must be a positive integer")
        if self.quantization_step is not None and self.quantization_step < 0:
            raise ValueError("quantization_step must be >= 0")
        if math.isnan(self.snr_db):
            raise ValueError("snr_db is NaN")


@dataclass(frozen=True)
class LocationProfile:
    label: str
    snr_db: float


@dataclass(frozen=True)
class JammerParams:
    threshold: float = 300.0
    duration: float = 1.0
    interval: float = 1.0
    seed: int = 0
    phase: float | None = None

    def __post_init__(self):
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")
        if not (self.duration > 0 and self.interval > 0):
            raise ValueError("duration and interval must be > 0")


def resonance_gain(freq, params: ChannelParams):
    """``1 + g / (1 + ((f - f_r) / bw)**2)``; identically 1 when ``g == 0``."""
    f = np.asarray(freq, dtype=float)
    x = (f - params.resonance_hz) / params.resonance_bandwidth
    return 1 + params.resonance_gain / (1 + x * x)


def tone_to_noise_variance(amplitude: float, snr_db: float, fft_size: int) -> float:
    """Per-axis white-noise variance that puts an on-bin tone ``snr_db`` above the noise PSD.

    With a Hann Welch estimate, a tone of amplitude ``A`` peaks at
    ``A**2 * S1**2 / (2 * fs * S2)`` and white noise of variance ``s**2`` sits
    at ``2 * s**2 / fs`` (``S1 = sum(w)``, ``S2 = sum(w**2)``).
    """
    w = signal.get_window("hann", fft_size)
    s1, s2 = w.sum(), np.sum(w * w)
    return amplitude**2 * s1**2 / (4 * s2 * 10 ** (snr_db / 10))


def transmit(schedule: RpmSchedule, fan: FanModel = FanModel(), params: ChannelParams = ChannelParams()) -> SampleTrace:
    """Run a fan schedule through the simulated surface and phone sensor.

    The noise level is referenced to a steady tone at ``snr_reference_hz``
    (43 Hz, where the desk measurements were taken) passed through the same
    fan and surface, so ``measure_snr`` on such a tone reports ``snr_db``.
    """
    fs = params.sample_rate
    phase_ss, noise_ss = np.random.SeedSequence(params.noise_seed).spawn(2)
    rpm = rpm_response(schedule, fan, fs)
    src = synthesize_vibration(rpm, fan, int(phase_ss.generate_state(1)[0]), fs)
    freq = rpm / 60
    gain = resonance_gain(freq, params)
    samples = np.array(src.samples)
    samples[:, 2] = GRAVITY + (samples[:, 2] - GRAVITY) * gain
    if math.isfinite(params.snr_db):
        ref = params.snr_reference_hz
        amp = fan.amplitude_gain * ref**2 * float(resonance_gain(ref, params))
        sigma = math.sqrt(tone_to_noise_variance(amp, params.snr_db, params.snr_fft_size))
        samples += np.random.default_rng(noise_ss).normal(0.0, sigma, samples.shape)
    step = params.quantization_step
    if step:
        samples = np.round(samples / step) * step
    return SampleTrace(fs, samples, step or None)


def measure_snr(trace: SampleTrace, carrier_hz: float, fft_size: int = 256) -> float:
    """Carrier-bin PSD over the median in-band noise PSD, in dB."""
    fs = trace.sample_rate
    x = trace.magnitude()
    if x.size < fft_size + 7 * (fft_size // 2):
        raise ValueError("trace too short for 8 Welch segments")
    freqs, psd = signal.welch(x, fs=fs, window="hann", nperseg=fft_size)
    k = int(round(carrier_hz * fft_size / fs))
    band = np.flatnonzero((freqs >= NOISE_BAND_HZ[0]) & (freqs <= NOISE_BAND_HZ[1]))
    if k not in band:
        raise ValueError(f"carrier {carrier_hz} Hz outside the {NOISE_BAND_HZ} Hz analysis band")
    noise_bins = band[np.abs(band - k) > 2]
    p_noise = float(np.median(psd[noise_bins]))
    p_carrier = float(psd[k])
    if p_noise == 0:
        return math.inf if p_carrier > 0 else 0.0
    return 10 * math.log10(p_carrier / p_noise)


def apply_jammer(schedule: RpmSchedule, params: JammerParams) -> RpmSchedule:
    """Overlay random speed offsets: ``duration`` s jammed, then ``interval`` s clear, repeating.

    Each jam draws ``delta ~ U[-threshold, threshold]`` and the commanded RPM
    is shifted by it, clipped to ``[0, rpm_max]``. Segment timing is unchanged.
    The jam cycle starts ``phase`` seconds into its period relative to the
    schedule; ``None`` draws it from the seed, since a jammer thread is not
    synchronised with the transmitter.
    """
    if params.threshold == 0:
        return schedule
    rng = np.random.default_rng(params.seed)
    total = schedule.total_duration
    period = params.duration + params.interval
    phase = rng.uniform(0, period) if params.phase is None else params.phase % period
    edges = list(schedule.boundaries())
    jams = []
    # the jammer runs on its own clock; a jam already in progress at t=0 is kept
    k = -1 if phase > 0 else 0
    while phase + k * period < total:
        a = phase + k * period
        b = min(a + params.duration, total)
        delta = rng.uniform(-params.threshold, params.threshold)
        if b > 0:
            jams.append((max(a, 0.0), b, delta))
        k += 1
    cut = sorted(set(edges) | {a for a, _, _ in jams} | {b for _, b, _ in jams})
    cut = [c for c in cut if c <= total]
    starts = np.array([a for a, _, _ in jams])
    segs = []
    for a, b in zip(cut[:-1], cut[1:]):
        if b <= a:
            continue
        mid = 0.5 * (a + b)
        rpm = float(schedule.commanded(np.array([mid]))[0])
        j = int(np.searchsorted(starts, mid, side="right")) - 1
        if j >= 0 and mid < jams[j][1]:
            rpm = min(max(rpm + jams[j][2], 0.0), schedule.rpm_max)
        segs.append((b - a, rpm))
    return RpmSchedule(tuple(segs), schedule.rpm_max)


def load_locations(src=None) -> dict[str, LocationProfile]:
    """Read a ``label,snr_db`` CSV; defaults to the bundled desk measurements."""
    if src is None:
        text = resources.files("airviber").joinpath("data/locations.csv").read_text()
    elif isinstance(src, str) and "\n" in src:
        text = src
    else:
        with open(src) as fh:
            text = fh.read()
    profiles = {}
    for row in csv.DictReader(io.StringIO(text)):
        label = row["label"].strip()
        if label in profiles:
            raise ValueError(f"duplicate location label {label!r}")
        profiles[label] = LocationProfile(label, float(row["snr_db"]))
    return profiles
