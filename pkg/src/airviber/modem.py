"""Binary FSK (return-to-zero) and ASK over fan speed, and the sliding-FFT FSK receiver.

The receiver follows the usual accelerometer pipeline: vector magnitude,
high-pass, ``fft_size``-sample windows advanced by ``hop = fft_size - noverlap``,
and the magnitude of the two carrier bins in each window. Each window votes
``1`` when the f1 bin is stronger, ``0`` otherwise (ties go to ``0``). A
preamble search fixes where bit boundaries fall, then every
``samples_per_bit`` consecutive windows are voted into one bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import signal

from .core import DEFAULT_RPM_MAX, RpmSchedule, SampleTrace, as_bits

NOISE_BAND_HZ = (10.0, 60.0)
WEIGHTED = "weighted"
MAJORITY = "majority"


@dataclass(frozen=True)
class FskParams:
    """RTZ FSK timing; defaults are the 3030/3260/2600 RPM, 0.5 s / 2.0 s setting."""

    rpm0: float = 2600
    rpm1: float = 3260
    rpm_base: float = 3030
    state_duration: float = 0.5
    bit_duration: float = 2.0

    def __post_init__(self):
        if self.rpm0 == self.rpm1:
            raise ValueError("rpm0 and rpm1 must differ")
        if self.rpm_base in (self.rpm0, self.rpm1):
            raise ValueError("rpm_base must differ from rpm0 and rpm1")
        if not 0 < self.state_duration < self.bit_duration:
            raise ValueError("need 0 < state_duration < bit_duration")
        if min(self.rpm0, self.rpm1, self.rpm_base) < 0:
            raise ValueError("rpm values must be >= 0")

    @property
    def base_duration(self) -> float:
        return self.bit_duration - self.state_duration

    @property
    def bit_rate(self) -> float:
        return 1 / self.bit_duration

    @property
    def f0(self) -> float:
        return self.rpm0 / 60

    @property
    def f1(self) -> float:
        return self.rpm1 / 60

    @property
    def f_base(self) -> float:
        return self.rpm_base / 60


@dataclass(frozen=True)
class AskParams:
    rpm0: float = 2000
    rpm1: float = 2600
    bit_duration: float = 2.0

    def __post_init__(self):
        if self.rpm0 == self.rpm1:
            raise ValueError("rpm0 and rpm1 must differ")
        if not self.bit_duration > 0:
            raise ValueError("bit_duration must be > 0")


def modulate_fsk(bits, params: FskParams = FskParams(), rpm_max: float = DEFAULT_RPM_MAX) -> RpmSchedule:
    """One ``(state, rpm0|rpm1)`` segment then one ``(base, rpm_base)`` segment per bit."""
    bits = as_bits(bits)
    if bits.size == 0:
        raise ValueError("cannot modulate an empty bit stream")
    segs = []
    for b in bits:
        segs.append((params.state_duration, params.rpm1 if b else params.rpm0))
        segs.append((params.base_duration, params.rpm_base))
    return RpmSchedule(tuple(segs), rpm_max)


def modulate_ask(bits, params: AskParams = AskParams(), rpm_max: float = DEFAULT_RPM_MAX) -> RpmSchedule:
    """One segment per bit; equal neighbours are deliberately not merged."""
    bits = as_bits(bits)
    if bits.size == 0:
        raise ValueError("cannot modulate an empty bit stream")
    return RpmSchedule(
        tuple((params.bit_duration, params.rpm1 if b else params.rpm0) for b in bits), rpm_max
    )


@dataclass(frozen=True)
class DemodConfig:
    """Receiver settings.

    ``window`` is the taper applied before each FFT (``"hann"`` or ``"boxcar"``);
    ``vote`` selects a plain majority over window decisions or one where each
    window counts with weight ``|a1 - a0|`` (the default, which lets quiet
    return-to-zero windows abstain). ``carrier_threshold`` is the minimum ratio
    of summed confidence to summed in-band noise floor over the preamble span.
    """

    sample_rate: int = 500
    fft_size: int = 256
    noverlap: int = 156
    bit_time: float = 2.0
    f0: float = 2600 / 60
    f1: float = 3260 / 60
    highpass_hz: float = 5.0
    window: str = "hann"
    vote: str = WEIGHTED
    enable_threshold: float = 0.8
    carrier_threshold: float = 1.2

    def __post_init__(self):
        if self.sample_rate <= 0 or self.fft_size <= 0:
            raise ValueError("sample_rate and fft_size must be positive")
        if not 0 <= self.noverlap < self.fft_size:
            raise ValueError("need 0 <= noverlap < fft_size")
        if self.fft_size > self.sample_rate * self.bit_time:
            raise ValueError("fft_size longer than one bit")
        nyq = self.sample_rate / 2
        if not (0 < self.f0 < nyq and 0 < self.f1 < nyq):
            raise ValueError("carrier frequencies must lie in (0, sample_rate/2)")
        if self.bin0 == self.bin1:
            raise ValueError("f0 and f1 fall in the same FFT bin")
        if self.samples_per_bit < 3:
            raise ValueError("need at least 3 windows per bit for the vote")
        if self.vote not in (WEIGHTED, MAJORITY):
            raise ValueError(f"unknown vote {self.vote!r}")
        if not 0 <= self.highpass_hz < nyq:
            raise ValueError("highpass_hz must lie in [0, sample_rate/2)")
        if not 0 < self.enable_threshold <= 1:
            raise ValueError("enable_threshold must lie in (0, 1]")
        if self.carrier_threshold < 0:
            raise ValueError("carrier_threshold must be >= 0")
        signal.get_window(self.window, self.fft_size)

    @classmethod
    def for_fsk(cls, params: FskParams, **kw) -> "DemodConfig":
        return cls(bit_time=params.bit_duration, f0=params.f0, f1=params.f1, **kw)

    @property
    def hop(self) -> int:
        return self.fft_size - self.noverlap

    @property
    def bin0(self) -> int:
        return int(round(self.fft_size * self.f0 / self.sample_rate))

    @property
    def bin1(self) -> int:
        return int(round(self.fft_size * self.f1 / self.sample_rate))

    @property
    def bin_hz(self) -> float:
        return self.sample_rate / self.fft_size

    @property
    def samples_per_bit(self) -> int:
        return int(round(self.sample_rate * self.bit_time / self.hop))


def window_count(n_samples: int, fft_size: int, hop: int) -> int:
    if n_samples < fft_size:
        return 0
    return (n_samples - fft_size) // hop + 1


class _SlidingFFT:
    """Magnitude -> high-pass -> windowed FFT, fed incrementally."""

    def __init__(self, config: DemodConfig):
        self.config = config
        self._taper = signal.get_window(config.window, config.fft_size)
        if config.highpass_hz > 0:
            self._b, self._a = signal.butter(1, config.highpass_hz, "highpass", fs=config.sample_rate)
        else:
            self._b = self._a = None
        self._zi = None
        self._buffer = np.zeros(0)
        freqs = np.fft.rfftfreq(config.fft_size, 1 / config.sample_rate)
        bins = np.arange(freqs.size)
        in_band = (freqs >= NOISE_BAND_HZ[0]) & (freqs <= NOISE_BAND_HZ[1])
        clear = (np.abs(bins - config.bin0) > 2) & (np.abs(bins - config.bin1) > 2) & (bins > 0)
        self._floor_bins = np.flatnonzero(in_band & clear)
        if self._floor_bins.size == 0:
            self._floor_bins = np.flatnonzero(clear)

    def push(self, magnitudes: np.ndarray) -> np.ndarray:
        """Returns ``(n_windows, 3)``: f0 bin, f1 bin, median in-band noise magnitude."""
        x = np.asarray(magnitudes, dtype=float)
        if x.size == 0:
            return np.zeros((0, 3))
        if self._b is not None:
            if self._zi is None:
                self._zi = signal.lfilter_zi(self._b, self._a) * x[0]
            x, self._zi = signal.lfilter(self._b, self._a, x, zi=self._zi)
        buf = np.concatenate([self._buffer, x])
        cfg = self.config
        n = window_count(buf.size, cfg.fft_size, cfg.hop)
        if n == 0:
            self._buffer = buf
            return np.zeros((0, 3))
        frames = sliding_window_view(buf, cfg.fft_size)[:: cfg.hop][:n]
        spectrum = np.fft.rfft(frames * self._taper, axis=1)
        self._buffer = buf[n * cfg.hop:]
        mag = np.abs(spectrum)
        floor = np.median(mag[:, self._floor_bins], axis=1)
        return np.column_stack([mag[:, cfg.bin0], mag[:, cfg.bin1], floor])


def _check_rate(trace: SampleTrace, config: DemodConfig) -> None:
    if trace.sample_rate != config.sample_rate:
        raise ValueError(
            f"trace sampled at {trace.sample_rate} Hz, config expects {config.sample_rate} Hz"
        )


def stft_stream(trace: SampleTrace, config: DemodConfig) -> np.ndarray:
    """Per-window ``(amplitude_f0, amplitude_f1)``, shape ``(n_windows, 2)``.

    Traces shorter than one window give an empty array.
    """
    _check_rate(trace, config)
    return _SlidingFFT(config).push(trace.magnitude())[:, :2]


def window_decisions(amplitudes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hard decision and confidence ``|a1 - a0|`` for each window."""
    amplitudes = np.asarray(amplitudes, dtype=float).reshape(-1, 2)
    a0, a1 = amplitudes[:, 0], amplitudes[:, 1]
    return (a1 > a0).astype(np.uint8), np.abs(a1 - a0)


def _padded_view(x: np.ndarray, span: int, offsets: np.ndarray) -> np.ndarray:
    """Rows ``x[o:o+span]`` for each offset, zero where the row leaves the array."""
    lead = max(0, -int(offsets[0]))
    tail = max(0, int(offsets[-1]) + span - x.size)
    padded = np.concatenate([np.zeros(lead), x, np.zeros(tail)])
    return sliding_window_view(padded, span)[np.asarray(offsets) + lead]


def _agreements(decisions, weights, samples_per_bit, preamble, offsets) -> np.ndarray:
    template = np.repeat(as_bits(preamble), samples_per_bit)
    dv = _padded_view(decisions, template.size, offsets)
    wv = _padded_view(weights, template.size, offsets)
    total = wv.sum(axis=1)
    agree = (wv * (dv == template)).sum(axis=1)
    return np.where(total > 0, agree / np.where(total > 0, total, 1), 0.0)


def _offset_range(n_windows: int, span: int, samples_per_bit: int, start: int) -> np.ndarray:
    # up to half a bit may hang off either end of the stream
    lo = start - samples_per_bit // 2
    hi = n_windows - span + samples_per_bit // 2
    return np.arange(lo, hi + 1)


def detect_enable(
    window_decisions,
    samples_per_bit: int,
    preamble=(1, 0, 1, 0),
    weights=None,
    threshold: float = 0.8,
    start: int = 0,
    noise_floor=None,
    min_carrier: float = 0.0,
) -> int | None:
    """Window index where the preamble starts, or ``None``.

    The preamble is expanded to ``samples_per_bit`` windows per bit and slid
    over the decisions. The first offset whose (optionally weighted) agreement
    reaches ``threshold`` opens a search over the next ``samples_per_bit``
    offsets, and the best-agreeing one is returned so bit boundaries land
    where the preamble fits tightest. Offsets may start up to half a bit
    before ``start``; windows outside the stream carry no weight.

    With ``noise_floor`` given, a candidate must also have
    ``sum(weights) / sum(noise_floor) >= min_carrier`` over its span, which
    rejects noise that happens to line up with the template.
    """
    if samples_per_bit < 3:
        raise ValueError("samples_per_bit must be >= 3")
    d = np.asarray(window_decisions, dtype=float)
    w = np.ones_like(d) if weights is None else np.asarray(weights, dtype=float)
    span = len(preamble) * samples_per_bit
    offsets = _offset_range(d.size, span, samples_per_bit, start)
    if offsets.size == 0:
        return None
    scores = _agreements(d, w, samples_per_bit, preamble, offsets)
    ok = scores >= threshold
    if noise_floor is not None and min_carrier > 0:
        floor = _padded_view(np.asarray(noise_floor, dtype=float), span, offsets).sum(axis=1)
        strength = _padded_view(w, span, offsets).sum(axis=1)
        ok &= strength >= min_carrier * floor
    hits = np.flatnonzero(ok)
    if hits.size == 0:
        return None
    first = hits[0]
    return int(offsets[first + int(np.argmax(scores[first:first + samples_per_bit]))])


def best_alignment(
    window_decisions,
    samples_per_bit: int,
    preamble=(1, 0, 1, 0),
    weights=None,
    start: int = 0,
    stop: int | None = None,
) -> int | None:
    """Offset in ``[start - spb//2, stop]`` with maximum preamble agreement, ignoring thresholds."""
    d = np.asarray(window_decisions, dtype=float)
    w = np.ones_like(d) if weights is None else np.asarray(weights, dtype=float)
    offsets = _offset_range(d.size, len(preamble) * samples_per_bit, samples_per_bit, start)
    if stop is not None:
        offsets = offsets[offsets <= stop]
    if offsets.size == 0:
        return None
    scores = _agreements(d, w, samples_per_bit, preamble, offsets)
    return int(offsets[int(np.argmax(scores))])


def vote_bits(
    decisions,
    samples_per_bit: int,
    offset: int = 0,
    weights=None,
    n_bits: int | None = None,
) -> np.ndarray:
    """Group windows from ``offset`` into bits by (weighted) majority.

    A group is decoded when at least half of its windows exist. ``1`` wins
    ties, as in ``2 * sum >= samples_per_bit``.
    """
    d = np.asarray(decisions, dtype=float)
    w = np.ones_like(d) if weights is None else np.asarray(weights, dtype=float)
    bits = []
    k = 0
    while n_bits is None or k < n_bits:
        lo = offset + k * samples_per_bit
        hi = lo + samples_per_bit
        a, b = max(lo, 0), min(hi, d.size)
        if b - a < (samples_per_bit + 1) // 2:
            break
        ws, ds = w[a:b], d[a:b]
        bits.append(1 if 2 * np.sum(ws * ds) >= np.sum(ws) else 0)
        k += 1
    return np.array(bits, dtype=np.uint8)


@dataclass
class DemodResult:
    bits: np.ndarray
    detected: bool
    offset: int | None
    decisions: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    noise_floor: np.ndarray = field(repr=False)

    @property
    def status(self) -> str:
        return "ok" if self.detected else "no carrier"


def analyze_windows(trace: SampleTrace, config: DemodConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Window decisions, vote weights and noise floor for a whole trace."""
    _check_rate(trace, config)
    out = _SlidingFFT(config).push(trace.magnitude())
    decisions, confidence = window_decisions(out[:, :2])
    weights = confidence if config.vote == WEIGHTED else np.ones_like(confidence)
    return decisions, weights, out[:, 2]


def find_preamble(decisions, weights, noise_floor, config: DemodConfig, preamble=(1, 0, 1, 0), start: int = 0):
    # the carrier gate compares |a1 - a0| to the floor, so it needs confidence weights
    gate = config.carrier_threshold if config.vote == WEIGHTED else 0.0
    return detect_enable(
        decisions, config.samples_per_bit, preamble, weights,
        config.enable_threshold, start, noise_floor, gate,
    )


def demodulate(
    trace: SampleTrace,
    config: DemodConfig = DemodConfig(),
    preamble=(1, 0, 1, 0),
    n_bits: int | None = None,
    force: bool = False,
) -> DemodResult:
    """Decode a trace into bits, starting with the detected preamble.

    When the preamble is not found the result is empty with status
    ``"no carrier"``. ``force=True`` instead decodes from the best-agreeing
    offset within the first bit period (``detected`` stays ``False``); BER
    sweeps use this so a missed preamble scores as guessed bits.
    """
    decisions, weights, floor = analyze_windows(trace, config)
    spb = config.samples_per_bit
    offset = find_preamble(decisions, weights, floor, config, preamble)
    detected = offset is not None
    if not detected and force:
        offset = best_alignment(decisions, spb, preamble, weights, stop=spb)
    if offset is None:
        bits = np.zeros(0, dtype=np.uint8)
    else:
        bits = vote_bits(decisions, spb, offset, weights, n_bits)
    return DemodResult(bits, detected, offset, decisions, weights, floor)


class StreamingDemodulator:
    """Push accelerometer samples as they arrive; collect bits as they complete.

    Single-owner state; not thread safe.
    """

    def __init__(self, config: DemodConfig = DemodConfig(), preamble=(1, 0, 1, 0)):
        self.config = config
        self.preamble = tuple(int(b) for b in as_bits(preamble))
        self._fft = _SlidingFFT(config)
        self._decisions = np.zeros(0)
        self._weights = np.zeros(0)
        self._floor = np.zeros(0)
        self.offset: int | None = None
        self.bits: list[int] = []

    @property
    def enabled(self) -> bool:
        return self.offset is not None

    def push(self, samples) -> list[int]:
        """Feed ``(k, 3)`` samples; returns bits completed by this call."""
        samples = np.asarray(samples, dtype=float).reshape(-1, 3)
        out = self._fft.push(np.sqrt(np.sum(samples**2, axis=1)))
        d, conf = window_decisions(out[:, :2])
        w = conf if self.config.vote == WEIGHTED else np.ones_like(conf)
        self._decisions = np.concatenate([self._decisions, d])
        self._weights = np.concatenate([self._weights, w])
        self._floor = np.concatenate([self._floor, out[:, 2]])
        spb = self.config.samples_per_bit
        if self.offset is None:
            hit = find_preamble(self._decisions, self._weights, self._floor, self.config, self.preamble)
            # lock only once the refinement range after the hit has been seen
            if hit is not None and self._decisions.size >= hit + (len(self.preamble) + 1) * spb:
                self.offset = hit
        if self.offset is None:
            return []
        new = []
        while self.offset + (len(self.bits) + 1) * spb <= self._decisions.size:
            lo = self.offset + len(self.bits) * spb
            a = max(lo, 0)
            ws, ds = self._weights[a:lo + spb], self._decisions[a:lo + spb]
            bit = 1 if 2 * np.sum(ws * ds) >= np.sum(ws) else 0
            self.bits.append(bit)
            new.append(bit)
        return new
