"""End-to-end experiments: packetize, transmit, simulate, receive, BER sweeps, spectra."""

from __future__ import annotations

import dataclasses
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import signal

from .channel import (
    ChannelParams,
    JammerParams,
    LocationProfile,
    apply_jammer,
    load_locations,
    transmit,
)
from .core import RpmSchedule, SampleTrace, Spectrum, as_bits
from .framing import FramingConfig, deframe, frame
from .modem import (
    AskParams,
    DemodConfig,
    FskParams,
    analyze_windows,
    best_alignment,
    find_preamble,
    modulate_ask,
    modulate_fsk,
    vote_bits,
)
from .physics import FanModel


# -- payload encoding ---------------------------------------------------------

def encode_text(text: str, bits_per_char: int = 7) -> np.ndarray:
    """MSB-first fixed-width character codes; 7 bits turns "secret" into 42 bits."""
    out = []
    for ch in text:
        code = ord(ch)
        if code >= 1 << bits_per_char:
            raise ValueError(f"{ch!r} does not fit in {bits_per_char} bits")
        out.extend((code >> (bits_per_char - 1 - i)) & 1 for i in range(bits_per_char))
    return np.array(out, dtype=np.uint8)


def decode_text(bits, bits_per_char: int = 7) -> str:
    bits = as_bits(bits)
    chars = []
    for i in range(0, bits.size - bits_per_char + 1, bits_per_char):
        code = 0
        for b in bits[i:i + bits_per_char]:
            code = (code << 1) | int(b)
        chars.append(chr(code))
    return "".join(chars).rstrip("\x00")


def encode_bytes(data: bytes) -> np.ndarray:
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8))


def packetize(payload, framing: FramingConfig = FramingConfig()) -> tuple[list[np.ndarray], int]:
    """Split into zero-padded payload-sized frames; returns ``(frames, pad_bits)``."""
    payload = as_bits(payload)
    if payload.size == 0:
        raise ValueError("nothing to send")
    n = framing.payload_len
    pad = (-payload.size) % n
    padded = np.concatenate([payload, np.zeros(pad, dtype=np.uint8)])
    return [frame(padded[i:i + n], framing) for i in range(0, padded.size, n)], pad


def build_schedule(
    payload,
    modulation: str = "fsk",
    fsk: FskParams = FskParams(),
    ask: AskParams = AskParams(),
    framing: FramingConfig = FramingConfig(),
    rpm_max: float = 3260,
) -> tuple[RpmSchedule, int]:
    """Frames sent back to back, modulated into one schedule."""
    frames, pad = packetize(payload, framing)
    bits = np.concatenate(frames)
    if modulation == "fsk":
        return modulate_fsk(bits, fsk, rpm_max), pad
    if modulation == "ask":
        return modulate_ask(bits, ask, rpm_max), pad
    raise ValueError(f"unknown modulation {modulation!r}")


# -- receive ------------------------------------------------------------------

@dataclass
class FrameResult:
    offset: int
    bits: np.ndarray = field(repr=False)
    payload: np.ndarray = field(repr=False)
    check_ok: bool
    complete: bool
    detected: bool = True


def receive(
    trace: SampleTrace,
    config: DemodConfig = DemodConfig(),
    framing: FramingConfig = FramingConfig(),
    n_frames: int | None = None,
    force: bool = False,
) -> list[FrameResult]:
    """Find and decode every frame in a trace.

    Each frame is located by its own preamble, searched from where the
    previous one ended. With ``n_frames`` and ``force`` set (BER runs, where
    frames are known to be contiguous from t=0) a missed preamble falls back
    to the best alignment around the expected position.
    """
    decisions, weights, floor = analyze_windows(trace, config)
    spb = config.samples_per_bit
    flen = framing.frame_len
    results: list[FrameResult] = []
    search = 0
    while n_frames is None or len(results) < n_frames:
        if n_frames is not None:
            # contiguous frames: look within half a bit of the expected start
            hi = search + spb // 2 if results else spb
            offset = find_preamble(decisions, weights, floor, config, framing.preamble_bits, start=search)
            if offset is not None and offset > hi:
                offset = None
            detected = offset is not None
            if not detected and force:
                offset = best_alignment(decisions, spb, framing.preamble_bits, weights, start=search, stop=hi)
        else:
            offset = find_preamble(decisions, weights, floor, config, framing.preamble_bits, start=search)
            detected = offset is not None
        if offset is None:
            break
        bits = vote_bits(decisions, spb, offset, weights, flen)
        complete = bits.size == flen
        if complete:
            payload, ok = deframe(bits, framing)
        else:
            start = len(framing.preamble_bits)
            payload, ok = bits[start:start + framing.payload_len], False
        results.append(FrameResult(offset, bits, payload, ok, complete, detected))
        if not complete:
            break
        search = offset + flen * spb
    return results


# -- BER ----------------------------------------------------------------------

@dataclass
class BerReport:
    label: str
    snr_db: float
    trials: int
    bits_sent: int
    bit_errors: int
    frames_sent: int
    frames_detected: int
    frames_check_ok: int
    params_echo: dict = field(repr=False, default_factory=dict)

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_sent if self.bits_sent else 0.0


_CSV_COLUMNS = ("label", "snr_db", "trials", "bits_sent", "bit_errors", "ber",
                "frames_sent", "frames_detected", "frames_check_ok")


@dataclass
class BerSweep:
    rows: list[BerReport]
    params: dict

    def to_text(self) -> str:
        """``key=value`` parameter lines, a blank line, then a CSV table."""
        buf = io.StringIO()
        buf.write("# air-viber-ber v1\n")
        for k in sorted(self.params):
            buf.write(f"{k}={json.dumps(self.params[k], sort_keys=True)}\n")
        buf.write("\n")
        buf.write(",".join(_CSV_COLUMNS) + "\n")
        for r in self.rows:
            vals = [r.label, repr(float(r.snr_db)), r.trials, r.bits_sent, r.bit_errors,
                    repr(r.ber), r.frames_sent, r.frames_detected, r.frames_check_ok]
            buf.write(",".join(str(v) for v in vals) + "\n")
        return buf.getvalue()


def parse_ber_report(text: str) -> tuple[dict, list[dict]]:
    """Inverse of :meth:`BerSweep.to_text`: ``(params, rows)``."""
    head, _, table = text.partition("\n\n")
    params = {}
    for line in head.splitlines():
        if line.startswith("#") or not line:
            continue
        k, v = line.split("=", 1)
        params[k] = json.loads(v)
    lines = [ln for ln in table.splitlines() if ln]
    cols = lines[0].split(",")
    rows = [dict(zip(cols, ln.split(","))) for ln in lines[1:]]
    return params, rows


def _dc(cls, data):
    return cls(**data) if data else cls()


def run_ber(
    n_bits: int = 32,
    trials: int = 100,
    snrs: Sequence[float] | None = None,
    locations: Sequence[str] | None = None,
    seed: int = 0,
    fsk: dict | None = None,
    framing: dict | None = None,
    fan: dict | None = None,
    channel: dict | None = None,
    demod: dict | None = None,
    jammer: dict | None = None,
    locations_file: str | None = None,
) -> BerSweep:
    """BER of the FSK link per SNR (or per named location).

    Every row reuses the same payloads and noise realisations, so rows differ
    only in noise level. Only payload bits are scored; a missed preamble falls
    back to the best alignment so its bits count as guesses.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if n_bits < 1:
        raise ValueError("n_bits must be >= 1")
    if snrs is None and locations is None:
        snrs = [45.02]
    fsk_p = _dc(FskParams, fsk)
    framing_p = _dc(FramingConfig, framing)
    fan_p = _dc(FanModel, fan)
    channel_base = _dc(ChannelParams, channel)
    demod_p = DemodConfig(**{"bit_time": fsk_p.bit_duration, "f0": fsk_p.f0, "f1": fsk_p.f1,
                             "sample_rate": channel_base.sample_rate, **(demod or {})})
    jam_p = JammerParams(**jammer) if jammer else None

    points: list[tuple[str, float]] = []
    if locations is not None:
        table = load_locations(locations_file)
        for label in locations:
            if str(label) not in table:
                raise KeyError(f"unknown location {label!r}; known: {', '.join(table)}")
            points.append((str(label), table[str(label)].snr_db))
    for s in snrs or ():
        points.append((f"snr{float(s):g}", float(s)))

    params = {
        "n_bits": n_bits, "trials": trials, "seed": seed,
        "snrs": list(snrs) if snrs is not None else None,
        "locations": [str(x) for x in locations] if locations is not None else None,
        "fsk": dataclasses.asdict(fsk_p), "framing": dataclasses.asdict(framing_p),
        "fan": dataclasses.asdict(fan_p), "channel": dataclasses.asdict(channel_base),
        "demod": dataclasses.asdict(demod_p),
        "jammer": dataclasses.asdict(jam_p) if jam_p else None,
        "locations_file": locations_file,
    }
    # channel.snr_db and noise_seed are set per point and trial
    params["channel"].pop("snr_db")
    params["channel"].pop("noise_seed")
    n_frames = math.ceil(n_bits / framing_p.payload_len)

    rows = []
    for label, snr in points:
        errors = detected = check_ok = 0
        for trial in range(trials):
            ss = np.random.SeedSequence([seed, trial])
            payload_ss, noise_ss, jam_ss = ss.spawn(3)
            payload = np.random.default_rng(payload_ss).integers(0, 2, n_bits).astype(np.uint8)
            schedule, _ = build_schedule(payload, "fsk", fsk_p, framing=framing_p, rpm_max=fan_p.rpm_max)
            if jam_p is not None:
                jam_seed = int(jam_ss.generate_state(1)[0])
                schedule = apply_jammer(schedule, dataclasses.replace(jam_p, seed=jam_p.seed + jam_seed))
            ch = dataclasses.replace(channel_base, snr_db=snr,
                                     noise_seed=int(noise_ss.generate_state(1)[0]))
            trace = transmit(schedule, fan_p, ch)
            frames = receive(trace, demod_p, framing_p, n_frames=n_frames, force=True)
            got = np.concatenate([f.payload for f in frames]) if frames else np.zeros(0, np.uint8)
            got = got[:n_bits]
            errors += int(np.sum(got != payload[:got.size])) + (n_bits - got.size)
            detected += sum(f.detected for f in frames)
            check_ok += sum(f.check_ok for f in frames)
        rows.append(BerReport(label, snr, trials, trials * n_bits, errors,
                              trials * n_frames, detected, check_ok, params))
    return BerSweep(rows, params)


# -- spectra ------------------------------------------------------------------

def spectrogram(trace: SampleTrace, fft_size: int = 256, noverlap: int = 156,
                window: str = "hann") -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """STFT magnitude of the vector-magnitude signal: ``(times, freqs, mags[time, freq])``.

    Each window has its mean removed so gravity does not swamp bin 0.
    """
    if not 0 <= noverlap < fft_size:
        raise ValueError("need 0 <= noverlap < fft_size")
    x = trace.magnitude()
    if x.size < fft_size:
        raise ValueError(f"trace has {x.size} samples, fewer than fft_size={fft_size}")
    hop = fft_size - noverlap
    frames = np.lib.stride_tricks.sliding_window_view(x, fft_size)[::hop]
    frames = frames - frames.mean(axis=1, keepdims=True)
    mags = np.abs(np.fft.rfft(frames * signal.get_window(window, fft_size), axis=1))
    fs = trace.sample_rate
    times = (np.arange(frames.shape[0]) * hop + fft_size / 2) / fs
    freqs = np.fft.rfftfreq(fft_size, 1 / fs)
    return times, freqs, mags


def psd(trace: SampleTrace, fft_size: int = 256) -> Spectrum:
    """Welch PSD (Hann, 50 % overlap) of the vector magnitude."""
    x = trace.magnitude()
    if x.size < fft_size:
        raise ValueError(f"trace has {x.size} samples, fewer than fft_size={fft_size}")
    freqs, pxx = signal.welch(x, fs=trace.sample_rate, window="hann", nperseg=fft_size)
    return Spectrum(freqs[1] - freqs[0], pxx)


def format_spectrogram(times, freqs, mags) -> str:
    lines = ["time_s\\freq_hz," + ",".join(f"{f:.9g}" for f in freqs)]
    for t, row in zip(times, mags):
        lines.append(f"{t:.9g}," + ",".join(f"{v:.9g}" for v in row))
    return "\n".join(lines) + "\n"


def format_psd(spectrum: Spectrum) -> str:
    lines = ["freq_hz,psd"]
    lines.extend(f"{f:.9g},{p:.9g}" for f, p in zip(spectrum.frequencies, spectrum.magnitudes))
    return "\n".join(lines) + "\n"


def location_params(label: str, channel: ChannelParams = ChannelParams(),
                    table: dict[str, LocationProfile] | None = None) -> ChannelParams:
    table = load_locations() if table is None else table
    if label not in table:
        raise KeyError(f"unknown location {label!r}; known: {', '.join(table)}")
    return dataclasses.replace(channel, snr_db=table[label].snr_db)
