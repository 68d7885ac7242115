"""Domain types shared by every stage of the link, plus the text file formats.

Two on-disk formats live here:

* trace v1: ``# air-viber-trace v1 sample_rate_hz=<int> quantization_step=<float-or-0>``
  followed by one ``ax,ay,az`` row per sample (m/s^2, 9 significant digits).
* schedule v1: ``# air-viber-schedule v1 rpm_max=<int> pad_bits=<int>``
  followed by one ``duration_s,rpm`` row per segment.
"""

from __future__ import annotations

import io
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Sequence, Union

import numpy as np

GRAVITY = 9.81
DEFAULT_RPM_MAX = 3260
# LSM6DSO resolution on the Galaxy S10, m/s^2
PHONE_QUANTIZATION_STEP = 0.0023956299

TRACE_MAGIC = "air-viber-trace"
SCHEDULE_MAGIC = "air-viber-schedule"

PathOrFile = Union[str, Path, IO[str]]


class TraceFormatError(ValueError):
    """Raised when a trace or schedule file does not follow the v1 format."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def as_bits(bits: Iterable[int] | str) -> np.ndarray:
    """Coerce a sequence of 0/1 values (or a string like ``"1010"``) to a uint8 array."""
    if isinstance(bits, str):
        bits = [int(c) for c in bits if not c.isspace()]
    arr = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits)
    if arr.size == 0:
        return np.zeros(0, dtype=np.uint8)
    if arr.ndim != 1:
        raise ValueError("bit stream must be one-dimensional")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("bit stream may only contain 0 and 1")
    return arr.astype(np.uint8)


def bits_to_str(bits: Iterable[int]) -> str:
    return "".join(str(int(b)) for b in bits)


@dataclass(frozen=True)
class RpmSchedule:
    """Piecewise-constant fan-speed commands: ``(duration_s, rpm)`` segments in order."""

    segments: tuple[tuple[float, float], ...]
    rpm_max: float = DEFAULT_RPM_MAX

    def __post_init__(self):
        segs = tuple((float(d), float(r)) for d, r in self.segments)
        if self.rpm_max <= 0:
            raise ValueError("rpm_max must be positive")
        for d, r in segs:
            if not d > 0:
                raise ValueError(f"segment duration must be > 0, got {d}")
            if not 0 <= r <= self.rpm_max:
                raise ValueError(f"rpm {r} outside [0, {self.rpm_max}]")
        object.__setattr__(self, "segments", segs)

    def __len__(self) -> int:
        return len(self.segments)

    @property
    def durations(self) -> np.ndarray:
        return np.array([d for d, _ in self.segments])

    @property
    def rpms(self) -> np.ndarray:
        return np.array([r for _, r in self.segments])

    @property
    def total_duration(self) -> float:
        return math.fsum(d for d, _ in self.segments)

    def append(self, duration: float, rpm: float) -> "RpmSchedule":
        return RpmSchedule(self.segments + ((duration, rpm),), self.rpm_max)

    def boundaries(self) -> np.ndarray:
        """Segment start times followed by the end time (length ``len(self) + 1``)."""
        edges = [0.0]
        for d, _ in self.segments:
            edges.append(edges[-1] + d)
        return np.array(edges)

    def commanded(self, times: np.ndarray) -> np.ndarray:
        """Commanded RPM at each time; times past the end hold the last segment."""
        if not self.segments:
            raise ValueError("empty schedule")
        edges = self.boundaries()
        idx = np.searchsorted(edges, times, side="right") - 1
        idx = np.clip(idx, 0, len(self.segments) - 1)
        return self.rpms[idx]


@dataclass(frozen=True, eq=False)
class SampleTrace:
    """Fixed-rate 3-axis accelerometer samples in m/s^2, shape ``(n, 3)``."""

    sample_rate: int
    samples: np.ndarray
    quantization_step: float | None = None

    def __post_init__(self):
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ValueError("sample_rate must be a positive integer")
        object.__setattr__(self, "sample_rate", int(self.sample_rate))
        data = np.array(self.samples, dtype=float)
        if data.ndim == 1 and data.size == 3:
            data = data.reshape(1, 3)
        if data.ndim != 2 or data.shape[1] != 3:
            raise ValueError("samples must have shape (n, 3)")
        if data.shape[0] < 1:
            raise ValueError("a trace needs at least one sample")
        step = self.quantization_step
        if step is not None:
            if step <= 0:
                step = None
            else:
                ratio = data / step
                if np.max(np.abs(ratio - np.round(ratio))) > 1e-4:
                    raise ValueError("samples are not multiples of quantization_step")
        object.__setattr__(self, "quantization_step", step)
        data.setflags(write=False)
        object.__setattr__(self, "samples", data)

    def __len__(self) -> int:
        return self.samples.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, SampleTrace):
            return NotImplemented
        return (
            self.sample_rate == other.sample_rate
            and self.quantization_step == other.quantization_step
            and np.array_equal(self.samples, other.samples)
        )

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self)) / self.sample_rate

    def magnitude(self) -> np.ndarray:
        """Per-sample vector magnitude sqrt(ax^2 + ay^2 + az^2)."""
        return np.sqrt(np.sum(self.samples**2, axis=1))


@dataclass(frozen=True)
class Spectrum:
    """Magnitudes on a uniform frequency grid with spacing ``bin_hz``."""

    bin_hz: float
    magnitudes: np.ndarray = field(repr=False)

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(len(self.magnitudes)) * self.bin_hz

    def peak_hz(self, min_hz: float = 0.0) -> float:
        freqs = self.frequencies
        mags = np.where(freqs >= min_hz, self.magnitudes, -np.inf)
        return float(freqs[int(np.argmax(mags))])


# -- file formats -----------------------------------------------------------

def _fmt(x: float) -> str:
    s = f"{x:.9g}"
    return "0" if s == "-0" else s


def _open_for_write(dest: PathOrFile):
    if isinstance(dest, (str, Path)):
        return open(dest, "w", newline="\n", encoding="ascii"), True
    return dest, False


def _read_lines(src: PathOrFile) -> list[str]:
    if isinstance(src, (str, Path)):
        with open(src, encoding="ascii") as fh:
            return fh.read().split("\n")
    return src.read().split("\n")


def _parse_header(line: str, magic: str, keys: Sequence[str]) -> dict[str, str]:
    parts = line.split()
    if len(parts) < 3 or parts[0] != "#" or parts[1] != magic or parts[2] != "v1":
        raise TraceFormatError(f"expected '# {magic} v1' header", line=1)
    fields = {}
    for token in parts[3:]:
        if "=" not in token:
            raise TraceFormatError(f"malformed header field {token!r}", line=1)
        k, v = token.split("=", 1)
        fields[k] = v
    missing = [k for k in keys if k not in fields]
    if missing:
        raise TraceFormatError(f"header missing {', '.join(missing)}", line=1)
    return fields


def format_trace(trace: SampleTrace) -> str:
    step = trace.quantization_step
    lines = [
        f"# {TRACE_MAGIC} v1 sample_rate_hz={trace.sample_rate} "
        f"quantization_step={repr(float(step)) if step else '0'}"
    ]
    lines.extend(",".join(_fmt(v) for v in row) for row in trace.samples.tolist())
    return "\n".join(lines) + "\n"


def write_trace(trace: SampleTrace, dest: PathOrFile) -> None:
    text = format_trace(trace)
    fh, owned = _open_for_write(dest)
    try:
        fh.write(text)
    finally:
        if owned:
            fh.close()


def read_trace(src: PathOrFile) -> SampleTrace:
    lines = _read_lines(src)
    if not lines or not lines[0].strip():
        raise TraceFormatError("empty trace file", line=1)
    hdr = _parse_header(lines[0], TRACE_MAGIC, ("sample_rate_hz", "quantization_step"))
    try:
        rate = int(hdr["sample_rate_hz"])
        step = float(hdr["quantization_step"])
    except ValueError as exc:
        raise TraceFormatError(f"bad header value: {exc}", line=1) from None
    if rate <= 0:
        raise TraceFormatError("sample_rate_hz must be a positive integer", line=1)
    if step < 0:
        raise TraceFormatError("quantization_step must be >= 0", line=1)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise TraceFormatError("expected 3 comma-separated values", line=lineno)
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise TraceFormatError(f"non-numeric value in {line!r}", line=lineno) from None
    if not rows:
        raise TraceFormatError("trace has no samples", line=2)
    samples = np.array(rows)
    if step > 0:
        # undo the 9-digit rounding so the multiple-of-step invariant holds exactly
        samples = np.round(samples / step) * step
    return SampleTrace(rate, samples, step if step > 0 else None)


def format_schedule(schedule: RpmSchedule, pad_bits: int = 0) -> str:
    lines = [
        f"# {SCHEDULE_MAGIC} v1 rpm_max={int(round(schedule.rpm_max))} pad_bits={int(pad_bits)}"
    ]
    lines.extend(f"{_fmt(d)},{_fmt(r)}" for d, r in schedule.segments)
    return "\n".join(lines) + "\n"


def write_schedule(schedule: RpmSchedule, dest: PathOrFile, pad_bits: int = 0) -> None:
    text = format_schedule(schedule, pad_bits)
    fh, owned = _open_for_write(dest)
    try:
        fh.write(text)
    finally:
        if owned:
            fh.close()


def read_schedule(src: PathOrFile) -> tuple[RpmSchedule, int]:
    """Parse a schedule file, returning the schedule and its recorded pad length."""
    lines = _read_lines(src)
    if not lines or not lines[0].strip():
        raise TraceFormatError("empty schedule file", line=1)
    hdr = _parse_header(lines[0], SCHEDULE_MAGIC, ("rpm_max", "pad_bits"))
    try:
        rpm_max = int(hdr["rpm_max"])
        pad = int(hdr["pad_bits"])
    except ValueError as exc:
        raise TraceFormatError(f"bad header value: {exc}", line=1) from None
    segs = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        if not re.fullmatch(r"[^,]+,[^,]+", line):
            raise TraceFormatError("expected 'duration_s,rpm'", line=lineno)
        d, r = line.split(",")
        try:
            segs.append((float(d), float(r)))
        except ValueError:
            raise TraceFormatError(f"non-numeric value in {line!r}", line=lineno) from None
    if not segs:
        raise TraceFormatError("schedule has no segments", line=2)
    try:
        return RpmSchedule(tuple(segs), rpm_max), pad
    except ValueError as exc:
        raise TraceFormatError(str(exc)) from None


def trace_from_text(text: str) -> SampleTrace:
    return read_trace(io.StringIO(text))
