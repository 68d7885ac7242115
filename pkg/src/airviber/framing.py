"""Packet framing: preamble, fixed-size payload, then even parity or CRC-8."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import as_bits

PARITY = "parity"
CRC8 = "crc8"


@dataclass(frozen=True)
class FramingConfig:
    preamble_bits: tuple[int, ...] = (1, 0, 1, 0)
    payload_len: int = 32
    check_mode: str = PARITY
    crc_polynomial: int = 0x07

    def __post_init__(self):
        pre = tuple(int(b) for b in as_bits(self.preamble_bits))
        if not pre:
            raise ValueError("preamble must not be empty")
        if any(a == b for a, b in zip(pre, pre[1:])):
            raise ValueError("preamble bits must alternate")
        if self.payload_len <= 0:
            raise ValueError("payload_len must be positive")
        if self.check_mode not in (PARITY, CRC8):
            raise ValueError(f"unknown check_mode {self.check_mode!r}")
        if not 0 < self.crc_polynomial <= 0xFF:
            raise ValueError("crc_polynomial must be an 8-bit value")
        object.__setattr__(self, "preamble_bits", pre)

    @property
    def check_len(self) -> int:
        return 1 if self.check_mode == PARITY else 8

    @property
    def frame_len(self) -> int:
        return len(self.preamble_bits) + self.payload_len + self.check_len


@dataclass(frozen=True)
class Frame:
    preamble: np.ndarray = field(repr=False)
    payload: np.ndarray = field(repr=False)
    check: np.ndarray = field(repr=False)
    check_mode: str = PARITY

    @property
    def bits(self) -> np.ndarray:
        return np.concatenate([self.preamble, self.payload, self.check]).astype(np.uint8)


def parity_bit(bits) -> int:
    """Even parity: the XOR of all bits."""
    return int(np.bitwise_xor.reduce(as_bits(bits), initial=0))


def crc8(bits, polynomial: int = 0x07, init: int = 0x00) -> int:
    """CRC-8 over a bit sequence, MSB first, no reflection, no final XOR."""
    reg = init
    for b in as_bits(bits):
        top = ((reg >> 7) & 1) ^ int(b)
        reg = (reg << 1) & 0xFF
        if top:
            reg ^= polynomial
    return reg


def int_to_bits(value: int, width: int) -> np.ndarray:
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def bits_to_int(bits) -> int:
    out = 0
    for b in as_bits(bits):
        out = (out << 1) | int(b)
    return out


def compute_check(payload, config: FramingConfig) -> np.ndarray:
    if config.check_mode == PARITY:
        return np.array([parity_bit(payload)], dtype=np.uint8)
    return int_to_bits(crc8(payload, config.crc_polynomial), 8)


def build_frame(payload, config: FramingConfig = FramingConfig()) -> Frame:
    payload = as_bits(payload)
    if payload.size != config.payload_len:
        raise ValueError(f"payload must be {config.payload_len} bits, got {payload.size}")
    return Frame(
        preamble=np.array(config.preamble_bits, dtype=np.uint8),
        payload=payload,
        check=compute_check(payload, config),
        check_mode=config.check_mode,
    )


def frame(payload, config: FramingConfig = FramingConfig()) -> np.ndarray:
    """``preamble || payload || check`` as a flat bit array."""
    return build_frame(payload, config).bits


def deframe(bits, config: FramingConfig = FramingConfig()) -> tuple[np.ndarray, bool]:
    """Strip the preamble and verify the check bits.

    The payload comes back even when the check fails; the caller decides whether
    to drop or retry.
    """
    bits = as_bits(bits)
    if bits.size != config.frame_len:
        raise ValueError(f"expected {config.frame_len} bits, got {bits.size}")
    start = len(config.preamble_bits)
    payload = bits[start:start + config.payload_len]
    check = bits[start + config.payload_len:]
    return payload, bool(np.array_equal(check, compute_check(payload, config)))
