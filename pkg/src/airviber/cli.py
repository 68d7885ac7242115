"""Command-line front end: ``air-viber <command> ...``.

Every subcommand accepts ``--config FILE`` (JSON object keyed by option
names, e.g. ``{"snr_db": 20, "seed": 3}``); explicit flags win over it.

Exit status: 0 ok, 1 frame check failure, 2 usage or config error, 3 no carrier.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import channel as ch
from .core import read_schedule, read_trace, write_schedule, write_trace, bits_to_str, as_bits
from .framing import FramingConfig
from .harness import (
    build_schedule,
    decode_text,
    encode_bytes,
    encode_text,
    format_psd,
    format_spectrogram,
    psd,
    receive,
    run_ber,
    spectrogram,
)
from .modem import AskParams, DemodConfig, FskParams
from .physics import INCH_M, OUNCE_KG, FanModel, centrifugal_force

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_NO_CARRIER = 0, 1, 2, 3


class CliError(Exception):
    pass


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def _add_framing(p):
    g = p.add_argument_group("framing")
    g.add_argument("--preamble", default="1010")
    g.add_argument("--payload-len", type=int, default=32)
    g.add_argument("--check", choices=["parity", "crc8"], default="parity")
    g.add_argument("--crc-poly", type=lambda s: int(s, 0), default=0x07)


def _add_fsk(p):
    g = p.add_argument_group("FSK")
    g.add_argument("--rpm0", type=float, default=2600)
    g.add_argument("--rpm1", type=float, default=3260)
    g.add_argument("--rpm-base", type=float, default=3030)
    g.add_argument("--state-duration", type=float, default=0.5)
    g.add_argument("--bit-duration", type=float, default=2.0)


def _add_fan(p):
    g = p.add_argument_group("fan")
    g.add_argument("--rpm-max", type=float, default=3260)
    g.add_argument("--spinup-tau", type=float, default=0.25)
    g.add_argument("--amplitude-gain", type=float, default=2e-4)


def _add_demod(p):
    g = p.add_argument_group("receiver")
    g.add_argument("--sample-rate", type=int, default=500)
    g.add_argument("--fft-size", type=int, default=256)
    g.add_argument("--noverlap", type=int, default=156)
    g.add_argument("--highpass-hz", type=float, default=5.0)
    g.add_argument("--window", default="hann")
    g.add_argument("--vote", choices=["weighted", "majority"], default="weighted")
    g.add_argument("--enable-threshold", type=float, default=0.8)
    g.add_argument("--carrier-threshold", type=float, default=1.2)


def _framing(a) -> FramingConfig:
    return FramingConfig(tuple(as_bits(a.preamble)), a.payload_len, a.check, a.crc_poly)


def _fsk(a) -> FskParams:
    return FskParams(a.rpm0, a.rpm1, a.rpm_base, a.state_duration, a.bit_duration)


def _fan(a) -> FanModel:
    return FanModel(rpm_max=a.rpm_max, spinup_tau=a.spinup_tau, amplitude_gain=a.amplitude_gain)


def _demod(a) -> DemodConfig:
    fsk = _fsk(a)
    return DemodConfig(
        sample_rate=a.sample_rate, fft_size=a.fft_size, noverlap=a.noverlap,
        bit_time=fsk.bit_duration, f0=fsk.f0, f1=fsk.f1, highpass_hz=a.highpass_hz,
        window=a.window, vote=a.vote, enable_threshold=a.enable_threshold,
        carrier_threshold=a.carrier_threshold,
    )


def _out(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


# -- commands -------------------------------------------------------------------

def cmd_transmit(a) -> int:
    if a.text is not None:
        bits = encode_text(a.text, a.char_bits)
    elif a.bits is not None:
        bits = as_bits(a.bits)
    elif a.data_file is not None:
        with open(a.data_file, "rb") as fh:
            bits = encode_bytes(fh.read())
    else:
        raise CliError("give one of --text, --bits or --data-file")
    if bits.size == 0:
        raise CliError("empty input")
    schedule, pad = build_schedule(
        bits, a.mod, _fsk(a), AskParams(a.ask_rpm0, a.ask_rpm1, a.bit_duration),
        _framing(a), a.rpm_max,
    )
    write_schedule(schedule, a.output if a.output != "-" else sys.stdout, pad)
    print(f"payload_bits={bits.size} pad_bits={pad} segments={len(schedule)} "
          f"duration_s={schedule.total_duration:g}", file=sys.stderr)
    return EXIT_OK


def _channel_params(a) -> ch.ChannelParams:
    params = ch.ChannelParams(
        resonance_hz=a.resonance_hz, resonance_gain=a.resonance_gain,
        resonance_bandwidth=a.resonance_bandwidth, noise_seed=a.seed,
        quantization_step=None if a.no_quantize else a.quantization_step,
        sample_rate=a.sample_rate,
    )
    if a.location is not None:
        table = ch.load_locations(a.locations_file)
        if a.location not in table:
            raise CliError(f"unknown location {a.location!r}; known: {', '.join(table)}")
        return dataclasses.replace(params, snr_db=table[a.location].snr_db)
    snr = float("inf") if a.snr_db in ("inf", "none") else float(a.snr_db)
    return dataclasses.replace(params, snr_db=snr)


def cmd_simulate(a) -> int:
    schedule, _ = read_schedule(a.schedule)
    trace = ch.transmit(schedule, _fan(a), _channel_params(a))
    write_trace(trace, a.output if a.output != "-" else sys.stdout)
    return EXIT_OK


def cmd_receive(a) -> int:
    trace = read_trace(a.trace)
    framing = _framing(a)
    frames = receive(trace, _demod(a), framing)
    if not frames:
        print("status=no-carrier")
        return EXIT_NO_CARRIER
    payload = []
    failed = False
    for i, f in enumerate(frames):
        state = "ok" if f.check_ok else ("partial" if not f.complete else "check-failed")
        failed |= not f.check_ok
        print(f"frame={i} offset={f.offset} status={state} payload={bits_to_str(f.payload)}")
        payload.extend(f.payload.tolist())
    bits = np.array(payload, dtype=np.uint8)
    if a.pad_bits and bits.size >= a.pad_bits:
        bits = bits[:bits.size - a.pad_bits]
    if a.char_bits:
        print(f"text={decode_text(bits, a.char_bits)!r}")
    print(f"bits={bits_to_str(bits)}")
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def cmd_ber(a) -> int:
    if a.trials < 1:
        raise CliError("trials must be >= 1")
    locations = a.locations.split(",") if a.locations else None
    snrs = _floats(a.snr) if a.snr else None
    jammer = None
    if a.jam_threshold is not None:
        jammer = {"threshold": a.jam_threshold, "duration": a.jam_duration,
                  "interval": a.jam_interval, "seed": a.seed}
    fsk = _fsk(a)
    try:
        sweep = run_ber(
            n_bits=a.n_bits, trials=a.trials, snrs=snrs, locations=locations, seed=a.seed,
            fsk=dataclasses.asdict(fsk), framing=dataclasses.asdict(_framing(a)),
            fan=dataclasses.asdict(_fan(a)),
            channel={"resonance_hz": a.resonance_hz, "resonance_gain": a.resonance_gain,
                     "resonance_bandwidth": a.resonance_bandwidth,
                     "quantization_step": None if a.no_quantize else a.quantization_step,
                     "sample_rate": a.sample_rate},
            demod={k: v for k, v in dataclasses.asdict(_demod(a)).items()},
            jammer=jammer, locations_file=a.locations_file,
        )
    except KeyError as exc:
        raise CliError(str(exc.args[0])) from None
    _out(a.output, sweep.to_text())
    return EXIT_OK


def cmd_spectrogram(a) -> int:
    trace = read_trace(a.trace)
    try:
        t, f, m = spectrogram(trace, a.fft_size, a.noverlap)
        spec = psd(trace, a.fft_size)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    _out(a.output, format_spectrogram(t, f, m))
    if a.psd:
        _out(a.psd, format_psd(spec))
    return EXIT_OK


def cmd_force(a) -> int:
    mass = a.mass * OUNCE_KG if a.oz else a.mass
    radius = a.radius * INCH_M if a.inches else a.radius
    try:
        force = centrifugal_force(mass, radius, a.rpm)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    print(f"{force:.9g}")
    return EXIT_OK


def cmd_jam(a) -> int:
    schedule, pad = read_schedule(a.schedule)
    jammed = ch.apply_jammer(schedule, ch.JammerParams(a.threshold, a.duration, a.interval, a.seed, a.phase))
    write_schedule(jammed, a.output if a.output != "-" else sys.stdout, pad)
    return EXIT_OK


def _add_channel(p):
    g = p.add_argument_group("channel")
    g.add_argument("--snr-db", default="45.02", help="target SNR in dB, or 'inf' for no noise")
    g.add_argument("--location", help="use the SNR of a named location profile")
    g.add_argument("--locations-file")
    g.add_argument("--resonance-hz", type=float, default=45.0)
    g.add_argument("--resonance-gain", type=float, default=0.0)
    g.add_argument("--resonance-bandwidth", type=float, default=5.0)
    g.add_argument("--quantization-step", type=float, default=ch.PHONE_QUANTIZATION_STEP)
    g.add_argument("--no-quantize", action="store_true")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="air-viber", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)
    commands = {}

    def sub(name, func, help):
        p = subs.add_parser(name, help=help)
        p.add_argument("--config", help="JSON file with option defaults")
        p.set_defaults(func=func)
        commands[name] = p
        return p

    p = sub("transmit", cmd_transmit, "frame and modulate data into a schedule file")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--text")
    src.add_argument("--bits")
    src.add_argument("--data-file")
    p.add_argument("--char-bits", type=int, choices=[7, 8], default=7)
    p.add_argument("--mod", choices=["fsk", "ask"], default="fsk")
    p.add_argument("--ask-rpm0", type=float, default=2000)
    p.add_argument("--ask-rpm1", type=float, default=2600)
    p.add_argument("-o", "--output", default="-")
    _add_fsk(p)
    _add_framing(p)
    p.add_argument("--rpm-max", type=float, default=3260)

    p = sub("simulate", cmd_simulate, "run a schedule through the simulated channel")
    p.add_argument("schedule")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sample-rate", type=int, default=500)
    _add_channel(p)
    _add_fan(p)

    p = sub("receive", cmd_receive, "demodulate and deframe a trace file")
    p.add_argument("trace")
    p.add_argument("--char-bits", type=int, choices=[0, 7, 8], default=7,
                   help="decode payload as text with this many bits per char (0: off)")
    p.add_argument("--pad-bits", type=int, default=0)
    _add_fsk(p)
    _add_framing(p)
    _add_demod(p)

    p = sub("ber", cmd_ber, "bit error rate sweep over SNRs or locations")
    p.add_argument("--n-bits", type=int, default=32)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--snr", help="comma-separated SNRs in dB")
    p.add_argument("--locations", help="comma-separated location labels")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jam-threshold", type=float)
    p.add_argument("--jam-duration", type=float, default=1.0)
    p.add_argument("--jam-interval", type=float, default=1.0)
    p.add_argument("-o", "--output", default="-")
    _add_fsk(p)
    _add_framing(p)
    _add_fan(p)
    _add_demod(p)
    _add_channel(p)

    p = sub("spectrogram", cmd_spectrogram, "STFT matrix and Welch PSD as CSV")
    p.add_argument("trace")
    p.add_argument("--fft-size", type=int, default=256)
    p.add_argument("--noverlap", type=int, default=156)
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--psd")

    p = sub("force", cmd_force, "centrifugal force of a rotating unbalance")
    p.add_argument("--mass", type=float, required=True, help="kg (or ounces with --oz)")
    p.add_argument("--radius", type=float, required=True, help="m (or inches with --in)")
    p.add_argument("--rpm", type=float, required=True)
    p.add_argument("--oz", action="store_true")
    p.add_argument("--in", dest="inches", action="store_true")

    p = sub("jam", cmd_jam, "overlay random jamming on a schedule file")
    p.add_argument("schedule")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--threshold", type=float, default=300)
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--interval", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--phase", type=float)

    return parser, commands


def parse_args(argv=None) -> argparse.Namespace:
    parser, commands = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
        sub = commands[args.command]
        known = {a.dest for a in sub._actions}
        unknown = set(cfg) - known
        if unknown:
            sub.error(f"unknown config keys: {', '.join(sorted(unknown))}")
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    args = parse_args(argv)
    try:
        return args.func(args)
    except (CliError, KeyError) as exc:
        print(f"air-viber {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"air-viber {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
