"""Fan-vibration covert channel: modem, framing and a simulated desk channel."""

from .channel import (
    ChannelParams,
    JammerParams,
    LocationProfile,
    apply_jammer,
    load_locations,
    measure_snr,
    transmit,
)
from .core import RpmSchedule, SampleTrace, Spectrum, read_schedule, read_trace, write_schedule, write_trace
from .framing import FramingConfig, crc8, deframe, frame, parity_bit
from .harness import BerReport, build_schedule, decode_text, encode_text, receive, run_ber, spectrogram
from .modem import (
    AskParams,
    DemodConfig,
    FskParams,
    StreamingDemodulator,
    demodulate,
    detect_enable,
    modulate_ask,
    modulate_fsk,
    stft_stream,
)
from .physics import FanModel, centrifugal_force, rpm_response, rpm_to_hz, synthesize_vibration

__version__ = "0.1.0"
