import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from airviber.channel import ChannelParams, transmit
from airviber.core import SampleTrace
from airviber.framing import frame
from airviber.modem import (
    AskParams,
    DemodConfig,
    FskParams,
    StreamingDemodulator,
    demodulate,
    detect_enable,
    modulate_ask,
    modulate_fsk,
    stft_stream,
    vote_bits,
    window_count,
    window_decisions,
)

NOISELESS = ChannelParams(snr_db=float("inf"), quantization_step=None)
SLOW_FSK = FskParams(rpm0=1300, rpm1=2600, rpm_base=1950)


def tone_trace(freq, seconds=10.0, fs=500):
    t = np.arange(int(seconds * fs)) / fs
    s = np.zeros((t.size, 3))
    s[:, 2] = 9.81 + 0.5 * np.sin(2 * np.pi * freq * t)
    return SampleTrace(fs, s)


def naive_detect(decisions, spb, preamble, threshold=0.8):
    """Unweighted sliding agreement, written out window by window."""
    template = [b for b in preamble for _ in range(spb)]
    n, span = len(decisions), len(template)
    scores = {}
    for off in range(-(spb // 2), n - span + spb // 2 + 1):
        inside = [(decisions[off + j], template[j]) for j in range(span) if 0 <= off + j < n]
        scores[off] = sum(d == t for d, t in inside) / len(inside) if inside else 0.0
    hits = [o for o in sorted(scores) if scores[o] >= threshold]
    if not hits:
        return None
    window = [o for o in sorted(scores) if hits[0] <= o < hits[0] + spb]
    return max(window, key=lambda o: (scores[o], -o))


def test_fsk_schedule_for_two_bits():
    assert modulate_fsk([1, 0]).segments == ((0.5, 3260), (1.5, 3030), (0.5, 2600), (1.5, 3030))


def test_fsk_one_bit_is_two_segments():
    s = modulate_fsk([1])
    assert len(s) == 2 and s.total_duration == 2.0


def test_low_speed_pattern():
    s = modulate_fsk([1, 0] * 4, SLOW_FSK)
    assert s.rpms[::2].tolist() == [2600, 1300] * 4
    assert set(s.rpms[1::2]) == {1950}


def test_ask_schedules():
    assert modulate_ask([1]).segments == ((2.0, 2600),)
    assert modulate_ask([0, 1]).rpms.tolist() == [2000, 2600]
    assert modulate_ask([1, 1, 0]).total_duration == 6.0
    assert len(modulate_ask([1, 1, 1])) == 3


def test_empty_bits_raise():
    with pytest.raises(ValueError):
        modulate_fsk([])
    with pytest.raises(ValueError):
        modulate_ask([])


def test_param_validation():
    with pytest.raises(ValueError):
        FskParams(rpm0=3000, rpm1=3000)
    with pytest.raises(ValueError):
        FskParams(rpm_base=3260)
    with pytest.raises(ValueError):
        FskParams(state_duration=2.0)
    with pytest.raises(ValueError):
        AskParams(rpm0=1, rpm1=1)
    with pytest.raises(ValueError):
        DemodConfig(f0=50.0, f1=50.5)
    with pytest.raises(ValueError):
        DemodConfig(noverlap=256)
    with pytest.raises(ValueError):
        DemodConfig(fft_size=2048)
    with pytest.raises(ValueError):
        DemodConfig(f1=300)


def test_bit_rate_and_default_geometry():
    assert FskParams().bit_rate == 0.5
    cfg = DemodConfig()
    assert cfg.hop == 100 and cfg.samples_per_bit == 10
    assert cfg.bin_hz == 500 / 256
    assert (cfg.bin0, cfg.bin1) == (22, 28)


def test_pure_tone_lands_in_f0():
    cfg = DemodConfig(f0=50.0, f1=3260 / 60)
    amps = stft_stream(tone_trace(50.0), cfg)
    assert amps.shape[0] == window_count(5000, 256, 100)
    assert np.all(amps[:, 0] > 10 * amps[:, 1])


def test_zero_trace_gives_zero_amplitudes():
    amps = stft_stream(SampleTrace(500, np.zeros((2000, 3))), DemodConfig())
    assert amps.shape == (window_count(2000, 256, 100), 2) and np.all(amps == 0)


def test_short_trace_gives_no_windows():
    assert stft_stream(SampleTrace(500, np.zeros((255, 3))), DemodConfig()).shape == (0, 2)


def test_rate_mismatch_raises():
    with pytest.raises(ValueError):
        stft_stream(SampleTrace(400, np.zeros((500, 3))), DemodConfig())


@pytest.mark.parametrize("n", [256, 257, 355, 356, 1000, 12345])
def test_window_count_closed_form(n):
    assert window_count(n, 256, 100) == (n - 256) // 100 + 1
    assert window_count(255, 256, 100) == 0


def test_noiseless_37_random_bits(rng):
    bits = frame(rng.integers(0, 2, 32))
    res = demodulate(transmit(modulate_fsk(bits), params=NOISELESS))
    assert res.status == "ok"
    assert res.bits[:37].tolist() == bits.tolist()


def test_noise_only_is_no_carrier(rng):
    s = np.zeros((37 * 1000, 3))
    s[:, 2] = 9.81
    s += rng.normal(0, 0.05, s.shape)
    res = demodulate(SampleTrace(500, s))
    assert res.status == "no carrier" and res.bits.size == 0


def test_low_speed_alternating_decisions():
    bits = [1, 0] * 4
    cfg = DemodConfig.for_fsk(SLOW_FSK)
    assert round(cfg.f0, 2) == 21.67 and round(cfg.f1, 2) == 43.33
    res = demodulate(transmit(modulate_fsk(bits, SLOW_FSK), params=NOISELESS), cfg)
    assert res.bits.tolist() == bits
    # state-period windows alternate 1, 0, 1, ...
    spb = cfg.samples_per_bit
    firsts = [res.decisions[res.offset + k * spb + 1] for k in range(8)]
    assert firsts == bits


def test_detect_exact_preamble():
    d = np.repeat([1, 0, 1, 0], 10)
    assert detect_enable(d, 10) == 0


def test_detect_with_ten_percent_flips(rng):
    d = np.repeat([1, 0, 1, 0], 10)
    d[rng.choice(40, 4, replace=False)] ^= 1
    assert detect_enable(np.concatenate([d, rng.integers(0, 2, 50)]), 10) is not None


def test_detect_matches_naive_oracle(rng):
    for _ in range(30):
        d = rng.integers(0, 2, 300)
        d[100:140] = np.repeat([1, 0, 1, 0], 10)
        assert detect_enable(d, 10) == naive_detect(d.tolist(), 10, (1, 0, 1, 0))


def test_false_detection_rate_random_decisions():
    # without weights or carrier gate, chance alignments are common in long streams
    rng = np.random.default_rng(7)
    hits = [detect_enable(rng.integers(0, 2, 10_000), 10) is not None for _ in range(200)]
    rate = np.mean(hits)
    assert 0.35 < rate < 0.7


def test_carrier_gate_rejects_noise_traces():
    cfg = DemodConfig()
    for seed in range(20):
        rng = np.random.default_rng(seed)
        s = rng.normal(0, 0.01, (37 * 1000, 3))
        s[:, 2] += 9.81
        assert demodulate(SampleTrace(500, s), cfg).status == "no carrier"


def test_tie_breaks_to_zero_at_window_and_one_at_vote():
    d, w = window_decisions(np.array([[1.0, 1.0], [1.0, 2.0]]))
    assert d.tolist() == [0, 1] and w.tolist() == [0.0, 1.0]
    assert vote_bits([1, 1, 0, 0], 4).tolist() == [1]


def test_streaming_matches_batch(rng):
    bits = np.concatenate([frame(rng.integers(0, 2, 32)) for _ in range(2)])
    trace = transmit(modulate_fsk(bits), params=ChannelParams(snr_db=25, noise_seed=3))
    batch = demodulate(trace)
    sd = StreamingDemodulator()
    out = []
    for chunk in np.array_split(trace.samples, 97):
        out.extend(sd.push(chunk))
    assert sd.offset == batch.offset
    assert out == batch.bits[:len(out)].tolist()
    assert len(out) >= bits.size - 1


@given(st.floats(0, 10), st.floats(0, 10), st.floats(0, 10))
def test_decision_monotone_in_f1(a0, a1, extra):
    before, _ = window_decisions(np.array([[a0, a1]]))
    after, _ = window_decisions(np.array([[a0, a1 + extra]]))
    assert after[0] >= before[0]


@given(st.lists(st.integers(0, 1), min_size=1, max_size=200), st.sampled_from([0.5, 0.25, 1.0]))
def test_schedule_duration_exact(bits, state):
    p = FskParams(state_duration=state)
    assert modulate_fsk(bits, p).total_duration == len(bits) * p.bit_duration


@settings(max_examples=8)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=512))
def test_noiseless_round_trip(bits):
    n = -(-len(bits) // 32) * 32
    payload = np.array(bits + [0] * (n - len(bits)))
    framed = np.concatenate([frame(payload[i:i + 32]) for i in range(0, n, 32)])
    res = demodulate(transmit(modulate_fsk(framed), params=NOISELESS), n_bits=framed.size)
    assert res.bits.tolist() == framed.tolist()
