import numpy as np
import pytest
from hypothesis import given, strategies as st

from airviber.channel import (
    ChannelParams,
    JammerParams,
    apply_jammer,
    load_locations,
    measure_snr,
    resonance_gain,
    transmit,
)
from airviber.core import PHONE_QUANTIZATION_STEP, RpmSchedule, SampleTrace
from airviber.framing import frame
from airviber.modem import AskParams, demodulate, modulate_ask, modulate_fsk
from airviber.physics import FanModel

NOISELESS = ChannelParams(snr_db=float("inf"), quantization_step=None)


def steady(rpm, seconds=60.0):
    return RpmSchedule(((seconds, rpm),))


def test_location_zero_snr_calibrates():
    trace = transmit(steady(2580), params=ChannelParams(snr_db=45.02, noise_seed=1))
    assert measure_snr(trace, 43.0) == pytest.approx(45.02, abs=1.5)


@pytest.mark.parametrize("seed", range(3))
def test_calibration_at_20db(seed):
    trace = transmit(steady(2580), params=ChannelParams(snr_db=20, noise_seed=seed))
    assert measure_snr(trace, 43.0) == pytest.approx(20, abs=1.5)


def test_pure_tone_snr_is_large_and_unclamped():
    snr = measure_snr(transmit(steady(2580, 20), params=NOISELESS), 43.0)
    assert snr > 60 and np.isfinite(snr)


def test_white_noise_snr_near_zero():
    rng = np.random.default_rng(3)
    trace = SampleTrace(500, rng.normal(0, 1, (30_000, 3)) + [0, 0, 9.81])
    for f in (15.0, 30.0, 43.0, 55.0):
        assert measure_snr(trace, f) == pytest.approx(0, abs=2)


def test_measure_snr_errors():
    trace = transmit(steady(2580, 20), params=NOISELESS)
    with pytest.raises(ValueError):
        measure_snr(trace, 80.0)
    with pytest.raises(ValueError):
        measure_snr(transmit(steady(2580, 2), params=NOISELESS), 43.0)


def test_resonance_neutral_when_gain_zero():
    f = np.linspace(0, 250, 1001)
    assert np.all(resonance_gain(f, ChannelParams(resonance_gain=0)) == 1)
    g = resonance_gain(f, ChannelParams(resonance_gain=3, resonance_hz=45, resonance_bandwidth=5))
    assert f[np.argmax(g)] == 45 and g.max() == 4


def test_ask_ratio_follows_square_law():
    trace = transmit(modulate_ask([0, 1], AskParams(bit_duration=10)), FanModel(spinup_tau=0), NOISELESS)
    z = trace.samples[:, 2] - 9.81
    a0, a1 = np.abs(z[:5000]).max(), np.abs(z[5000:]).max()
    assert a1 / a0 == pytest.approx((2600 / 2000) ** 2, rel=0.01)


def test_resonance_boosts_ask_bit_near_resonance():
    params = ChannelParams(snr_db=float("inf"), quantization_step=None,
                           resonance_gain=4, resonance_hz=2600 / 60)
    trace = transmit(modulate_ask([0, 1], AskParams(bit_duration=10)), FanModel(spinup_tau=0), params)
    z = trace.samples[:, 2] - 9.81
    # Lorentzian gain 5 on resonance, 1 + 4/(1 + 2**2) = 1.8 ten hertz away
    expected = (2600 / 2000) ** 2 * 5 / 1.8
    assert np.abs(z[5000:]).max() / np.abs(z[:5000]).max() == pytest.approx(expected, rel=0.01)


def test_noiseless_frame_decodes(rng):
    bits = frame(rng.integers(0, 2, 32))
    assert demodulate(transmit(modulate_fsk(bits), params=NOISELESS)).bits[:37].tolist() == bits.tolist()


def test_determinism_and_seed_sensitivity():
    s = modulate_fsk([1, 0, 1])
    a = transmit(s, params=ChannelParams(snr_db=10, noise_seed=5))
    b = transmit(s, params=ChannelParams(snr_db=10, noise_seed=5))
    c = transmit(s, params=ChannelParams(snr_db=10, noise_seed=6))
    assert np.array_equal(a.samples, b.samples) and not np.array_equal(a.samples, c.samples)


def test_quantized_output():
    t = transmit(modulate_fsk([1, 0]), params=ChannelParams(snr_db=10))
    k = t.samples / PHONE_QUANTIZATION_STEP
    np.testing.assert_allclose(k, np.round(k), atol=1e-9)
    assert t.quantization_step == PHONE_QUANTIZATION_STEP


def test_jammer_threshold_zero_is_identity():
    s = modulate_fsk([1, 0, 1, 1])
    assert apply_jammer(s, JammerParams(threshold=0)) == s


def test_jammer_stays_in_range_and_moves_speeds():
    s = modulate_fsk([1, 0] * 10)
    j = apply_jammer(s, JammerParams(threshold=300, seed=2))
    assert j.rpms.min() >= 0 and j.rpms.max() <= s.rpm_max
    t = np.linspace(0, s.total_duration, 4001)[:-1]
    moved = np.abs(j.commanded(t) - s.commanded(t)) > 0
    assert 0.2 < moved.mean() < 0.6


def test_jammer_fixed_phase_duty_cycle():
    s = RpmSchedule(((10.0, 2000),))
    j = apply_jammer(s, JammerParams(threshold=300, duration=1, interval=1, phase=0))
    assert j.durations.tolist() == [1.0] * 10
    assert np.all(j.rpms[1::2] == 2000) and np.all(np.abs(j.rpms[::2] - 2000) <= 300)


@given(st.lists(st.integers(0, 1), min_size=1, max_size=40), st.integers(0, 2**32 - 1),
       st.floats(1, 1000), st.floats(0.1, 3), st.floats(0.1, 3))
def test_jammer_preserves_duration(bits, seed, thr, dur, gap):
    s = modulate_fsk(bits)
    j = apply_jammer(s, JammerParams(thr, dur, gap, seed))
    assert j.total_duration == pytest.approx(s.total_duration, rel=1e-12)


def test_default_locations():
    table = load_locations()
    assert [table[str(i)].snr_db for i in range(9)] == [45.02, 21.68, 29.12, 16.81, 22.1, 11.38, 21.43, 0, 7.88]
    assert table["cpu"].snr_db == 15.15


def test_duplicate_location_labels_rejected():
    with pytest.raises(ValueError):
        load_locations("label,snr_db\na,1\na,2\n")


def test_channel_param_validation():
    with pytest.raises(ValueError):
        ChannelParams(resonance_bandwidth=0)
    with pytest.raises(ValueError):
        JammerParams(duration=0)
    with pytest.raises(ValueError):
        JammerParams(threshold=-1)
