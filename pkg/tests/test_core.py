import io

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from airviber.core import (
    PHONE_QUANTIZATION_STEP,
    RpmSchedule,
    SampleTrace,
    TraceFormatError,
    as_bits,
    format_schedule,
    format_trace,
    read_schedule,
    read_trace,
    trace_from_text,
    write_trace,
)


def test_single_sample_trace_is_header_plus_one_row():
    text = format_trace(SampleTrace(500, [[0.0, 0.0, 9.81]]))
    assert text == "# air-viber-trace v1 sample_rate_hz=500 quantization_step=0\n0,0,9.81\n"


def test_trace_round_trip_5000_samples(rng, tmp_path):
    trace = SampleTrace(500, rng.normal(0, 1, (5000, 3)) + [0, 0, 9.81])
    path = tmp_path / "t.csv"
    write_trace(trace, path)
    back = read_trace(path)
    assert len(back) == 5000 and back.sample_rate == 500
    # 9 significant digits bound the relative error by 5e-9
    np.testing.assert_allclose(back.samples, trace.samples, rtol=5e-9, atol=0)


def test_quantized_trace_header_and_rows_are_multiples(rng):
    step = PHONE_QUANTIZATION_STEP
    samples = np.round(rng.normal(0, 0.5, (200, 3)) / step) * step
    trace = SampleTrace(500, samples, step)
    text = format_trace(trace)
    assert text.splitlines()[0].endswith(f"quantization_step={step!r}")
    back = trace_from_text(text)
    k = back.samples / step
    np.testing.assert_allclose(k, np.round(k), rtol=0, atol=1e-9)
    assert back == trace


def test_format_has_lf_and_no_trailing_whitespace(rng):
    text = format_trace(SampleTrace(500, rng.normal(size=(10, 3))))
    assert "\r" not in text
    assert all(line == line.rstrip() for line in text.split("\n"))


def test_read_two_rows():
    t = trace_from_text("# air-viber-trace v1 sample_rate_hz=500 quantization_step=0\n1,2,3\n4,5,6\n")
    assert len(t) == 2
    assert t.samples[1].tolist() == [4, 5, 6]


@pytest.mark.parametrize("header", [
    "# air-viber-trace v1 sample_rate_hz=0 quantization_step=0",
    "# air-viber-trace v2 sample_rate_hz=500 quantization_step=0",
    "# air-viber-trace v1 quantization_step=0",
    "ax,ay,az",
])
def test_bad_header_is_format_error_on_line_1(header):
    with pytest.raises(TraceFormatError) as exc:
        trace_from_text(header + "\n1,2,3\n")
    assert exc.value.line == 1


def test_bad_row_reports_its_line():
    with pytest.raises(TraceFormatError) as exc:
        trace_from_text("# air-viber-trace v1 sample_rate_hz=500 quantization_step=0\n1,2,3\n1,2\n")
    assert exc.value.line == 3


def test_ten_second_trace_reads_back_5000_samples():
    trace = SampleTrace(500, np.tile([0.0, 0.0, 9.81], (5000, 1)))
    buf = io.StringIO()
    write_trace(trace, buf)
    buf.seek(0)
    assert len(read_trace(buf)) == 5000


def test_trace_invariants():
    with pytest.raises(ValueError):
        SampleTrace(0, [[0, 0, 0]])
    with pytest.raises(ValueError):
        SampleTrace(500, np.zeros((0, 3)))
    with pytest.raises(ValueError):
        SampleTrace(500, [[0.001, 0, 0]], PHONE_QUANTIZATION_STEP)


def test_schedule_invariants_and_io():
    with pytest.raises(ValueError):
        RpmSchedule(((0.0, 1000),))
    with pytest.raises(ValueError):
        RpmSchedule(((1.0, 4000),))
    s = RpmSchedule(((0.5, 3260), (1.5, 3030)))
    text = format_schedule(s, pad_bits=3)
    assert text.splitlines()[0] == "# air-viber-schedule v1 rpm_max=3260 pad_bits=3"
    back, pad = read_schedule(io.StringIO(text))
    assert back == s and pad == 3


def test_as_bits_rejects_non_binary():
    assert as_bits("1010").tolist() == [1, 0, 1, 0]
    with pytest.raises(ValueError):
        as_bits([0, 2])


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@given(hnp.arrays(float, st.tuples(st.integers(1, 40), st.just(3)), elements=finite),
       st.integers(1, 10_000))
def test_round_trip_property(samples, rate):
    trace = SampleTrace(rate, samples)
    back = trace_from_text(format_trace(trace))
    assert back.sample_rate == rate and len(back) == len(trace)
    np.testing.assert_allclose(back.samples, samples, rtol=5e-9, atol=1e-300)


@given(st.lists(st.tuples(st.floats(1e-3, 100), st.floats(0, 3260)), min_size=1, max_size=20),
       st.floats(1e-3, 100), st.floats(0, 3260))
def test_append_adds_exactly_its_duration(segs, d, rpm):
    s = RpmSchedule(tuple(segs))
    # exact up to the one rounding of the float sum itself
    assert s.append(d, rpm).total_duration == pytest.approx(s.total_duration + d, rel=1e-15, abs=0)
    assert s.append(d, rpm).total_duration - s.total_duration == pytest.approx(d, rel=1e-12)
