import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uamflow.acoustics import (
    LEQ1H_OFFSET,
    LEQ24H_OFFSET,
    SILENCE,
    Metric,
    Mode,
    NoiseEvent,
    NpdCurve,
    Period,
    Position,
    ReceiverGeometry,
    aggregate,
    ground_attenuation,
    lateral_attenuation_adj,
    lateral_directivity_adj,
    load_npd_table,
    npd_level,
    period_of_hour,
    receiver_sel,
    refraction,
)

TABLE = load_npd_table()
L_CENTER, L_SIDE = TABLE.pair(Mode.LevelFlyover)

sels = st.floats(min_value=20.0, max_value=120.0, allow_nan=False)
periods = st.sampled_from(list(Period))


def test_table_has_six_curves():
    assert len(list(TABLE)) == 6
    assert {(c.mode, c.position) for c in TABLE} == {(m, p) for m in Mode for p in Position}


def test_npd_level_examples():
    assert npd_level(L_CENTER, 1000.0) == pytest.approx(74.14, abs=1e-9)
    log200 = math.log10(200.0)
    assert npd_level(L_CENTER, 200.0) == pytest.approx(88.09 + 3.21 * log200 - 2.62 * log200**2, abs=1e-12)
    assert npd_level(L_CENTER, 200.0) == pytest.approx(81.60, abs=5e-3)


def test_npd_clamps_outside_valid_range():
    assert npd_level(L_CENTER, 1.0) == npd_level(L_CENTER, 200.0)
    assert npd_level(L_CENTER, 50_000.0) == npd_level(L_CENTER, 20_000.0)
    with pytest.raises(ValueError):
        npd_level(L_CENTER, 0.0)
    with pytest.raises(ValueError):
        npd_level(L_CENTER, -5.0)


def test_npd_array_input():
    d = np.array([200.0, 1000.0, 10_000.0])
    np.testing.assert_allclose(npd_level(L_CENTER, d), [npd_level(L_CENTER, x) for x in d])


def test_ground_attenuation():
    assert ground_attenuation(0.0) == 0.0
    assert ground_attenuation(3500.0) == 10.86
    assert ground_attenuation(1000.0) == pytest.approx(11.83 * (1 - math.exp(-0.9)), abs=1e-12)
    assert ground_attenuation(1000.0) == pytest.approx(7.02, abs=5e-3)
    # the exponential branch is used at exactly 3000 ft
    assert ground_attenuation(3000.0) == pytest.approx(11.83 * (1 - math.exp(-2.7)))
    with pytest.raises(ValueError):
        ground_attenuation(-1.0)


def test_refraction():
    assert refraction(-10.0) == 10.86
    assert refraction(0.0) == 10.86
    assert refraction(60.0) == 0.0
    assert refraction(25.0) == pytest.approx(0.8437, abs=1e-4)
    with pytest.raises(ValueError):
        refraction(91.0)


def test_lateral_attenuation_examples():
    assert lateral_attenuation_adj(2000.0, 70.0) == 0.0
    assert lateral_attenuation_adj(0.0, 20.0) == 0.0
    assert lateral_attenuation_adj(3500.0, -5.0) == pytest.approx(10.86)


@given(st.floats(0.0, 1e5), st.floats(-90.0, 90.0))
def test_lateral_attenuation_bounded(l, beta):
    assert 0.0 <= lateral_attenuation_adj(l, beta) <= 10.86 + 1e-12


def test_lateral_directivity():
    diff = npd_level(L_CENTER, 1000.0) - npd_level(L_SIDE, 1000.0)
    assert npd_level(L_SIDE, 1000.0) == pytest.approx(69.28, abs=1e-9)
    assert lateral_directivity_adj(L_CENTER, L_SIDE, 1000.0, 90.0) == 0.0
    assert lateral_directivity_adj(L_CENTER, L_SIDE, 1000.0, -90.0) == 0.0
    assert lateral_directivity_adj(L_CENTER, L_SIDE, 1000.0, 45.0) == pytest.approx(diff)
    assert lateral_directivity_adj(L_CENTER, L_SIDE, 1000.0, 67.5) == pytest.approx(diff / 2)
    assert lateral_directivity_adj(L_CENTER, L_SIDE, 1000.0, 0.0) == pytest.approx(2 * diff)
    assert lateral_directivity_adj(L_CENTER, L_SIDE, 1000.0, 0.0, clamp_weight=True) == pytest.approx(diff)


def test_lateral_directivity_rejects_mixed_modes():
    d_center, _ = TABLE.pair(Mode.Departure)
    with pytest.raises(ValueError):
        lateral_directivity_adj(d_center, L_SIDE, 1000.0, 45.0)


def test_receiver_sel_examples():
    overhead = ReceiverGeometry(d=1000.0, l=0.0, beta=90.0)
    assert receiver_sel((L_CENTER, L_SIDE), overhead) == pytest.approx(74.14)
    # d=1000, l=1000, beta=0: 74.14 - 2 * (74.14 - 69.28) - 7.02
    g = ReceiverGeometry(d=1000.0, l=1000.0, beta=0.0)
    expected = 74.14 - 2 * (74.14 - 69.28) - 11.83 * (1 - math.exp(-0.9))
    assert receiver_sel((L_CENTER, L_SIDE), g) == pytest.approx(expected, abs=1e-9)
    assert receiver_sel((L_CENTER, L_SIDE), g) == pytest.approx(57.40, abs=5e-3)


def test_receiver_sel_far_saturated():
    g = ReceiverGeometry(d=3500.0, l=3500.0, beta=0.0)
    expected = npd_level(L_CENTER, 3500.0) - 2 * (npd_level(L_CENTER, 3500.0) - npd_level(L_SIDE, 3500.0)) - 10.86
    assert receiver_sel((L_CENTER, L_SIDE), g) == pytest.approx(expected)


@given(st.floats(1.0, 50_000.0))
def test_receiver_sel_overhead_equals_npd(d):
    g = ReceiverGeometry(d=d, l=0.0, beta=90.0)
    assert receiver_sel((L_CENTER, L_SIDE), g) == pytest.approx(npd_level(L_CENTER, d))


def test_geometry_validation():
    with pytest.raises(ValueError):
        ReceiverGeometry(d=100.0, l=200.0, beta=10.0)
    with pytest.raises(ValueError):
        ReceiverGeometry(d=100.0, l=-1.0, beta=10.0)
    g = ReceiverGeometry.from_offsets(1000.0, 1000.0)
    assert g.d == pytest.approx(math.sqrt(2) * 1000.0)
    assert g.beta == pytest.approx(45.0)
    assert g.d * math.sin(math.radians(g.beta)) == pytest.approx(1000.0)


def test_aggregate_examples():
    assert aggregate([80.0], Metric.Leq1h) == pytest.approx(44.44)
    assert aggregate([80.0] * 10, Metric.Leq1h) == pytest.approx(54.44)
    assert aggregate([NoiseEvent(80.0, Period.Night)], Metric.CNEL) == pytest.approx(40.63)
    assert aggregate([NoiseEvent(80.0, Period.Night)], Metric.DNL) == pytest.approx(40.63)
    assert aggregate([NoiseEvent(80.0, Period.Evening)], Metric.DNL) == pytest.approx(80.0 - 49.37)
    assert aggregate([NoiseEvent(80.0, Period.Evening)], Metric.CNEL) == pytest.approx(80.0 + 4.77 - 49.37)
    assert aggregate([80.0], Metric.Leq, T=3600.0) == pytest.approx(80.0 - 10 * math.log10(3600.0))


def test_aggregate_silence_and_errors():
    assert aggregate([], Metric.Leq1h) is SILENCE
    assert aggregate([], Metric.CNEL) is SILENCE
    with pytest.raises(ValueError):
        aggregate([80.0], Metric.Leq, T=0.0)
    with pytest.raises(ValueError):
        aggregate([math.inf])


@given(st.lists(sels, min_size=1, max_size=20), sels, st.integers(0, 19))
def test_aggregate_monotone(levels, extra, k):
    base = aggregate(levels)
    assert aggregate(levels + [extra]) > base
    bumped = list(levels)
    bumped[k % len(levels)] += 1.0
    assert aggregate(bumped) > base


@given(st.lists(sels, min_size=1, max_size=15), st.lists(sels, min_size=1, max_size=15))
def test_aggregate_energy_additivity(a, b):
    la, lb = aggregate(a, Metric.Leq, T=1.0), aggregate(b, Metric.Leq, T=1.0)
    union = aggregate(a + b, Metric.Leq, T=1.0)
    assert union == pytest.approx(10 * math.log10(10 ** (la / 10) + 10 ** (lb / 10)), abs=1e-9)


@given(st.lists(st.tuples(sels, periods), min_size=1, max_size=15))
def test_leq24h_offset(events):
    diff = aggregate(events, Metric.Leq1h) - aggregate(events, Metric.Leq24h)
    assert diff == pytest.approx(LEQ24H_OFFSET - LEQ1H_OFFSET, abs=1e-9)


@given(st.lists(st.tuples(sels, periods), min_size=1, max_size=15))
def test_cnel_at_least_dnl(events):
    assert aggregate(events, Metric.CNEL) >= aggregate(events, Metric.DNL) - 1e-12


def test_period_boundaries():
    assert period_of_hour(7.0) is Period.Day
    assert period_of_hour(18.99) is Period.Day
    assert period_of_hour(19.0) is Period.Evening
    assert period_of_hour(22.0) is Period.Night
    assert period_of_hour(3.0) is Period.Night
    assert period_of_hour(31.0) is Period.Day


def test_curve_table_from_file(tmp_path):
    path = tmp_path / "npd.csv"
    path.write_text("mode,position,a0,a1,a2\nLevelFlyover,Centerline,90,0,-1\nLevelFlyover,Side45,80,0,-1\n")
    table = load_npd_table(path)
    center, _ = table.pair("LevelFlyover")
    assert npd_level(center, 1000.0) == pytest.approx(81.0)
    assert isinstance(center, NpdCurve)
