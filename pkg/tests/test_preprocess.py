import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gazeid.data import GazeRecording, ScreenGeometry
from gazeid.errors import SeriesTooShort
from gazeid.preprocess import SgConfig, differentiate, kinematics, sg_smooth
from oracles import windowed_lsq


def test_cubic_reproduced_at_interior():
    t = np.arange(50) / 250.0
    p = t ** 3
    out = sg_smooth(p)
    assert np.max(np.abs(out[7:-7] - p[7:-7])) <= 1e-9


def test_constant_series_unchanged():
    out = sg_smooth(np.full(30, 4.2))
    assert np.max(np.abs(out - 4.2)) <= 1e-9


def test_step_matches_windowed_regression():
    step = np.r_[np.zeros(20), np.ones(20)]
    assert np.max(np.abs(sg_smooth(step) - windowed_lsq(step))) <= 1e-9


def test_random_series_matches_windowed_regression(rng):
    x = rng.normal(size=60)
    assert np.max(np.abs(sg_smooth(x) - windowed_lsq(x))) <= 1e-9


def test_other_config_matches_windowed_regression(rng):
    x = rng.normal(size=30)
    cfg = SgConfig(poly_order=2, frame_len=7)
    assert np.max(np.abs(sg_smooth(x, cfg) - windowed_lsq(x, 7, 2))) <= 1e-9


def test_too_short():
    with pytest.raises(SeriesTooShort):
        sg_smooth(np.zeros(14))


@pytest.mark.parametrize("kwargs", [dict(frame_len=14), dict(frame_len=5, poly_order=6)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SgConfig(**kwargs)


@settings(max_examples=50, deadline=None)
@given(
    a=st.floats(-10, 10),
    b=st.floats(-10, 10),
    x=arrays(float, 40, elements=st.floats(-100, 100)),
    y=arrays(float, 40, elements=st.floats(-100, 100)),
)
def test_linearity(a, b, x, y):
    lhs = sg_smooth(a * x + b * y)
    rhs = a * sg_smooth(x) + b * sg_smooth(y)
    assert np.max(np.abs(lhs - rhs)) <= 1e-9 * max(1.0, np.max(np.abs(a * x)) + np.max(np.abs(b * y)))


@pytest.mark.parametrize(
    "series, rate, expected",
    [
        ([0, 1, 2, 3], 1.0, [1, 1, 1, 1]),
        ([0, 0, 0], 250.0, [0, 0, 0]),
        ([0, 2, 1], 250.0, [500, -250, -250]),
    ],
)
def test_differentiate_examples(series, rate, expected):
    assert differentiate(series, rate).tolist() == expected


def test_differentiate_too_short():
    with pytest.raises(SeriesTooShort):
        differentiate([1.0], 250)


@settings(max_examples=30, deadline=None)
@given(c=st.floats(-1e3, 1e3), n=st.integers(2, 50))
def test_differentiate_constant_is_zero(c, n):
    assert not np.any(differentiate(np.full(n, c), 250.0))


def _recording(theta_x, theta_y=None, rate=250.0, valid=None):
    n = len(theta_x)
    theta_y = np.zeros(n) if theta_y is None else theta_y
    return GazeRecording(
        "S1", "1", "SYNTH", rate, np.arange(n) * 1000.0 / rate, theta_x, theta_y,
        np.zeros(n), np.zeros(n), np.ones(n, bool) if valid is None else valid,
    )


def test_stationary_recording_has_zero_speed():
    tr = kinematics(_recording(np.full(100, 3.0), np.full(100, -2.0)))
    assert np.max(tr.speed) <= 1e-6


def test_linear_ramp_speed():
    t = np.arange(200) / 250.0
    tr = kinematics(_recording(10.0 * t, np.full(200, 1.0)))
    assert np.max(np.abs(tr.speed[7:-8] - 10.0)) <= 1e-3


def test_recording_shorter_than_frame():
    with pytest.raises(SeriesTooShort):
        kinematics(_recording(np.zeros(14)))


def test_trace_lengths_and_screen_conversion():
    rec = _recording(np.linspace(-5, 5, 60), np.linspace(2, -2, 60))
    geom = ScreenGeometry()
    tr = kinematics(rec, geom)
    for name in ("theta_x", "x", "y", "speed", "accel", "vx", "vy", "ax", "ay"):
        assert len(getattr(tr, name)) == 60
    assert np.all(tr.speed >= 0) and np.all(tr.accel >= 0)
    assert tr.vx[-1] == tr.vx[-2]


def test_invalid_nan_samples_are_bridged():
    theta = np.linspace(0, 1, 40)
    theta[10] = np.nan
    valid = np.ones(40, bool)
    valid[10] = False
    tr = kinematics(_recording(theta, valid=valid))
    assert np.all(np.isfinite(tr.speed))
    assert np.max(np.abs(tr.speed[7:-8] - 250.0 / 39)) < 1e-6


@settings(max_examples=30, deadline=None)
@given(arrays(float, 40, elements=st.floats(-30, 30)))
def test_speed_non_negative(theta):
    tr = kinematics(_recording(theta, theta[::-1].copy()))
    assert np.all(tr.speed >= 0)
