import numpy as np
import pytest

from gazeid.preprocess import KinematicTrace
from gazeid.segment import Segment

ACCEPTANCE_LINES = []


def make_trace(speed=None, *, x=None, y=None, rate_hz=250.0, valid=None, **columns):
    """KinematicTrace with explicit columns; unspecified ones are zeros."""
    n = len(next(v for v in (speed, x, y) if v is not None))
    zeros = np.zeros(n)

    def col(v):
        return zeros.copy() if v is None else np.asarray(v, dtype=float)

    return KinematicTrace(
        t_ms=np.arange(n) * 1000.0 / rate_hz,
        valid=np.ones(n, dtype=bool) if valid is None else np.asarray(valid, dtype=bool),
        rate_hz=rate_hz,
        theta_x=col(columns.get("theta_x")),
        theta_y=col(columns.get("theta_y")),
        x=col(x),
        y=col(y),
        omega_x=col(columns.get("omega_x")),
        omega_y=col(columns.get("omega_y")),
        speed=col(speed),
        accel=col(columns.get("accel")),
        vx=col(columns.get("vx")),
        vy=col(columns.get("vy")),
        ax=col(columns.get("ax")),
        ay=col(columns.get("ay")),
    )


def make_segment(kind, trace, duration_ms=None, start=0, end=None):
    end = len(trace) - 1 if end is None else end
    if duration_ms is None:
        duration_ms = (end - start + 1) * 1000.0 / trace.rate_hz
    return Segment(kind, start, end, duration_ms, trace)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
