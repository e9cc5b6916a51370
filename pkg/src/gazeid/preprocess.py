"""Savitzky-Golay smoothing and forward-difference kinematics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import savgol_filter

from gazeid.data import GazeRecording, ScreenGeometry, angles_to_screen
from gazeid.errors import SeriesTooShort


@dataclass(frozen=True)
class SgConfig:
    poly_order: int = 6
    frame_len: int = 15

    def __post_init__(self):
        if self.frame_len % 2 != 1:
            raise ValueError(f"frame_len must be odd, got {self.frame_len}")
        if self.frame_len <= self.poly_order:
            raise ValueError("frame_len must exceed poly_order")
        if self.poly_order < 0:
            raise ValueError("poly_order must be non-negative")


@dataclass(frozen=True, eq=False)
class KinematicTrace:
    """Per-sample smoothed angles, screen positions and their derivatives.

    Angular quantities are in degrees, deg/s and deg/s^2; screen quantities in
    px, px/s and px/s^2. Every array has the recording's length.
    """

    t_ms: np.ndarray
    valid: np.ndarray
    rate_hz: float
    theta_x: np.ndarray
    theta_y: np.ndarray
    x: np.ndarray
    y: np.ndarray
    omega_x: np.ndarray
    omega_y: np.ndarray
    speed: np.ndarray
    accel: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    ax: np.ndarray
    ay: np.ndarray
    recording_id: str = ""

    def __len__(self):
        return len(self.t_ms)


def sg_smooth(series, cfg: SgConfig = SgConfig()) -> np.ndarray:
    """Smooth with a least-squares polynomial per frame.

    Edge samples are evaluated from the polynomial fitted to the first (or
    last) full frame rather than from a mirrored signal.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim != 1 or len(series) < cfg.frame_len:
        raise SeriesTooShort(f"need at least {cfg.frame_len} samples, got {len(series)}")
    return savgol_filter(series, cfg.frame_len, cfg.poly_order, mode="interp")


def differentiate(series, rate_hz: float) -> np.ndarray:
    """Forward difference scaled by the sampling rate; last value replicated."""
    series = np.asarray(series, dtype=float)
    if len(series) < 2:
        raise SeriesTooShort(f"need at least 2 samples, got {len(series)}")
    out = np.empty_like(series)
    out[:-1] = np.diff(series) * rate_hz
    out[-1] = out[-2]
    return out


def _fill_invalid(values, valid):
    """Linear interpolation across invalid or non-finite samples."""
    values = np.asarray(values, dtype=float)
    good = valid & np.isfinite(values)
    if good.all():
        return values
    if not good.any():
        return np.zeros_like(values)
    idx = np.arange(len(values))
    return np.interp(idx, idx[good], values[good])


def kinematics(rec: GazeRecording, geom: ScreenGeometry | None = None, cfg: SgConfig = SgConfig()) -> KinematicTrace:
    geom = geom or rec.geometry
    if len(rec) < cfg.frame_len:
        raise SeriesTooShort(f"recording {rec.key} has {len(rec)} samples, need at least {cfg.frame_len}")
    rate = rec.rate_hz
    tx = sg_smooth(_fill_invalid(rec.theta_x_deg, rec.valid), cfg)
    ty = sg_smooth(_fill_invalid(rec.theta_y_deg, rec.valid), cfg)
    omega_x = differentiate(tx, rate)
    omega_y = differentiate(ty, rate)
    alpha_x = differentiate(omega_x, rate)
    alpha_y = differentiate(omega_y, rate)
    x, y = angles_to_screen(tx, ty, geom)
    vx = differentiate(x, rate)
    vy = differentiate(y, rate)
    return KinematicTrace(
        t_ms=rec.t_ms,
        valid=rec.valid,
        rate_hz=rate,
        theta_x=tx,
        theta_y=ty,
        x=x,
        y=y,
        omega_x=omega_x,
        omega_y=omega_y,
        speed=np.hypot(omega_x, omega_y),
        accel=np.hypot(alpha_x, alpha_y),
        vx=vx,
        vy=vy,
        ax=differentiate(vx, rate),
        ay=differentiate(vy, rate),
        recording_id=rec.key,
    )
