"""Gaze recordings, screen geometry and the recording CSV format."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from gazeid.errors import (
    AngleOutOfRange,
    InvalidRecording,
    NonMonotonicTimestamps,
    ParseError,
)

CSV_HEADER = ("t_ms", "valid", "theta_x_deg", "theta_y_deg", "stim_x_deg", "stim_y_deg")


class StimulusKind(str, enum.Enum):
    RAN = "RAN"
    TEX = "TEX"
    SYNTH = "SYNTH"


@dataclass(frozen=True)
class ScreenGeometry:
    """Physical screen size (mm), resolution (px) and head distance (mm)."""

    distance_mm: float = 550.0
    width_mm: float = 474.0
    height_mm: float = 297.0
    width_px: int = 1680
    height_px: int = 1050

    def __post_init__(self):
        for name in ("distance_mm", "width_mm", "height_mm", "width_px", "height_px"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be strictly positive, got {value!r}")


@dataclass(frozen=True)
class GazeSample:
    t_ms: float
    theta_x_deg: float
    theta_y_deg: float
    stim_x_deg: float = 0.0
    stim_y_deg: float = 0.0
    valid: bool = True


@dataclass(frozen=True)
class ScreenPoint:
    x_px: float
    y_px: float


@dataclass(frozen=True, eq=False)
class GazeRecording:
    """One subject/session gaze trace stored column-wise.

    Invalid samples are kept in place (angles may be NaN) so that indices stay
    aligned with timestamps; downstream statistics skip them.
    """

    subject_id: str
    session_id: str
    stimulus_kind: StimulusKind
    rate_hz: float
    t_ms: np.ndarray
    theta_x_deg: np.ndarray
    theta_y_deg: np.ndarray
    stim_x_deg: np.ndarray
    stim_y_deg: np.ndarray
    valid: np.ndarray
    geometry: ScreenGeometry = field(default_factory=ScreenGeometry)

    def __post_init__(self):
        for name in ("t_ms", "theta_x_deg", "theta_y_deg", "stim_x_deg", "stim_y_deg"):
            object.__setattr__(self, name, np.array(getattr(self, name), dtype=float))
        object.__setattr__(self, "valid", np.array(self.valid, dtype=bool))
        object.__setattr__(self, "stimulus_kind", StimulusKind(self.stimulus_kind))
        n = len(self.t_ms)
        if n == 0:
            raise InvalidRecording("recording has no samples")
        if not self.rate_hz > 0:
            raise InvalidRecording(f"rate_hz must be positive, got {self.rate_hz}")
        for name in ("theta_x_deg", "theta_y_deg", "stim_x_deg", "stim_y_deg", "valid"):
            if len(getattr(self, name)) != n:
                raise InvalidRecording(f"column {name} has length {len(getattr(self, name))}, expected {n}")
        steps = np.diff(self.t_ms)
        bad = np.flatnonzero(steps <= 0)
        if bad.size:
            # +1 for the offending sample, +1 for the header row
            raise NonMonotonicTimestamps(row=int(bad[0]) + 2)
        if steps.size:
            period = 1000.0 / self.rate_hz
            if np.any(np.abs(steps - period) > 0.1 * period):
                raise InvalidRecording(
                    f"sample spacing deviates more than 10% from {period:.4g} ms ({self.rate_hz} Hz)"
                )
        for name in ("t_ms", "theta_x_deg", "theta_y_deg", "stim_x_deg", "stim_y_deg", "valid"):
            getattr(self, name).setflags(write=False)

    @classmethod
    def from_samples(cls, subject_id, session_id, stimulus_kind, rate_hz, samples, geometry=None):
        samples = list(samples)
        return cls(
            subject_id=subject_id,
            session_id=session_id,
            stimulus_kind=StimulusKind(stimulus_kind),
            rate_hz=float(rate_hz),
            t_ms=np.array([s.t_ms for s in samples], dtype=float),
            theta_x_deg=np.array([s.theta_x_deg for s in samples], dtype=float),
            theta_y_deg=np.array([s.theta_y_deg for s in samples], dtype=float),
            stim_x_deg=np.array([s.stim_x_deg for s in samples], dtype=float),
            stim_y_deg=np.array([s.stim_y_deg for s in samples], dtype=float),
            valid=np.array([bool(s.valid) for s in samples], dtype=bool),
            geometry=geometry or ScreenGeometry(),
        )

    def __len__(self):
        return len(self.t_ms)

    @property
    def key(self) -> str:
        return f"{self.subject_id}_{self.session_id}"

    @property
    def samples(self) -> list[GazeSample]:
        return [
            GazeSample(float(t), float(ax), float(ay), float(sx), float(sy), bool(v))
            for t, ax, ay, sx, sy, v in zip(
                self.t_ms, self.theta_x_deg, self.theta_y_deg, self.stim_x_deg, self.stim_y_deg, self.valid
            )
        ]


def _check_angle(theta_deg):
    theta = np.asarray(theta_deg, dtype=float)
    finite = theta[np.isfinite(theta)]
    if finite.size and np.any(np.abs(finite) >= 90.0):
        raise AngleOutOfRange(f"visual angle must lie strictly inside (-90, 90) degrees, got {theta_deg}")


def angles_to_screen(theta_x_deg, theta_y_deg, geom: ScreenGeometry):
    """Vectorised visual-angle to screen-pixel conversion (no clamping)."""
    _check_angle(theta_x_deg)
    _check_angle(theta_y_deg)
    tx = np.radians(np.asarray(theta_x_deg, dtype=float))
    ty = np.radians(np.asarray(theta_y_deg, dtype=float))
    x = (geom.distance_mm * geom.width_px / geom.width_mm) * np.tan(tx) + geom.width_px / 2.0
    y = (geom.distance_mm * geom.height_px / geom.height_mm) * np.tan(ty) + geom.height_px / 2.0
    return x, y


def to_screen(sample: GazeSample, geom: ScreenGeometry) -> ScreenPoint:
    x, y = angles_to_screen(sample.theta_x_deg, sample.theta_y_deg, geom)
    return ScreenPoint(float(x), float(y))


def _parse_float(text, row, column):
    try:
        return float(text)
    except ValueError:
        raise ParseError(row=row, column=column, message=f"not a number: {text!r}") from None


def load_recording(
    path,
    geom: ScreenGeometry | None = None,
    *,
    subject_id: str | None = None,
    session_id: str | None = None,
    stimulus_kind: StimulusKind | str = StimulusKind.SYNTH,
    rate_hz: float | None = None,
) -> GazeRecording:
    """Read a recording CSV.

    Subject and session default to the ``<subject>_<session>.csv`` file name
    convention. The sampling rate is inferred from the median timestamp step
    when not given.
    """
    path = Path(path)
    if subject_id is None or session_id is None:
        subj, _, sess = path.stem.rpartition("_")
        subject_id = subject_id if subject_id is not None else (subj or path.stem)
        session_id = session_id if session_id is not None else (sess if subj else "1")

    columns: list[list[float]] = [[] for _ in CSV_HEADER]
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError(row=1, column="header", message="empty file")
        header = [h.strip() for h in header]
        if tuple(header) != CSV_HEADER:
            raise ParseError(row=1, column="header", message=f"expected {','.join(CSV_HEADER)}, got {','.join(header)}")
        last_t = -math.inf
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(CSV_HEADER):
                raise ParseError(row=row_no, column="*", message=f"expected {len(CSV_HEADER)} fields, got {len(row)}")
            t = _parse_float(row[0], row_no, "t_ms")
            if not math.isfinite(t):
                raise ParseError(row=row_no, column="t_ms", message="timestamp must be finite")
            if t <= last_t:
                raise NonMonotonicTimestamps(row=row_no)
            last_t = t
            valid_text = row[1].strip()
            if valid_text not in ("0", "1"):
                raise ParseError(row=row_no, column="valid", message=f"expected 0 or 1, got {valid_text!r}")
            columns[0].append(t)
            columns[1].append(valid_text == "1")
            for j, name in enumerate(CSV_HEADER[2:], start=2):
                columns[j].append(_parse_float(row[j], row_no, name))

    if not columns[0]:
        raise ParseError(row=2, column="*", message="no samples")
    t_ms = np.array(columns[0], dtype=float)
    if rate_hz is None:
        if len(t_ms) < 2:
            raise ParseError(row=2, column="t_ms", message="cannot infer rate from a single sample")
        rate_hz = 1000.0 / float(np.median(np.diff(t_ms)))
    return GazeRecording(
        subject_id=subject_id,
        session_id=session_id,
        stimulus_kind=StimulusKind(stimulus_kind),
        rate_hz=float(rate_hz),
        t_ms=t_ms,
        theta_x_deg=np.array(columns[2], dtype=float),
        theta_y_deg=np.array(columns[3], dtype=float),
        stim_x_deg=np.array(columns[4], dtype=float),
        stim_y_deg=np.array(columns[5], dtype=float),
        valid=np.array(columns[1], dtype=bool),
        geometry=geom or ScreenGeometry(),
    )


def save_recording(rec: GazeRecording, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for t, v, ax, ay, sx, sy in zip(
            rec.t_ms, rec.valid, rec.theta_x_deg, rec.theta_y_deg, rec.stim_x_deg, rec.stim_y_deg
        ):
            writer.writerow([repr(float(t)), int(bool(v)), repr(float(ax)), repr(float(ay)), repr(float(sx)), repr(float(sy))])
    return path


def discover_recordings(directory, session: str | None = None) -> list[Path]:
    """Recording CSVs in ``directory`` (``truth.csv`` excluded), sorted by name."""
    directory = Path(directory)
    paths = sorted(p for p in directory.glob("*.csv") if p.name != "truth.csv")
    if session is not None:
        paths = [p for p in paths if p.stem.rpartition("_")[2] == str(session)]
    return paths
