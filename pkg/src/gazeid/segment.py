"""Velocity-threshold (I-VT) fixation/saccade labelling and segment lists."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from gazeid.preprocess import KinematicTrace


class Kind(enum.IntEnum):
    FIXATION = 0
    SACCADE = 1


FIXATION = Kind.FIXATION
SACCADE = Kind.SACCADE


@dataclass(frozen=True)
class IvtConfig:
    velocity_threshold_dps: float = 50.0
    min_fixation_ms: float = 100.0
    min_saccade_ms: float = 12.0

    def __post_init__(self):
        for name in ("velocity_threshold_dps", "min_fixation_ms", "min_saccade_ms"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True, eq=False)
class Segment:
    kind: Kind
    start_idx: int
    end_idx: int
    duration_ms: float
    trace: KinematicTrace | None = field(default=None, repr=False)
    truncated: bool = False

    def __len__(self):
        return self.end_idx - self.start_idx + 1

    @property
    def slice(self) -> slice:
        return slice(self.start_idx, self.end_idx + 1)

    def view(self, name: str) -> np.ndarray:
        """Slice of a KinematicTrace column covering this segment."""
        return getattr(self.trace, name)[self.slice]

    @property
    def x(self):
        return self.view("x")

    @property
    def y(self):
        return self.view("y")

    @property
    def valid(self):
        return self.view("valid")


@dataclass(frozen=True, eq=False)
class SegmentList:
    segments: list[Segment]
    recording_id: str = ""

    def __iter__(self):
        return iter(self.segments)

    def __len__(self):
        return len(self.segments)

    def __getitem__(self, i):
        return self.segments[i]

    def of_kind(self, kind: Kind, *, include_truncated=False) -> list[Segment]:
        return [s for s in self.segments if s.kind == kind and (include_truncated or not s.truncated)]


def ivt_labels(t_ms, speed, cfg: IvtConfig = IvtConfig()) -> np.ndarray:
    """Per-sample labels from angular speed, back-patching short fixations.

    A fixation run is relabelled SACCADE when the time from its first sample
    to the first following saccade sample is below ``min_fixation_ms``. The
    state before the first sample is taken to be SACCADE. A fixation run still
    open at the end of the trace is never back-patched.
    """
    t_ms = np.asarray(t_ms, dtype=float)
    speed = np.asarray(speed, dtype=float)
    n = len(speed)
    res = np.empty(n, dtype=np.int8)
    vt = cfg.velocity_threshold_dps
    mdf = cfg.min_fixation_ms
    last_state = SACCADE
    fixation_start = 0
    for index in range(n):
        if speed[index] < vt:
            current = FIXATION
            if last_state != current:
                fixation_start = index
        else:
            if last_state == FIXATION:
                duration = t_ms[index] - t_ms[fixation_start]
                if duration < mdf:
                    res[fixation_start:index + 1] = SACCADE
            current = SACCADE
        last_state = current
        res[index] = current
    return res


def ivt_classify(trace: KinematicTrace, cfg: IvtConfig = IvtConfig()) -> np.ndarray:
    return ivt_labels(trace.t_ms, trace.speed, cfg)


def _runs(labels):
    """(kind, start, end) for each maximal run, end inclusive."""
    labels = np.asarray(labels)
    if labels.size == 0:
        return []
    edges = np.flatnonzero(np.diff(labels)) + 1
    starts = np.r_[0, edges]
    ends = np.r_[edges - 1, len(labels) - 1]
    return [[int(labels[s]), int(s), int(e)] for s, e in zip(starts, ends)]


def _duration(t_ms, start, end, period_ms):
    if end + 1 < len(t_ms):
        return float(t_ms[end + 1] - t_ms[start])
    return float(t_ms[end] - t_ms[start]) + period_ms


def merge_short_saccades(runs, t_ms, period_ms, min_saccade_ms):
    """Fold saccade runs shorter than ``min_saccade_ms`` into their fixation neighbours."""
    out = []
    for kind, start, end in runs:
        if kind == SACCADE and _duration(t_ms, start, end, period_ms) < min_saccade_ms and len(runs) > 1:
            kind = FIXATION
        if out and out[-1][0] == kind:
            out[-1][2] = end
        else:
            out.append([kind, start, end])
    return out


def build_segments(labels, trace: KinematicTrace, cfg: IvtConfig = IvtConfig()) -> SegmentList:
    labels = np.asarray(labels)
    if len(labels) != len(trace):
        raise ValueError(f"{len(labels)} labels for a trace of {len(trace)} samples")
    t_ms = trace.t_ms
    period = 1000.0 / trace.rate_hz
    runs = merge_short_saccades(_runs(labels), t_ms, period, cfg.min_saccade_ms)
    segments = []
    for i, (kind, start, end) in enumerate(runs):
        kind = Kind(kind)
        duration = _duration(t_ms, start, end, period)
        at_edge = i == 0 or i == len(runs) - 1
        minimum = cfg.min_fixation_ms if kind == FIXATION else cfg.min_saccade_ms
        segments.append(
            Segment(kind, start, end, duration, trace, truncated=at_edge and duration < minimum)
        )
    return SegmentList(segments, trace.recording_id)


def segment_trace(trace: KinematicTrace, cfg: IvtConfig = IvtConfig()) -> SegmentList:
    return build_segments(ivt_classify(trace, cfg), trace, cfg)


def write_segments_csv(segments: SegmentList, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["start_idx", "end_idx", "kind", "duration_ms"])
        for seg in segments:
            writer.writerow([seg.start_idx, seg.end_idx, seg.kind.name, repr(seg.duration_ms)])
    return path
