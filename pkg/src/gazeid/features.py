"""Per-segment fixation (12) and saccade (46) features, z-scoring and masks.

Skewness is the biased (Fisher-Pearson) moment coefficient m3 / m2**1.5 and
kurtosis the non-excess m4 / m2**2. Both are 0 for zero-variance input.
Standard deviations are population (ddof=0). Angles are in degrees.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from gazeid.data import StimulusKind
from gazeid.errors import DegenerateSegment, EmptyTrainingSet, UnknownFeatureName
from gazeid.segment import FIXATION, SACCADE, Kind, Segment, SegmentList

log = logging.getLogger(__name__)

M3S2K = ("mean", "median", "max", "std", "skew", "kurt")

FIXATION_FEATURES = (
    "duration",
    "std_x",
    "std_y",
    "path_length",
    "angle_prev",
    "dist_prev",
    "skew_x",
    "skew_y",
    "kurt_x",
    "kurt_y",
    "dispersion",
    "avg_velocity",
)


def _m3s2k_names(profile):
    return tuple(f"{profile}_{stat}" for stat in M3S2K)


SACCADE_FEATURES = (
    ("duration", "dispersion")
    + _m3s2k_names("ang_vel")
    + _m3s2k_names("ang_acc")
    + ("std_x", "std_y", "path_length", "angle_prev", "dist_prev", "saccadic_ratio", "angle", "amplitude")
    + _m3s2k_names("vx")
    + _m3s2k_names("vy")
    + _m3s2k_names("ax")
    + _m3s2k_names("ay")
)

FEATURE_NAMES = {FIXATION: FIXATION_FEATURES, SACCADE: SACCADE_FEATURES}


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    names: tuple[str, ...]
    kind: Kind

    def __post_init__(self):
        if len(self.values) != len(self.names):
            raise ValueError(f"{len(self.values)} values for {len(self.names)} names")

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class FeatureMask:
    include: dict[str, bool]
    kind: Kind
    stimulus_kind: StimulusKind = StimulusKind.SYNTH

    def __post_init__(self):
        if not any(self.include.values()):
            raise ValueError("a feature mask must include at least one feature")

    @property
    def names(self) -> tuple[str, ...]:
        """Included names in canonical order."""
        order = FEATURE_NAMES[self.kind]
        known = [n for n in order if self.include.get(n, False)]
        extra = [n for n, keep in self.include.items() if keep and n not in order]
        return tuple(known + extra)

    @classmethod
    def all(cls, kind: Kind, stimulus_kind=StimulusKind.SYNTH):
        return cls({n: True for n in FEATURE_NAMES[kind]}, kind, StimulusKind(stimulus_kind))

    @classmethod
    def from_names(cls, names, kind: Kind, stimulus_kind=StimulusKind.SYNTH):
        names = set(names)
        unknown = names - set(FEATURE_NAMES[kind])
        if unknown:
            raise UnknownFeatureName(f"unknown {kind.name.lower()} features: {sorted(unknown)}")
        return cls({n: n in names for n in FEATURE_NAMES[kind]}, kind, StimulusKind(stimulus_kind))


@dataclass(frozen=True)
class NormStats:
    mean: np.ndarray
    std: np.ndarray
    names: tuple[str, ...] = ()


def _flags(text):
    return [c == "Y" for c in text]


# Feature-selection outcomes reported for the BioEye stimuli (Y = kept).
_PUBLISHED_FIXATION_FLAGS = {
    StimulusKind.TEX: _flags("NNYYYYYYNYYY"),
    StimulusKind.RAN: _flags("YNNYYYYYNYYY"),
}
_PUBLISHED_SACCADE_FLAGS = {
    StimulusKind.TEX: _flags("NY" + "NYYYYY" + "YYYYYN" + "YYYYYYYY" + "YYYYYY" + "YYYYYY" + "YYYYYY" + "YYYYYY"),
    StimulusKind.RAN: _flags("NY" + "NNNYYY" + "YYYYYY" + "YYYYYYYY" + "YYYYYY" + "YYYYNY" + "YYYYYY" + "YYNYYY"),
}


def published_mask(kind: Kind, stimulus_kind) -> FeatureMask:
    """Published selection for RAN/TEX; every feature for other stimuli."""
    stimulus_kind = StimulusKind(stimulus_kind)
    table = _PUBLISHED_FIXATION_FLAGS if kind == FIXATION else _PUBLISHED_SACCADE_FLAGS
    if stimulus_kind not in table:
        return FeatureMask.all(kind, stimulus_kind)
    return FeatureMask(dict(zip(FEATURE_NAMES[kind], table[stimulus_kind])), kind, stimulus_kind)


def moments(values):
    """(std, skewness, kurtosis) with zero-variance guarded to 0."""
    values = np.asarray(values, dtype=float)
    d = values - values.mean()
    m2 = np.mean(d * d)
    if m2 <= 1e-24 * max(1.0, float(np.mean(values * values))):
        return 0.0, 0.0, 0.0
    m3 = np.mean(d ** 3)
    m4 = np.mean(d ** 4)
    return math.sqrt(m2), m3 / m2 ** 1.5, m4 / (m2 * m2)


def m3s2k(values):
    values = np.asarray(values, dtype=float)
    std, skew, kurt = moments(values)
    return [float(values.mean()), float(np.median(values)), float(values.max()), std, skew, kurt]


def path_length(x, y):
    return float(np.sum(np.hypot(np.diff(x), np.diff(y))))


def dispersion(x, y):
    return float((x.max() - x.min()) + (y.max() - y.min()))


def _wrap_deg(angle):
    return (angle + 180.0) % 360.0 - 180.0


def _valid_xy(seg: Segment):
    mask = seg.valid
    x = seg.x[mask]
    y = seg.y[mask]
    if len(x) < 2:
        raise DegenerateSegment(
            f"{seg.kind.name.lower()} at samples {seg.start_idx}-{seg.end_idx} has {len(x)} valid samples"
        )
    return mask, x, y


def _centroid(seg: Segment):
    mask = seg.valid
    return float(seg.x[mask].mean()), float(seg.y[mask].mean())


def _saccade_angle(x, y):
    return math.degrees(math.atan2(y[-1] - y[0], x[-1] - x[0]))


def fixation_features(seg: Segment, prev: Segment | None = None) -> FeatureVector:
    if seg.kind != FIXATION:
        raise ValueError("fixation_features needs a FIXATION segment")
    _, x, y = _valid_xy(seg)
    duration_s = seg.duration_ms / 1000.0
    std_x, skew_x, kurt_x = moments(x)
    std_y, skew_y, kurt_y = moments(y)
    length = path_length(x, y)
    angle_prev = dist_prev = 0.0
    if prev is not None:
        cx, cy = float(x.mean()), float(y.mean())
        px, py = _centroid(prev)
        angle_prev = math.degrees(math.atan2(cy - py, cx - px))
        dist_prev = math.hypot(cx - px, cy - py)
    values = [
        duration_s,
        std_x,
        std_y,
        length,
        angle_prev,
        dist_prev,
        skew_x,
        skew_y,
        kurt_x,
        kurt_y,
        dispersion(x, y),
        length / duration_s,
    ]
    return FeatureVector(np.array(values), FIXATION_FEATURES, FIXATION)


def saccade_features(seg: Segment, prev: Segment | None = None, trace=None) -> FeatureVector:
    if seg.kind != SACCADE:
        raise ValueError("saccade_features needs a SACCADE segment")
    trace = trace if trace is not None else seg.trace
    mask, x, y = _valid_xy(seg)
    sl = seg.slice
    duration_s = seg.duration_ms / 1000.0
    ang_vel = trace.speed[sl][mask]
    std_x, _, _ = moments(x)
    std_y, _, _ = moments(y)
    angle = _saccade_angle(x, y)
    angle_prev = dist_prev = 0.0
    if prev is not None:
        _, px_, py_ = _valid_xy(prev)
        angle_prev = _wrap_deg(angle - _saccade_angle(px_, py_))
        dist_prev = math.hypot(x.mean() - px_.mean(), y.mean() - py_.mean())
    values = (
        [duration_s, dispersion(x, y)]
        + m3s2k(ang_vel)
        + m3s2k(trace.accel[sl][mask])
        + [
            std_x,
            std_y,
            path_length(x, y),
            angle_prev,
            dist_prev,
            float(ang_vel.max()) / duration_s,
            angle,
            math.hypot(x[-1] - x[0], y[-1] - y[0]),
        ]
        + m3s2k(trace.vx[sl][mask])
        + m3s2k(trace.vy[sl][mask])
        + m3s2k(trace.ax[sl][mask])
        + m3s2k(trace.ay[sl][mask])
    )
    return FeatureVector(np.array(values, dtype=float), SACCADE_FEATURES, SACCADE)


def extract(segments: SegmentList, kind: Kind) -> np.ndarray:
    """Feature matrix (rows = usable segments of ``kind``) for one recording.

    Truncated and degenerate segments are skipped; the previous-segment
    features refer to the last usable segment of the same kind.
    """
    rows = []
    prev = None
    for seg in segments:
        if seg.kind != kind or seg.truncated:
            continue
        try:
            if kind == FIXATION:
                fv = fixation_features(seg, prev)
            else:
                fv = saccade_features(seg, prev)
        except DegenerateSegment as exc:
            log.debug("skipping segment in %s: %s", segments.recording_id, exc)
            continue
        rows.append(fv.values)
        prev = seg
    width = len(FEATURE_NAMES[kind])
    return np.array(rows, dtype=float).reshape(-1, width)


def fit_norm(train, names=()) -> NormStats:
    train = np.asarray(train, dtype=float)
    if train.ndim != 2 or train.shape[0] == 0:
        raise EmptyTrainingSet("cannot fit normalisation on an empty matrix")
    # rounding in the mean can leave a tiny spread on constant columns
    std = np.where(np.ptp(train, axis=0) > 0, train.std(axis=0), 0.0)
    return NormStats(train.mean(axis=0), std, tuple(names))


def apply_norm(values, stats: NormStats) -> np.ndarray:
    """z-score rows (or a single vector); zero-variance columns map to 0."""
    if isinstance(values, FeatureVector):
        return FeatureVector(apply_norm(values.values, stats), values.names, values.kind)
    values = np.asarray(values, dtype=float)
    std = stats.std
    scale = np.where(std > 0, std, 1.0)
    out = (values - stats.mean) / scale
    return np.where(std > 0, out, 0.0)


def apply_mask(v: FeatureVector, mask: FeatureMask) -> FeatureVector:
    unknown = set(mask.include) - set(v.names)
    if unknown:
        raise UnknownFeatureName(f"mask names not in vector: {sorted(unknown)}")
    keep = [i for i, n in enumerate(v.names) if mask.include.get(n, False)]
    return FeatureVector(v.values[keep], tuple(v.names[i] for i in keep), v.kind)


def mask_columns(mask: FeatureMask) -> np.ndarray:
    """Column indices of the canonical matrix that ``mask`` keeps."""
    order = FEATURE_NAMES[mask.kind]
    unknown = set(mask.include) - set(order)
    if unknown:
        raise UnknownFeatureName(f"mask names not in {mask.kind.name.lower()} features: {sorted(unknown)}")
    return np.array([i for i, n in enumerate(order) if mask.include.get(n, False)], dtype=int)


def write_features_csv(path, rows) -> Path:
    """Write ``(subject, session, kind, matrix)`` tuples, one CSV per kind column set."""
    path = Path(path)
    rows = list(rows)
    kinds = {kind for _, _, kind, _ in rows}
    if len(kinds) > 1:
        raise ValueError("write one CSV per segment kind")
    kind = kinds.pop() if kinds else FIXATION
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["subject", "session", "kind", *FEATURE_NAMES[kind]])
        for subject, session, k, matrix in rows:
            for row in matrix:
                writer.writerow([subject, session, k.name, *(repr(float(v)) for v in row)])
    return path
