"""Synthetic gaze recordings with subject-specific oculomotor parameters.

Each subject alternates fixations (Gaussian random-walk drift around a target)
and saccades whose position follows a time-warped smoothstep. The saccade
duration is chosen so that peak velocity equals ``main_sequence_slope`` times
the amplitude. White noise is added to both angle channels.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from gazeid.data import GazeRecording, ScreenGeometry, StimulusKind, save_recording
from gazeid.errors import InvalidSpec
from gazeid.segment import FIXATION, SACCADE, Kind

MIN_FIXATION_MS = 150.0
TARGET_RANGE_DEG = (12.0, 8.0)
AMPLITUDE_RANGE_DEG = (7.0, 15.0)


@dataclass(frozen=True)
class SubjectProfile:
    main_sequence_slope: float
    fixation_drift_std: float
    fixation_duration_mean_ms: float
    saccade_asymmetry: float
    noise_std_deg: float
    seed: int = 0

    def __post_init__(self):
        if not self.main_sequence_slope > 0:
            raise InvalidSpec("main_sequence_slope must be positive")
        if self.fixation_drift_std < 0 or self.noise_std_deg < 0:
            raise InvalidSpec("drift and noise standard deviations must be non-negative")
        if not self.fixation_duration_mean_ms > 0:
            raise InvalidSpec("fixation_duration_mean_ms must be positive")
        if not 0.0 <= self.saccade_asymmetry <= 1.0:
            raise InvalidSpec("saccade_asymmetry must lie in [0, 1]")


@dataclass(frozen=True)
class SynthSpec:
    n_subjects: int = 20
    sessions_per_subject: int = 2
    duration_s: float = 100.0
    rate_hz: float = 250.0
    stimulus_kind: StimulusKind = StimulusKind.SYNTH
    geometry: ScreenGeometry = field(default_factory=ScreenGeometry)
    master_seed: int = 0

    def __post_init__(self):
        if self.n_subjects < 1 or self.sessions_per_subject < 1:
            raise InvalidSpec("n_subjects and sessions_per_subject must be at least 1")
        if not self.duration_s > 0:
            raise InvalidSpec("duration_s must be positive")
        if self.rate_hz not in (250, 1000):
            raise InvalidSpec(f"rate_hz must be 250 or 1000, got {self.rate_hz}")


@dataclass(frozen=True)
class PlantedEvent:
    subject: str
    session: str
    start_idx: int
    end_idx: int
    kind: Kind


def subject_id(index: int) -> str:
    return f"S{index + 1:03d}"


def subject_seed(master_seed: int, subject_index: int) -> int:
    return int(np.random.SeedSequence([int(master_seed), int(subject_index)]).generate_state(1)[0])


def draw_profile(master_seed: int, subject_index: int) -> SubjectProfile:
    seed = subject_seed(master_seed, subject_index)
    rng = np.random.default_rng(seed)
    return SubjectProfile(
        main_sequence_slope=float(rng.uniform(30.0, 50.0)),
        fixation_drift_std=float(rng.uniform(0.05, 0.6)),
        fixation_duration_mean_ms=float(rng.uniform(200.0, 450.0)),
        saccade_asymmetry=float(rng.uniform(0.0, 1.0)),
        noise_std_deg=float(rng.uniform(0.005, 0.03)),
        seed=seed,
    )


def _warp_gain(asymmetry):
    return 0.2 * asymmetry


def saccade_shape(s, asymmetry):
    """Normalised position on [0, 1]: smoothstep of a front-loading time warp."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    w = s + _warp_gain(asymmetry) * s * (1.0 - s)
    return 3.0 * w ** 2 - 2.0 * w ** 3


@lru_cache(maxsize=256)
def peak_shape_velocity(asymmetry: float) -> float:
    """max over s of d/ds saccade_shape(s)."""
    s = np.linspace(0.0, 1.0, 20001)
    b = _warp_gain(asymmetry)
    w = s + b * s * (1.0 - s)
    return float(np.max(6.0 * w * (1.0 - w) * (1.0 + b * (1.0 - 2.0 * s))))


def saccade_duration_s(profile: SubjectProfile) -> float:
    """Duration giving peak velocity = slope * amplitude (independent of amplitude)."""
    return peak_shape_velocity(profile.saccade_asymmetry) / profile.main_sequence_slope


def _next_target(rng, current):
    lo, hi = AMPLITUDE_RANGE_DEG
    while True:
        target = np.array([rng.uniform(-TARGET_RANGE_DEG[0], TARGET_RANGE_DEG[0]),
                           rng.uniform(-TARGET_RANGE_DEG[1], TARGET_RANGE_DEG[1])])
        amplitude = float(np.hypot(*(target - current)))
        if lo <= amplitude <= hi:
            return target


def generate_recording(profile: SubjectProfile, spec: SynthSpec, subject: str, session: str, session_seed):
    """One recording plus its planted event log."""
    rng = np.random.default_rng(session_seed)
    rate = float(spec.rate_hz)
    n = int(round(spec.duration_s * rate))
    period_s = 1.0 / rate
    pos = np.empty((n, 2))
    stim = np.empty((n, 2))
    events: list[PlantedEvent] = []
    sacc_len_s = saccade_duration_s(profile)
    drift_step = profile.fixation_drift_std * math.sqrt(period_s)
    shape_k = 3.0  # gamma shape of fixation durations

    target = _next_target(rng, np.zeros(2)) * 0.5
    # velocity at sample j is the forward difference p[j+1] - p[j], so a
    # saccade whose moving samples are i .. e-1 occupies i-1 .. e-2 in the log
    fix_start = 0
    i = 0
    while True:
        mean_ms = profile.fixation_duration_mean_ms
        dur_ms = max(MIN_FIXATION_MS, float(rng.gamma(shape_k, mean_ms / shape_k)))
        end = min(n, i + max(1, int(round(dur_ms / 1000.0 * rate))))
        steps = rng.normal(0.0, drift_step, size=(end - i, 2))
        steps[0] = 0.0
        pos[i:end] = target + np.cumsum(steps, axis=0)
        stim[i:end] = target
        i = end
        if i >= n:
            events.append(PlantedEvent(subject, session, fix_start, n - 1, FIXATION))
            break
        start_pos = pos[i - 1].copy()
        new_target = _next_target(rng, target)
        # the last moving sample lands exactly on the target
        k = np.arange(1, int(math.ceil(sacc_len_s * rate)) + 1)
        shape = saccade_shape(k * period_s / sacc_len_s, profile.saccade_asymmetry)
        end = min(n, i + len(k))
        pos[i:end] = start_pos + np.outer(shape[: end - i], new_target - start_pos)
        stim[i:end] = new_target
        events.append(PlantedEvent(subject, session, fix_start, i - 2, FIXATION))
        if end >= n:
            events.append(PlantedEvent(subject, session, i - 1, n - 1, SACCADE))
            break
        events.append(PlantedEvent(subject, session, i - 1, end - 2, SACCADE))
        fix_start = end - 1
        target = new_target
        i = end

    noise = rng.normal(0.0, profile.noise_std_deg, size=(n, 2)) if profile.noise_std_deg > 0 else 0.0
    gaze = pos + noise
    rec = GazeRecording(
        subject_id=subject,
        session_id=session,
        stimulus_kind=spec.stimulus_kind,
        rate_hz=rate,
        t_ms=np.arange(n) * (1000.0 / rate),
        theta_x_deg=gaze[:, 0],
        theta_y_deg=gaze[:, 1],
        stim_x_deg=stim[:, 0],
        stim_y_deg=stim[:, 1],
        valid=np.ones(n, dtype=bool),
        geometry=spec.geometry,
    )
    return rec, events


def generate_with_truth(spec: SynthSpec, profiles: list[SubjectProfile] | None = None):
    if profiles is not None and len(profiles) != spec.n_subjects:
        raise InvalidSpec(f"{len(profiles)} profiles given for {spec.n_subjects} subjects")
    recordings, events = [], []
    for j in range(spec.n_subjects):
        profile = profiles[j] if profiles is not None else draw_profile(spec.master_seed, j)
        for s in range(spec.sessions_per_subject):
            session_seed = np.random.SeedSequence([int(profile.seed), s + 1])
            rec, ev = generate_recording(profile, spec, subject_id(j), str(s + 1), session_seed)
            recordings.append(rec)
            events.extend(ev)
    return recordings, events


def generate(spec: SynthSpec, profiles: list[SubjectProfile] | None = None) -> list[GazeRecording]:
    return generate_with_truth(spec, profiles)[0]


def write_truth_csv(events, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["subject", "session", "start_idx", "end_idx", "kind"])
        for ev in events:
            writer.writerow([ev.subject, ev.session, ev.start_idx, ev.end_idx, ev.kind.name])
    return path


def write_dataset(spec: SynthSpec, out_dir, profiles=None) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    recordings, events = generate_with_truth(spec, profiles)
    paths = [save_recording(rec, out_dir / f"{rec.key}.csv") for rec in recordings]
    write_truth_csv(events, out_dir / "truth.csv")
    return paths
