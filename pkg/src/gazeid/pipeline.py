"""End-to-end orchestration and the INI-style pipeline configuration."""

from __future__ import annotations

import configparser
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from gazeid.data import GazeRecording, ScreenGeometry, StimulusKind
from gazeid.evaluation import ScoreMatrix
from gazeid.features import FeatureMask, extract, published_mask
from gazeid.model import RbfModel, score_probe, train_model
from gazeid.preprocess import SgConfig, kinematics
from gazeid.segment import FIXATION, SACCADE, IvtConfig, SegmentList, segment_trace

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelConfig:
    k: int = 32
    fusion_lambda: float = 0.5
    selection_rounds: int = 10
    max_iter: int = 100
    seed: int = 0
    # "auto" = published selection for RAN/TEX, every feature otherwise;
    # "all", or a path to a mask JSON written by select-features
    mask: str = "auto"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if not 0.0 <= self.fusion_lambda <= 1.0:
            raise ValueError("fusion_lambda must lie in [0, 1]")
        if self.selection_rounds < 1 or self.max_iter < 1:
            raise ValueError("selection_rounds and max_iter must be at least 1")


@dataclass(frozen=True)
class PipelineConfig:
    geometry: ScreenGeometry = field(default_factory=ScreenGeometry)
    sg: SgConfig = field(default_factory=SgConfig)
    ivt: IvtConfig = field(default_factory=IvtConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    stimulus_kind: StimulusKind = StimulusKind.SYNTH

    _SECTIONS = {"geometry": ScreenGeometry, "sg": SgConfig, "ivt": IvtConfig, "model": ModelConfig}

    def to_dict(self) -> dict:
        doc = {name: asdict(getattr(self, name)) for name in self._SECTIONS}
        doc["stimulus_kind"] = self.stimulus_kind.value
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> PipelineConfig:
        kwargs = {}
        for name, typ in cls._SECTIONS.items():
            if name in doc:
                kwargs[name] = _build(typ, doc[name])
        if "stimulus_kind" in doc:
            kwargs["stimulus_kind"] = StimulusKind(doc["stimulus_kind"])
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> PipelineConfig:
        """Read ``[geometry] [sg] [ivt] [model] [pipeline]`` key=value sections."""
        parser = configparser.ConfigParser()
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
        doc: dict = {}
        for section in parser.sections():
            if section == "pipeline":
                if "stimulus_kind" in parser[section]:
                    doc["stimulus_kind"] = parser[section]["stimulus_kind"].strip().upper()
                continue
            if section not in cls._SECTIONS:
                raise ValueError(f"unknown config section [{section}]")
            doc[section] = dict(parser[section])
        return cls.from_dict(doc)

    def with_overrides(self, **sections) -> PipelineConfig:
        """Replace individual fields, e.g. ``with_overrides(model={"k": 8})``."""
        updated = {}
        for name, values in sections.items():
            values = {k: v for k, v in (values or {}).items() if v is not None}
            if values:
                updated[name] = _build(type(getattr(self, name)), {**asdict(getattr(self, name)), **values})
        return replace(self, **updated)

    def masks(self):
        """(fixation mask, saccade mask) chosen by ``model.mask``."""
        choice = self.model.mask
        if choice == "auto":
            return published_mask(FIXATION, self.stimulus_kind), published_mask(SACCADE, self.stimulus_kind)
        if choice == "all":
            return FeatureMask.all(FIXATION, self.stimulus_kind), FeatureMask.all(SACCADE, self.stimulus_kind)
        from gazeid.selection import load_masks

        return load_masks(choice)


def _build(typ, values):
    kwargs = {}
    for f in fields(typ):
        if f.name not in values:
            continue
        raw = values[f.name]
        target = type(getattr(typ(), f.name))
        kwargs[f.name] = target(raw) if target is not bool else str(raw).lower() in ("1", "true", "yes")
    unknown = set(values) - {f.name for f in fields(typ)}
    if unknown:
        raise ValueError(f"unknown {typ.__name__} keys: {sorted(unknown)}")
    return typ(**kwargs)


@dataclass
class ProcessedRecording:
    recording: GazeRecording
    segments: SegmentList
    fixations: np.ndarray
    saccades: np.ndarray

    @property
    def subject_id(self):
        return self.recording.subject_id


def process(rec: GazeRecording, cfg: PipelineConfig) -> ProcessedRecording:
    trace = kinematics(rec, cfg.geometry, cfg.sg)
    segments = segment_trace(trace, cfg.ivt)
    return ProcessedRecording(rec, segments, extract(segments, FIXATION), extract(segments, SACCADE))


def enroll(processed: list[ProcessedRecording], cfg: PipelineConfig, masks=None) -> RbfModel:
    """Train on one recording (or several, stacked) per subject, in sorted subject order."""
    fix: dict[str, list] = {}
    sacc: dict[str, list] = {}
    for p in sorted(processed, key=lambda p: (p.subject_id, p.recording.session_id)):
        fix.setdefault(p.subject_id, []).append(p.fixations)
        sacc.setdefault(p.subject_id, []).append(p.saccades)
    fix_mask, sacc_mask = masks or cfg.masks()
    m = cfg.model
    return train_model(
        {s: np.vstack(v) for s, v in fix.items()},
        {s: np.vstack(v) for s, v in sacc.items()},
        fix_mask=fix_mask,
        sacc_mask=sacc_mask,
        k=m.k,
        fusion_lambda=m.fusion_lambda,
        seed=m.seed,
        max_iter=m.max_iter,
        config=cfg.to_dict(),
    )


def score_matrix(model: RbfModel, probes: list[ProcessedRecording], with_truth=True) -> ScoreMatrix:
    rows = [score_probe(model, p.fixations, p.saccades).fused for p in probes]
    truth = None
    if with_truth:
        index = {s: j for j, s in enumerate(model.identities)}
        truth = np.array([index[p.subject_id] for p in probes], dtype=int)
    return ScoreMatrix(
        np.vstack(rows),
        [p.recording.key for p in probes],
        list(model.identities),
        truth,
    )
