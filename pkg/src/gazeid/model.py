"""Per-person Gaussian RBF networks for the fixation and saccade channels."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from gazeid.errors import (
    EmptyProbe,
    InsufficientEnrollmentData,
    NumericalFailure,
    TooFewPoints,
)
from gazeid.features import FEATURE_NAMES, FeatureMask, NormStats, apply_norm, fit_norm, mask_columns
from gazeid.segment import FIXATION, SACCADE, Kind

MODEL_VERSION = "gazeid-rbf/1"
SIGMA_FLOOR = 1e-3
PINV_RCOND = 1e-10


@dataclass
class KMeansResult:
    centers: np.ndarray
    labels: np.ndarray
    n_iter: int
    distortions: list[float] = field(default_factory=list)

    @property
    def distortion(self) -> float:
        return self.distortions[-1]


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _kmeanspp(points, k, rng):
    n = len(points)
    chosen = [int(rng.integers(n))]
    d2 = cdist(points, points[chosen], "sqeuclidean")[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            remaining = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(remaining))
        chosen.append(idx)
        d2 = np.minimum(d2, cdist(points, points[idx:idx + 1], "sqeuclidean")[:, 0])
    return points[chosen].copy()


def kmeans(points, k: int, max_iter: int = 100, seed=0) -> KMeansResult:
    """Lloyd's algorithm with k-means++ seeding and squared Euclidean distance.

    Stops when assignments stop changing or after ``max_iter`` updates. An
    empty cluster is re-seeded with the point farthest from its own center.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise ValueError("points must be a 2-D matrix")
    n = len(points)
    if k < 1 or n < k:
        raise TooFewPoints(f"need at least k={k} points, got {n}")
    rng = _as_rng(seed)
    centers = _kmeanspp(points, k, rng)

    d2 = cdist(points, centers, "sqeuclidean")
    labels = np.argmin(d2, axis=1)
    distortions = [float(d2[np.arange(n), labels].sum())]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        counts = np.bincount(labels, minlength=k)
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, points)
        occupied = counts > 0
        centers[occupied] = sums[occupied] / counts[occupied, None]
        empty = np.flatnonzero(~occupied)
        if empty.size:
            own = d2[np.arange(n), labels]
            for c, idx in zip(empty, np.argsort(-own, kind="stable")):
                centers[c] = points[idx]
        d2 = cdist(points, centers, "sqeuclidean")
        new_labels = np.argmin(d2, axis=1)
        distortions.append(float(d2[np.arange(n), new_labels].sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return KMeansResult(centers, labels, n_iter, distortions)


def cluster_betas(points, result: KMeansResult, sigma_floor=SIGMA_FLOOR) -> np.ndarray:
    """beta = 1 / (2 sigma^2), sigma = mean member distance to the center."""
    k = len(result.centers)
    dist = np.linalg.norm(points - result.centers[result.labels], axis=1)
    counts = np.bincount(result.labels, minlength=k)
    sums = np.bincount(result.labels, weights=dist, minlength=k)
    sigma = np.divide(sums, counts, out=np.zeros(k), where=counts > 0)
    sigma = np.maximum(sigma, sigma_floor)
    return 1.0 / (2.0 * sigma ** 2)


@dataclass
class Neurons:
    centers: np.ndarray
    betas: np.ndarray
    owners: np.ndarray

    def __len__(self):
        return len(self.betas)


def subject_rng(seed, kind, subject_index):
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(kind), int(subject_index)]))


def build_neurons(per_subject, k: int = 32, seed=0, kind: Kind = FIXATION, max_iter=100) -> Neurons:
    """Cluster each subject's (normalised) feature rows into ``k`` neurons.

    ``per_subject`` maps subject id to a matrix, in identity order.
    """
    centers, betas, owners = [], [], []
    for j, (subject, points) in enumerate(per_subject.items()):
        points = np.asarray(points, dtype=float)
        if len(points) < k:
            raise InsufficientEnrollmentData(subject, len(points), k, kind.name.lower())
        result = kmeans(points, k, max_iter=max_iter, seed=subject_rng(seed, kind, j))
        centers.append(result.centers)
        betas.append(cluster_betas(points, result))
        owners.append(np.full(k, j))
    return Neurons(np.vstack(centers), np.concatenate(betas), np.concatenate(owners))


def activations(x, neurons: Neurons) -> np.ndarray:
    """Gaussian responses exp(-beta ||x - mu||^2), shape (rows, neurons)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return np.exp(-cdist(x, neurons.centers, "sqeuclidean") * neurons.betas)


def solve_weights(a, y) -> np.ndarray:
    """Minimum-norm least-squares solution of ``a @ w = y``."""
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1:
        raise ValueError("activation matrix must be 2-D with at least one row")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(y))):
        raise NumericalFailure("non-finite values in least-squares system")
    w, *_ = np.linalg.lstsq(a, y, rcond=PINV_RCOND)
    if not np.all(np.isfinite(w)):
        raise NumericalFailure("least-squares solution is not finite")
    return w


def one_hot(labels, n_classes) -> np.ndarray:
    y = np.zeros((len(labels), n_classes))
    y[np.arange(len(labels)), labels] = 1.0
    return y


@dataclass
class RbfChannel:
    kind: Kind
    mask: FeatureMask
    norm: NormStats
    neurons: Neurons
    weights: np.ndarray

    @property
    def columns(self):
        return mask_columns(self.mask)

    def prepare(self, raw) -> np.ndarray:
        """Normalise canonical feature rows and keep the masked columns."""
        raw = np.atleast_2d(np.asarray(raw, dtype=float))
        return apply_norm(raw, self.norm)[:, self.columns]

    def segment_scores(self, raw) -> np.ndarray:
        return activations(self.prepare(raw), self.neurons) @ self.weights

    def score(self, raw) -> np.ndarray:
        """Mean class-score vector over all segments of a probe."""
        return self.segment_scores(raw).mean(axis=0)


def train_channel(per_subject, kind: Kind, mask: FeatureMask | None = None, k=32, seed=0, max_iter=100) -> RbfChannel:
    """Fit normalisation, prototypes and output weights for one channel.

    ``per_subject`` maps subject id to a raw canonical feature matrix, in the
    model's identity order.
    """
    mask = mask or FeatureMask.all(kind)
    subjects = list(per_subject)
    for subject, rows in per_subject.items():
        if len(rows) < k:
            raise InsufficientEnrollmentData(subject, len(rows), k, kind.name.lower())
    raw = np.vstack([np.asarray(per_subject[s], dtype=float) for s in subjects])
    labels = np.concatenate([np.full(len(per_subject[s]), j) for j, s in enumerate(subjects)])
    norm = fit_norm(raw, FEATURE_NAMES[kind])
    cols = mask_columns(mask)
    x = apply_norm(raw, norm)[:, cols]
    grouped = {s: x[labels == j] for j, s in enumerate(subjects)}
    neurons = build_neurons(grouped, k=k, seed=seed, kind=kind, max_iter=max_iter)
    weights = solve_weights(activations(x, neurons), one_hot(labels, len(subjects)))
    return RbfChannel(kind, mask, norm, neurons, weights)


@dataclass
class FusionScore:
    fused: np.ndarray
    fixation: np.ndarray | None
    saccade: np.ndarray | None


def fuse(fix_score, sacc_score, fusion_lambda=0.5) -> np.ndarray:
    """Convex combination; a missing channel hands its weight to the other."""
    if fix_score is None and sacc_score is None:
        raise EmptyProbe("probe has neither fixations nor saccades")
    if sacc_score is None:
        return np.asarray(fix_score, dtype=float)
    if fix_score is None:
        return np.asarray(sacc_score, dtype=float)
    return fusion_lambda * np.asarray(fix_score) + (1.0 - fusion_lambda) * np.asarray(sacc_score)


@dataclass
class RbfModel:
    identities: list[str]
    fixation: RbfChannel
    saccade: RbfChannel
    fusion_lambda: float = 0.5
    seed: int = 0
    config: dict = field(default_factory=dict)
    version: str = MODEL_VERSION

    def __post_init__(self):
        if not 0.0 <= self.fusion_lambda <= 1.0:
            raise ValueError(f"fusion_lambda must lie in [0, 1], got {self.fusion_lambda}")
        m = len(self.identities)
        for channel in (self.fixation, self.saccade):
            if channel.weights.shape[1] != m:
                raise ValueError("channel weight matrix does not match identity count")

    def channel(self, kind: Kind) -> RbfChannel:
        return self.fixation if kind == FIXATION else self.saccade

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "identities": list(self.identities),
            "fusion_lambda": float(self.fusion_lambda),
            "seed": int(self.seed),
            "config": self.config,
            "channels": {ch.kind.name.lower(): _channel_to_dict(ch) for ch in (self.fixation, self.saccade)},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.dumps(), encoding="utf-8")
        return path

    @classmethod
    def from_dict(cls, doc):
        if doc.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {doc.get('version')!r}")
        return cls(
            identities=list(doc["identities"]),
            fixation=_channel_from_dict(doc["channels"]["fixation"], FIXATION),
            saccade=_channel_from_dict(doc["channels"]["saccade"], SACCADE),
            fusion_lambda=float(doc["fusion_lambda"]),
            seed=int(doc["seed"]),
            config=doc.get("config", {}),
            version=doc["version"],
        )

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _channel_to_dict(ch: RbfChannel) -> dict:
    return {
        "mask": list(ch.mask.names),
        "stimulus_kind": ch.mask.stimulus_kind.value,
        "norm_mean": ch.norm.mean.tolist(),
        "norm_std": ch.norm.std.tolist(),
        "centers": ch.neurons.centers.tolist(),
        "betas": ch.neurons.betas.tolist(),
        "owners": ch.neurons.owners.astype(int).tolist(),
        "weights": ch.weights.tolist(),
    }


def _channel_from_dict(doc, kind: Kind) -> RbfChannel:
    names = FEATURE_NAMES[kind]
    mask = FeatureMask.from_names(doc["mask"], kind, doc.get("stimulus_kind", "SYNTH"))
    n_cols = len(doc["mask"])
    centers = np.array(doc["centers"], dtype=float).reshape(-1, n_cols)
    return RbfChannel(
        kind=kind,
        mask=mask,
        norm=NormStats(np.array(doc["norm_mean"], dtype=float), np.array(doc["norm_std"], dtype=float), names),
        neurons=Neurons(centers, np.array(doc["betas"], dtype=float), np.array(doc["owners"], dtype=int)),
        weights=np.array(doc["weights"], dtype=float).reshape(len(doc["betas"]), -1),
    )


def train_model(fix_per_subject, sacc_per_subject, *, fix_mask=None, sacc_mask=None, k=32,
                fusion_lambda=0.5, seed=0, max_iter=100, config=None) -> RbfModel:
    identities = list(fix_per_subject)
    if list(sacc_per_subject) != identities:
        raise ValueError("fixation and saccade data must list the same subjects in the same order")
    return RbfModel(
        identities=identities,
        fixation=train_channel(fix_per_subject, FIXATION, fix_mask, k=k, seed=seed, max_iter=max_iter),
        saccade=train_channel(sacc_per_subject, SACCADE, sacc_mask, k=k, seed=seed, max_iter=max_iter),
        fusion_lambda=fusion_lambda,
        seed=seed,
        config=dict(config or {}),
    )


def score_probe(model: RbfModel, fix_feats, sacc_feats) -> FusionScore:
    fix = model.fixation.score(fix_feats) if fix_feats is not None and len(fix_feats) else None
    sacc = model.saccade.score(sacc_feats) if sacc_feats is not None and len(sacc_feats) else None
    return FusionScore(fuse(fix, sacc, model.fusion_lambda), fix, sacc)


def identify(score) -> int:
    """Index of the best-scoring identity; ties go to the lowest index."""
    fused = score.fused if isinstance(score, FusionScore) else np.asarray(score, dtype=float)
    if fused.size == 0:
        raise ValueError("empty score vector")
    return int(np.argmax(fused))
