"""Identification metrics: EER/DET, CMC and rank-1, one-to-one matching."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from gazeid.errors import EmptyScoreList, MissingGroundTruth, NonSquareMatrix


@dataclass
class ScoreMatrix:
    """Similarity scores, probes along rows and enrolled identities along columns."""

    scores: np.ndarray
    probe_ids: list[str] = field(default_factory=list)
    identity_ids: list[str] = field(default_factory=list)
    truth: np.ndarray | None = None  # column index of each probe's true identity

    def __post_init__(self):
        self.scores = np.atleast_2d(np.asarray(self.scores, dtype=float))
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("score matrix has non-finite entries")
        n, m = self.scores.shape
        if not self.probe_ids:
            self.probe_ids = [str(i) for i in range(n)]
        if not self.identity_ids:
            self.identity_ids = [str(j) for j in range(m)]
        if len(self.probe_ids) != n or len(self.identity_ids) != m:
            raise ValueError("id lists do not match the score matrix shape")
        if self.truth is not None:
            self.truth = np.asarray(self.truth, dtype=int)
            if self.truth.shape != (n,):
                raise ValueError("need exactly one ground-truth index per probe")

    @property
    def shape(self):
        return self.scores.shape


@dataclass
class MetricReport:
    eer: float
    eer_threshold: float
    r1: float
    rank_accuracies: list[float]
    det_points: list[tuple[float, float]]
    r1_one_to_one: float | None = None

    def to_dict(self):
        doc = {
            "eer": self.eer,
            "eer_threshold": self.eer_threshold,
            "r1": self.r1,
            "cmc": list(self.rank_accuracies),
            "det": [[far, frr] for far, frr in self.det_points],
        }
        if self.r1_one_to_one is not None:
            doc["r1_one_to_one"] = self.r1_one_to_one
        return doc

    def dumps(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"


def det_curve(genuine, impostor):
    """(thresholds, FAR, FRR) with acceptance meaning ``score >= threshold``.

    Thresholds are the sorted distinct observed scores followed by +inf, so
    the sweep always runs from FAR=1/FRR=0 to FAR=0/FRR=1.
    """
    genuine = np.sort(np.asarray(genuine, dtype=float))
    impostor = np.sort(np.asarray(impostor, dtype=float))
    if genuine.size == 0 or impostor.size == 0:
        raise EmptyScoreList("genuine and impostor score lists must be non-empty")
    thresholds = np.r_[np.unique(np.r_[genuine, impostor]), np.inf]
    far = 1.0 - np.searchsorted(impostor, thresholds, side="left") / impostor.size
    frr = np.searchsorted(genuine, thresholds, side="left") / genuine.size
    return thresholds, far, frr


def compute_eer(genuine, impostor) -> tuple[float, float]:
    """Equal error rate and the threshold where it occurs.

    FAR - FRR decreases along the sweep; the EER is taken where it first
    reaches zero, interpolating linearly between the bracketing thresholds.
    """
    thresholds, far, frr = det_curve(genuine, impostor)
    diff = far - frr
    k = int(np.argmax(diff <= 0))
    if diff[k] == 0 or k == 0:
        return float(far[k]), float(thresholds[k])
    alpha = diff[k - 1] / (diff[k - 1] - diff[k])
    eer = far[k - 1] + alpha * (far[k] - far[k - 1])
    hi = thresholds[k] if np.isfinite(thresholds[k]) else thresholds[k - 1]
    return float(eer), float(thresholds[k - 1] + alpha * (hi - thresholds[k - 1]))


def genuine_impostor(d: ScoreMatrix):
    if d.truth is None:
        raise MissingGroundTruth("score matrix carries no ground truth")
    n, _ = d.shape
    is_true = np.zeros(d.shape, dtype=bool)
    is_true[np.arange(n), d.truth] = True
    return d.scores[is_true], d.scores[~is_true]


def true_ranks(d: ScoreMatrix) -> np.ndarray:
    """1-based rank of each probe's true identity; ties rank the lower index first."""
    if d.truth is None:
        raise MissingGroundTruth("score matrix carries no ground truth")
    n, m = d.shape
    true_scores = d.scores[np.arange(n), d.truth][:, None]
    cols = np.arange(m)[None, :]
    ahead = (d.scores > true_scores) | ((d.scores == true_scores) & (cols < d.truth[:, None]))
    return 1 + ahead.sum(axis=1)


def compute_cmc(d: ScoreMatrix) -> np.ndarray:
    ranks = true_ranks(d)
    m = d.shape[1]
    return np.array([np.mean(ranks <= r) for r in range(1, m + 1)])


def normalize_scores(d: ScoreMatrix) -> ScoreMatrix:
    """Per-probe min-max scaling to [0, 1]; constant rows become zeros."""
    s = d.scores
    lo = s.min(axis=1, keepdims=True)
    span = s.max(axis=1, keepdims=True) - lo
    scaled = np.divide(s - lo, span, out=np.zeros_like(s), where=span > 0)
    return ScoreMatrix(scaled, list(d.probe_ids), list(d.identity_ids), d.truth)


def one_to_one_match(d: ScoreMatrix | np.ndarray) -> list[tuple[int, int]]:
    """Greedy pairing by repeatedly taking the global maximum of the matrix.

    Returns ``(probe_index, identity_index)`` pairs in the order they were
    chosen. Ties resolve to the first maximum in row-major order.
    """
    s = d.scores if isinstance(d, ScoreMatrix) else np.asarray(d, dtype=float)
    n, m = s.shape
    if n != m:
        raise NonSquareMatrix(f"one-to-one matching needs a square matrix, got {n}x{m}")
    work = s.astype(float).copy()
    pairs = []
    for _ in range(n):
        row, col = np.unravel_index(int(np.argmax(work)), work.shape)
        work[row, :] = -np.inf
        work[:, col] = -np.inf
        pairs.append((int(row), int(col)))
    return pairs


def rank1_one_to_one(d: ScoreMatrix) -> float:
    if d.truth is None:
        raise MissingGroundTruth("score matrix carries no ground truth")
    pairs = one_to_one_match(d)
    return float(np.mean([d.truth[p] == c for p, c in pairs]))


def evaluate(d: ScoreMatrix, *, one_to_one=False, normalize=True) -> MetricReport:
    """Full metric report.

    EER uses per-probe min-max scores when ``normalize`` is set. Rank metrics
    and one-to-one matching use the raw scores: min-max gives every row a
    maximum of 1, which leaves the global-maximum search nothing to compare.
    """
    scored = normalize_scores(d) if normalize else d
    genuine, impostor = genuine_impostor(scored)
    eer, threshold = compute_eer(genuine, impostor)
    _, far, frr = det_curve(genuine, impostor)
    cmc = compute_cmc(d)
    return MetricReport(
        eer=eer,
        eer_threshold=threshold,
        r1=float(cmc[0]),
        rank_accuracies=[float(v) for v in cmc],
        det_points=[(float(a), float(b)) for a, b in zip(far, frr)],
        r1_one_to_one=rank1_one_to_one(d) if one_to_one else None,
    )


def write_det_csv(report: MetricReport, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["far", "frr"])
        for far, frr in report.det_points:
            writer.writerow([repr(far), repr(frr)])
    return path


def write_cmc_csv(report: MetricReport, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["rank", "accuracy"])
        for rank, acc in enumerate(report.rank_accuracies, start=1):
            writer.writerow([rank, repr(acc)])
    return path
