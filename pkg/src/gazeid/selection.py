"""Wrapper-based backward feature selection with an RBF network in the loop."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np

from gazeid.errors import InsufficientSubjects
from gazeid.evaluation import compute_eer
from gazeid.features import FEATURE_NAMES, FeatureMask
from gazeid.model import activations, build_neurons, one_hot, solve_weights
from gazeid.segment import FIXATION, SACCADE, Kind

log = logging.getLogger(__name__)


def split_half(per_subject, rng):
    """Per-subject random halves: (train, held-out), each a list of matrices."""
    train, held = [], []
    for rows in per_subject:
        order = rng.permutation(len(rows))
        cut = (len(rows) + 1) // 2
        train.append(rows[order[:cut]])
        held.append(rows[order[cut:]])
    return train, held


def _zscore(train, held):
    stacked = np.vstack(train)
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0)
    scale = np.where(std > 0, std, 1.0)

    def norm(m):
        return np.where(std > 0, (m - mean) / scale, 0.0)

    return [norm(m) for m in train], [norm(m) for m in held]


def subset_eer(train, held, columns, *, k, seed, kind=FIXATION, max_iter=100) -> float:
    """EER of an RBF network restricted to ``columns``.

    Trained on ``train`` (one matrix per subject); every held-out segment is
    a probe, its true-class output genuine and the other outputs impostors.
    """
    columns = np.asarray(columns, dtype=int)
    if columns.size == 0:
        return np.inf
    grouped = {j: m[:, columns] for j, m in enumerate(train)}
    neurons = build_neurons(grouped, k=k, seed=seed, kind=kind, max_iter=max_iter)
    x = np.vstack(list(grouped.values()))
    labels = np.concatenate([np.full(len(m), j) for j, m in enumerate(train)])
    weights = solve_weights(activations(x, neurons), one_hot(labels, len(train)))
    probes = np.vstack([m[:, columns] for m in held])
    truth = np.concatenate([np.full(len(m), j) for j, m in enumerate(held)])
    scores = activations(probes, neurons) @ weights
    is_true = np.zeros(scores.shape, dtype=bool)
    is_true[np.arange(len(truth)), truth] = True
    return compute_eer(scores[is_true], scores[~is_true])[0]


def backward_pass(train, held, n_features, *, k, seed, kind=FIXATION, max_iter=100) -> np.ndarray:
    """One sweep over the features: keep a feature only if including it lowers the EER."""
    cache: dict[tuple, float] = {}

    def eer(flags):
        key = tuple(int(f) for f in flags)
        if key not in cache:
            cache[key] = subset_eer(train, held, np.flatnonzero(flags), k=k, seed=seed, kind=kind, max_iter=max_iter)
        return cache[key]

    feature_list = np.ones(n_features, dtype=int)
    for i in range(n_features):
        w = feature_list.copy()
        best = np.inf
        for j in (0, 1):
            w[i] = j
            t = eer(w)
            if t < best:
                feature_list[i] = j
                best = t
    return feature_list


def backward_select(per_subject, kind: Kind = FIXATION, rounds: int = 10, seed: int = 0, *,
                    names=None, k: int = 32, max_iter: int = 100, return_votes=False):
    """Backward selection repeated on random 50% splits, aggregated by majority vote.

    ``per_subject`` maps subject id to a raw feature matrix (rows = segments).
    Each round splits every subject's segments in half, trains on one half and
    scores the other. ``k`` is capped at half the smallest training half, so
    neurons average at least two members; singleton clusters hit the sigma
    floor and score every held-out probe as zero.
    """
    subjects = list(per_subject)
    if len(subjects) < 2:
        raise InsufficientSubjects(f"feature selection needs at least 2 subjects, got {len(subjects)}")
    mats = [np.asarray(per_subject[s], dtype=float) for s in subjects]
    n_features = mats[0].shape[1]
    names = tuple(names) if names is not None else FEATURE_NAMES[kind]
    if len(names) != n_features:
        raise ValueError(f"{len(names)} names for {n_features} feature columns")
    if min(len(m) for m in mats) < 2:
        raise InsufficientSubjects("every subject needs at least 2 segments to split")

    votes = np.zeros(n_features, dtype=int)
    for r in range(rounds):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), r]))
        train, held = _zscore(*split_half(mats, rng))
        k_eff = max(1, min(k, min(len(m) for m in train) // 2))
        round_seed = int(rng.integers(2**31))
        flags = backward_pass(train, held, n_features, k=k_eff, seed=round_seed, kind=kind, max_iter=max_iter)
        log.info("selection round %d kept %d/%d features", r + 1, int(flags.sum()), n_features)
        votes += flags

    keep = votes * 2 > rounds
    if not keep.any():
        keep[int(np.argmax(votes))] = True
    mask = FeatureMask({n: bool(f) for n, f in zip(names, keep)}, kind)
    return (mask, votes) if return_votes else mask


def save_masks(fix_mask: FeatureMask, sacc_mask: FeatureMask, path) -> Path:
    path = Path(path)
    doc = {
        "stimulus_kind": fix_mask.stimulus_kind.value,
        "fixation": list(fix_mask.names),
        "saccade": list(sacc_mask.names),
    }
    path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return path


def load_masks(path):
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    stim = doc.get("stimulus_kind", "SYNTH")
    return (
        FeatureMask.from_names(doc["fixation"], FIXATION, stim),
        FeatureMask.from_names(doc["saccade"], SACCADE, stim),
    )
