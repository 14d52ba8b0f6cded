"""Task metrics: equal error rate and clustering misclassification rate."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .corpus import TrialList
from .errors import ConfigError, DegenerateTrialsError, UndefinedScoreError


@dataclass
class EerResult:
    eer: float  # fraction in [0, 1]
    threshold: float
    n_target: int
    n_nontarget: int


def _operating_points(target: np.ndarray, nontarget: np.ndarray):
    """FAR/FRR at every unique score plus a sentinel above the maximum.

    FAR(t) = fraction of non-targets with score >= t, FRR(t) = fraction of
    targets with score < t; FAR - FRR is non-increasing in t and changes
    sign somewhere on the sweep.
    """
    thresholds = np.unique(np.concatenate([target, nontarget]))
    tgt = np.sort(target)
    non = np.sort(nontarget)
    far = 1.0 - np.searchsorted(non, thresholds, side="left") / len(non)
    frr = np.searchsorted(tgt, thresholds, side="left") / len(tgt)
    thresholds = np.append(thresholds, np.inf)
    far = np.append(far, 0.0)
    frr = np.append(frr, 1.0)
    return thresholds, far, frr


def eer_from_scores(target: np.ndarray, nontarget: np.ndarray) -> EerResult:
    """EER via threshold sweep with linear interpolation at the crossing."""
    target = np.asarray(target, dtype=np.float64)
    nontarget = np.asarray(nontarget, dtype=np.float64)
    if len(target) == 0 or len(nontarget) == 0:
        raise DegenerateTrialsError(
            f"need both classes, got {len(target)} target / {len(nontarget)} non-target"
        )
    thresholds, far, frr = _operating_points(target, nontarget)
    diff = far - frr
    i = int(np.argmax(diff <= 0))  # first index at or past the crossing
    if diff[i] == 0:
        eer, theta = far[i], thresholds[i]
    else:
        t = diff[i - 1] / (diff[i - 1] - diff[i])
        eer = far[i - 1] + t * (far[i] - far[i - 1])
        theta = thresholds[i - 1] + t * (thresholds[i] - thresholds[i - 1])
    if not np.isfinite(theta):
        theta = float(thresholds[i - 1])
    return EerResult(float(eer), float(theta), len(target), len(nontarget))


def compute_eer(scores, trials: TrialList) -> EerResult:
    """EER of a score set aligned 1:1 with a trial list."""
    values = np.asarray(getattr(scores, "scores", scores), dtype=np.float64)
    if len(values) != len(trials):
        raise ConfigError(f"{len(values)} scores for {len(trials)} trials")
    mask = trials.is_target
    return eer_from_scores(values[mask], values[~mask])


@dataclass
class Partition:
    cluster_of: np.ndarray  # dense cluster id per item
    k: int


def _distance_matrix(points: np.ndarray, distance: str) -> np.ndarray:
    if distance == "euclidean":
        diff = points[:, None, :] - points[None, :, :]
        return np.sqrt((diff**2).sum(axis=2))
    if distance == "cosine":
        norms = np.linalg.norm(points, axis=1)
        if np.any(norms == 0):
            raise UndefinedScoreError("cosine distance undefined for zero vectors")
        unit = points / norms[:, None]
        return 1.0 - np.clip(unit @ unit.T, -1.0, 1.0)
    raise ConfigError(f"unknown distance {distance!r}")


def _linkage_distance(d: np.ndarray, a: list[int], b: list[int], linkage: str) -> float:
    block = d[np.ix_(a, b)]
    if linkage == "complete":
        return float(block.max())
    if linkage == "average":
        return float(block.mean())
    if linkage == "single":
        return float(block.min())
    raise ConfigError(f"unknown linkage {linkage!r}")


def hier_cluster(
    embeddings,
    k: int,
    linkage: str = "complete",
    distance: str = "cosine",
) -> Partition:
    """Agglomerative clustering from singletons down to k clusters.

    At every step the pair of clusters with minimal linkage distance merges;
    ties break on the smallest (i, j) position pair, and the merged cluster
    keeps position i.  Final ids are dense, ordered by smallest member index.
    """
    points = np.asarray(
        [getattr(e, "vector", e) for e in embeddings], dtype=np.float64
    )
    n = len(points)
    if k > n:
        raise ConfigError(f"k={k} exceeds {n} items")
    if k < 1:
        raise ConfigError("k must be >= 1")
    d = _distance_matrix(points, distance)
    clusters: list[list[int]] = [[i] for i in range(n)]
    while len(clusters) > k:
        best = None
        best_pair = None
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                dist = _linkage_distance(d, clusters[i], clusters[j], linkage)
                if best is None or dist < best:
                    best, best_pair = dist, (i, j)
        i, j = best_pair
        clusters[i] = clusters[i] + clusters[j]
        del clusters[j]

    clusters.sort(key=min)
    cluster_of = np.empty(n, dtype=np.int64)
    for cid, members in enumerate(clusters):
        cluster_of[members] = cid
    return Partition(cluster_of, len(clusters))


def misclassification_rate(partition: Partition, labels, majority: bool = False) -> float:
    """Fraction of items in the wrong speaker cluster.

    Default pairs clusters and speakers one-to-one (optimal assignment
    maximizing matched items).  ``majority=True`` instead scores each
    cluster against its own majority speaker, which may assign one speaker
    to several clusters.
    """
    labels = list(labels)
    n = len(labels)
    if n != len(partition.cluster_of):
        raise ConfigError(f"{n} labels for {len(partition.cluster_of)} items")
    speakers = sorted(set(labels))
    if not majority and partition.k != len(speakers):
        raise ConfigError(
            f"partition has {partition.k} clusters for {len(speakers)} speakers"
        )
    speaker_code = {s: i for i, s in enumerate(speakers)}
    contingency = np.zeros((partition.k, len(speakers)), dtype=np.int64)
    for item, label in enumerate(labels):
        contingency[partition.cluster_of[item], speaker_code[label]] += 1
    if majority:
        matched = contingency.max(axis=1).sum()
    else:
        rows, cols = scipy.optimize.linear_sum_assignment(contingency, maximize=True)
        matched = contingency[rows, cols].sum()
    return float(n - matched) / n


def save_scores_csv(path, trials: TrialList, scores) -> None:
    """Dump ``enroll,test,is_target,score`` rows for external DET tooling."""
    values = np.asarray(getattr(scores, "scores", scores), dtype=np.float64)
    ids = trials.utterance_ids
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["enroll", "test", "is_target", "score"])
        for e, t, y, s in zip(trials.enroll_idx, trials.test_idx, trials.is_target, values):
            writer.writerow([ids[e], ids[t], int(y), repr(float(s))])


def load_scores_csv(path):
    """Read a scores dump back as (is_target, scores) arrays."""
    is_target, scores = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["enroll", "test", "is_target", "score"]:
            raise ConfigError(f"{path}: unexpected scores header {header}")
        for row in reader:
            is_target.append(row[2] == "1")
            scores.append(float(row[3]))
    return np.asarray(is_target, dtype=bool), np.asarray(scores, dtype=np.float64)
