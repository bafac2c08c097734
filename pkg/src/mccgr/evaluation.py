"""Clustering of coefficient columns and agreement scores against labels.

Samples live in the columns of the matrix being clustered (for NMF output
that is W, one K-dimensional column per sample). Accuracy matches cluster
ids to class ids with an optimal assignment before counting hits; mutual
information is measured in nats and normalized by the larger entropy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DataError

__all__ = [
    "Clustering",
    "EvalReport",
    "MatchResult",
    "accuracy",
    "evaluate",
    "hungarian_match",
    "kmeans",
    "nmi",
]


@dataclass
class Clustering:
    assignments: np.ndarray
    centroids: np.ndarray
    inertia: float
    restarts_used: int


@dataclass
class MatchResult:
    accuracy: float
    matching: dict[int, int]
    confusion: np.ndarray


@dataclass
class EvalReport:
    accuracy: float
    nmi: float
    matching: dict[int, int]
    confusion: np.ndarray
    assignments: np.ndarray

    def as_dict(self) -> dict:
        """JSON-ready form: accuracy, nmi, matching, confusion."""
        return {
            "accuracy": self.accuracy,
            "nmi": self.nmi,
            "matching": {str(k): int(v) for k, v in self.matching.items()},
            "confusion": self.confusion.astype(int).tolist(),
        }


def _sq_dist(points, centroids):
    # (k, n) squared distances, clipped against tiny negative roundoff
    p2 = np.sum(points * points, axis=0)
    c2 = np.sum(centroids * centroids, axis=0)
    d2 = c2[:, None] + p2[None, :] - 2.0 * (centroids.T @ points)
    return np.maximum(d2, 0.0)


def _lloyd(points, init_idx, max_rounds=300):
    n = points.shape[1]
    k = len(init_idx)
    centroids = points[:, init_idx].copy()
    assign = None
    for _ in range(max_rounds):
        d2 = _sq_dist(points, centroids)
        new_assign = np.argmin(d2, axis=0)  # ties go to the lower cluster index
        # Empty-cluster repair: reseed, in ascending cluster order, to the
        # point currently farthest from its own centroid, claiming it so a
        # later empty cluster picks the next-farthest.
        own = None
        for j in range(k):
            if not np.any(new_assign == j):
                if own is None:
                    own = d2[new_assign, np.arange(n)]
                candidate = int(np.argmax(own))
                centroids[:, j] = points[:, candidate]
                new_assign[candidate] = j
                own[candidate] = 0.0
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for j in range(k):
            members = assign == j
            if np.any(members):
                centroids[:, j] = points[:, members].mean(axis=1)
    inertia = float(np.sum((points - centroids[:, assign]) ** 2))
    return assign, centroids, inertia


def kmeans(points, k: int, seed: int = 0, restarts: int = 10) -> Clustering:
    """Lloyd's algorithm over column vectors.

    Each restart seeds the centroids by sampling k distinct columns; the
    run with the lowest inertia wins (earliest on ties). Assignment breaks
    distance ties toward the lower cluster index; a cluster that empties is
    reseeded to the point farthest from its own centroid. Rounds are capped
    at 300 per restart.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise DataError(f"points must be 2-D, got shape {points.shape}")
    n = points.shape[1]
    if k < 1:
        raise DataError(f"k must be >= 1, got {k}")
    if k > n:
        raise DataError(f"k={k} exceeds the number of points {n}")
    if restarts < 1:
        raise DataError(f"restarts must be >= 1, got {restarts}")

    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        init_idx = rng.choice(n, size=k, replace=False)
        assign, centroids, inertia = _lloyd(points, init_idx)
        if best is None or inertia < best[2]:
            best = (assign, centroids, inertia)
    return Clustering(
        assignments=best[0].astype(np.int64),
        centroids=best[1],
        inertia=best[2],
        restarts_used=restarts,
    )


def hungarian_match(confusion) -> np.ndarray:
    """Permutation of columns maximizing the matched diagonal sum.

    confusion[i, j] counts points in cluster i with class j; the returned
    array maps cluster index i to its matched class index.
    """
    c = np.asarray(confusion, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise DataError(f"confusion matrix must be square, got shape {c.shape}")
    if np.any(c < 0):
        raise DataError("confusion matrix has negative counts")
    _, cols = linear_sum_assignment(-c)
    return cols.astype(np.int64)


def _check_labels(a, name):
    a = np.ascontiguousarray(a, dtype=np.int64)
    if a.ndim != 1 or a.shape[0] < 1:
        raise DataError(f"{name} must be a non-empty flat vector")
    return a


def accuracy(pred, true) -> MatchResult:
    """Clustering accuracy under the best cluster-to-class matching.

    The confusion matrix is padded to square when the id counts differ;
    `matching` maps each real cluster id to its matched real class id
    (padded ids never appear).
    """
    pred = _check_labels(pred, "predicted labels")
    true = _check_labels(true, "true labels")
    if pred.shape[0] != true.shape[0]:
        raise DataError(
            f"label vectors disagree in length: {pred.shape[0]} vs {true.shape[0]}"
        )
    n = pred.shape[0]
    pids, pinv = np.unique(pred, return_inverse=True)
    tids, tinv = np.unique(true, return_inverse=True)
    size = max(len(pids), len(tids))
    confusion = np.zeros((size, size), dtype=np.int64)
    np.add.at(confusion, (pinv, tinv), 1)
    perm = hungarian_match(confusion)
    matched = int(confusion[np.arange(size), perm].sum())
    matching = {
        int(pids[i]): int(tids[perm[i]])
        for i in range(len(pids))
        if perm[i] < len(tids)
    }
    return MatchResult(accuracy=matched / n, matching=matching, confusion=confusion)


def nmi(a, b) -> float:
    """Normalized mutual information in nats, MI / max(H(a), H(b)).

    Conventions for degenerate partitions: 1.0 when both sides have a
    single block, 0.0 when exactly one does.
    """
    a = _check_labels(a, "first labeling")
    b = _check_labels(b, "second labeling")
    if a.shape[0] != b.shape[0]:
        raise DataError(
            f"label vectors disagree in length: {a.shape[0]} vs {b.shape[0]}"
        )
    n = a.shape[0]
    _, ainv = np.unique(a, return_inverse=True)
    _, binv = np.unique(b, return_inverse=True)
    joint = np.zeros((ainv.max() + 1, binv.max() + 1), dtype=np.float64)
    np.add.at(joint, (ainv, binv), 1.0)
    p = joint / n
    pa = p.sum(axis=1)
    pb = p.sum(axis=0)
    ha = -float(np.sum(pa * np.log(pa, where=pa > 0, out=np.zeros_like(pa))))
    hb = -float(np.sum(pb * np.log(pb, where=pb > 0, out=np.zeros_like(pb))))
    if ha == 0.0 and hb == 0.0:
        return 1.0
    if ha == 0.0 or hb == 0.0:
        return 0.0
    mask = p > 0
    mi = float(np.sum(p[mask] * np.log(p[mask] / (pa[:, None] * pb[None, :])[mask])))
    return min(max(mi / max(ha, hb), 0.0), 1.0)


def evaluate(w, true_labels, k: int, seed: int = 0, restarts: int = 10) -> EvalReport:
    """Cluster the columns of w and score against the true labels."""
    true_labels = _check_labels(true_labels, "true labels")
    w = np.ascontiguousarray(w, dtype=np.float64)
    if w.ndim != 2 or w.shape[1] != true_labels.shape[0]:
        raise DataError(
            f"coefficient shape {w.shape} does not match {true_labels.shape[0]} labels"
        )
    clustering = kmeans(w, k, seed=seed, restarts=restarts)
    match = accuracy(clustering.assignments, true_labels)
    value = nmi(clustering.assignments, true_labels)
    return EvalReport(
        accuracy=match.accuracy,
        nmi=value,
        matching=match.matching,
        confusion=match.confusion,
        assignments=clustering.assignments,
    )
