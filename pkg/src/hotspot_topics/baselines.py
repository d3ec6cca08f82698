"""Nearest-neighbor and k-means comparison strategies.

Both strategies compare samples by the Euclidean distance between their
relative abundance vectors after the target taxon has been deleted and the
remainder renormalized.  A sample made only of the target taxon has no
defined masked vector and is infinitely far from everything.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

MAX_LLOYD_ITER = 300


def masked_vector(counts, v_star: int) -> np.ndarray:
    """Renormalized abundances without ``v_star``; all-NaN if nothing is left."""
    c = np.delete(np.asarray(counts, dtype=float), v_star)
    total = c.sum()
    if total <= 0:
        return np.full(c.shape, np.nan)
    return c / total


def _masked_matrix(samples, v_star) -> np.ndarray:
    return np.array([masked_vector(s.counts, v_star) for s in samples]).reshape(len(samples), -1)


def _distances(points: np.ndarray, x: np.ndarray) -> np.ndarray:
    d = np.sqrt(((points - x) ** 2).sum(axis=1))
    return np.where(np.isnan(d), np.inf, d)


def masked_distance(a, b, v_star: int) -> float:
    if len(a.counts) != len(b.counts):
        raise InputError("samples have different vocabulary sizes")
    x = masked_vector(a.counts, v_star)
    y = masked_vector(b.counts, v_star)
    return float(_distances(x[None, :], y)[0])


def _first_min(d: np.ndarray) -> int:
    """Index of the smallest entry; ties and all-inf go to the lowest index."""
    return int(np.argmin(d))


def nn_predict(train, test, v_star: int) -> float:
    """Target abundance of the most similar training sample.

    Ties go to the earliest sample in time.
    """
    train = sorted(train, key=lambda s: s.time)
    if not train:
        raise InputError("empty training set")
    index = NearestNeighborIndex(train, v_star)
    return index.predict(test)


class NearestNeighborIndex:
    """Exhaustive-search predictor with the masked training matrix cached."""

    def __init__(self, train, v_star: int):
        train = sorted(train, key=lambda s: s.time)
        if not train:
            raise InputError("empty training set")
        self.v_star = v_star
        self.points = _masked_matrix(train, v_star)
        self.target = np.array([s.rel_abundance[v_star] for s in train])

    def predict(self, test) -> float:
        x = masked_vector(test.counts, self.v_star)
        return float(self.target[_first_min(_distances(self.points, x))])


@dataclass(eq=False)
class CentroidSet:
    centroids: np.ndarray
    target_abundance: np.ndarray
    v_star: int
    sse: float = float("nan")
    sse_trace: list = field(default_factory=list)
    n_iter: int = 0

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @classmethod
    def from_points(cls, train, v_star: int) -> "CentroidSet":
        """One centroid per training sample (the exhaustive-search limit)."""
        train = sorted(train, key=lambda s: s.time)
        pts = _masked_matrix(train, v_star)
        target = np.array([s.rel_abundance[v_star] for s in train])
        return cls(pts, target, v_star, sse=0.0)


def _assign(points, centroids):
    d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    return labels, d2[np.arange(len(points)), labels]


def _kmeanspp(points, k, rng):
    n = len(points)
    centers = [points[rng.integers(n)]]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            j = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            j = min(j, n - 1)
        else:
            j = int(rng.integers(n))
        centers.append(points[j])
        d2 = np.minimum(d2, ((points - points[j]) ** 2).sum(axis=1))
    return np.array(centers)


def lloyd(points: np.ndarray, centroids: np.ndarray, max_iter: int = MAX_LLOYD_ITER):
    """Lloyd iterations from the given centroids.

    Returns (centroids, labels, sse trace).  The trace holds the SSE of each
    assignment step, so it is non-increasing.  An emptied cluster is reseeded
    at the point farthest from its current centroid.
    """
    centroids = centroids.copy()
    labels, d2 = _assign(points, centroids)
    trace = [float(d2.sum())]
    for _ in range(max_iter):
        for j in range(len(centroids)):
            members = labels == j
            if members.any():
                centroids[j] = points[members].mean(axis=0)
        empty = [j for j in range(len(centroids)) if not (labels == j).any()]
        if empty:
            d2 = ((points - centroids[labels]) ** 2).sum(axis=1)
        for j in empty:
            far = int(np.argmax(d2))
            centroids[j] = points[far]
            labels[far] = j
            d2[far] = 0.0
        new_labels, d2 = _assign(points, centroids)
        trace.append(float(d2.sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return centroids, labels, trace


def kmeans_fit(train, k: int, v_star: int, rng, n_restarts: int = 10) -> CentroidSet:
    """k-means++ seeded Lloyd clustering of the masked training vectors.

    Each centroid also carries the mean target abundance of the training
    samples assigned to it.
    """
    train = sorted(train, key=lambda s: s.time)
    if k < 1:
        raise InputError("k must be >= 1")
    if k > len(train):
        raise InputError(f"k={k} exceeds the number of training samples ({len(train)})")
    points = _masked_matrix(train, v_star)
    ok = ~np.isnan(points).any(axis=1)
    if ok.sum() < k:
        raise InputError("too few training samples contain taxa other than the target")
    points = points[ok]
    target = np.array([s.rel_abundance[v_star] for s in train])[ok]
    best = None
    for _ in range(max(1, n_restarts)):
        cents, labels, trace = lloyd(points, _kmeanspp(points, k, rng))
        if best is None or trace[-1] < best[2][-1]:
            best = (cents, labels, trace)
    cents, labels, trace = best
    abundance = np.array([target[labels == j].mean() if (labels == j).any() else 0.0 for j in range(k)])
    return CentroidSet(cents, abundance, v_star, sse=trace[-1], sse_trace=trace, n_iter=len(trace) - 1)


def kmeans_predict(cs: CentroidSet, test, v_star: int | None = None) -> float:
    """Stored abundance of the nearest centroid; ties go to the lowest index."""
    if cs.k == 0:
        raise InputError("empty centroid set")
    v = cs.v_star if v_star is None else v_star
    x = masked_vector(test.counts, v)
    return float(cs.target_abundance[_first_min(_distances(cs.centroids, x))])
