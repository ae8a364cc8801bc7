"""K-means over discretized predictor segments, per coordinate.

Lloyd's algorithm with k-means++ seeding and restarts. Latitude and
longitude are clustered independently; each storm then belongs to a
(lat-cluster, lon-cluster) pair.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ShapeError
from .ingest import TrajectoryWindow


@dataclass(frozen=True)
class KMeansModel:
    k: int
    centroids: np.ndarray            # k x P
    inertia: float
    seed: int
    iterations_run: int
    inertia_trace: tuple[float, ...] = ()

    def __post_init__(self):
        if self.centroids.shape[0] != self.k:
            raise ShapeError("centroid count does not match k")
        if self.inertia < 0:
            raise ShapeError("inertia must be non-negative")

    @property
    def segment_length(self) -> int:
        return self.centroids.shape[1]

    def to_json(self) -> str:
        return json.dumps({
            "k": self.k,
            "P": self.segment_length,
            "seed": self.seed,
            "centroids": self.centroids.ravel().tolist(),
            "inertia": self.inertia,
        })

    @staticmethod
    def from_json(text: str) -> "KMeansModel":
        d = json.loads(text)
        return KMeansModel(
            k=d["k"],
            centroids=np.array(d["centroids"]).reshape(d["k"], d["P"]),
            inertia=d["inertia"], seed=d["seed"], iterations_run=0,
        )


@dataclass(frozen=True)
class ClusterPairAssignment:
    storm_id: str
    lat_cluster: int
    lon_cluster: int


def _labels_and_inertia(points: np.ndarray,
                        centroids: np.ndarray) -> tuple[np.ndarray, float]:
    d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    return labels, float(d2[np.arange(len(points)), labels].sum())


def _kmeanspp_init(points: np.ndarray, k: int,
                   rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    d2 = ((points - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centroids[j] = points[rng.integers(n)]
        else:
            centroids[j] = points[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((points - centroids[j]) ** 2).sum(axis=1))
    return centroids


def _lloyd(points: np.ndarray, k: int, rng: np.random.Generator,
           max_iter: int) -> tuple[np.ndarray, np.ndarray, float, int, list[float]]:
    centroids = _kmeanspp_init(points, k, rng)
    labels, inertia = _labels_and_inertia(points, centroids)
    trace = [inertia]
    for it in range(1, max_iter + 1):
        new_centroids = centroids.copy()
        for j in range(k):
            members = points[labels == j]
            if len(members):
                new_centroids[j] = members.mean(axis=0)
            else:
                # reseed an empty cluster at the point farthest from its centroid
                d2 = ((points - centroids[labels]) ** 2).sum(axis=1)
                new_centroids[j] = points[int(np.argmax(d2))]
        new_labels, new_inertia = _labels_and_inertia(points, new_centroids)
        centroids = new_centroids
        trace.append(new_inertia)
        if np.array_equal(new_labels, labels):
            labels, inertia = new_labels, new_inertia
            return centroids, labels, inertia, it, trace
        labels, inertia = new_labels, new_inertia
    return centroids, labels, inertia, max_iter, trace


def kmeans_fit(segments: np.ndarray, k: int, seed: int = 0,
               max_iter: int = 100, n_restarts: int = 10) -> KMeansModel:
    """Best-of-restarts Lloyd's algorithm; deterministic for a fixed seed."""
    points = np.asarray(segments, dtype=float)
    if points.ndim != 2:
        raise ShapeError("segments must be an n x P array")
    n = len(points)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise ValueError(f"k={k} exceeds sample count n={n}")

    best = None
    for restart in range(n_restarts):
        rng = np.random.default_rng(seed + restart)
        centroids, labels, inertia, iters, trace = _lloyd(points, k, rng, max_iter)
        if best is None or inertia < best[2]:
            best = (centroids, labels, inertia, iters, trace)
    centroids, labels, inertia, iters, trace = best
    return KMeansModel(k=k, centroids=centroids, inertia=inertia, seed=seed,
                       iterations_run=iters, inertia_trace=tuple(trace))


def assign(model: KMeansModel, segment: Sequence[float]) -> int:
    """Nearest centroid in squared Euclidean distance; ties go to the lowest index."""
    segment = np.asarray(segment, dtype=float)
    if segment.shape != (model.segment_length,):
        raise ShapeError(
            f"segment length {segment.shape} does not match centroid length "
            f"{model.segment_length}")
    d2 = ((model.centroids - segment) ** 2).sum(axis=1)
    return int(np.argmin(d2))


def assign_batch(model: KMeansModel, segments: np.ndarray) -> np.ndarray:
    segments = np.asarray(segments, dtype=float)
    if segments.shape[1] != model.segment_length:
        raise ShapeError("segment length does not match centroid length")
    labels, _ = _labels_and_inertia(segments, model.centroids)
    return labels


def assign_pairs(lat_model: KMeansModel, lon_model: KMeansModel,
                 windows: Sequence[TrajectoryWindow]) -> list[ClusterPairAssignment]:
    """Per-storm (lat-cluster, lon-cluster) pair from the predictor segments."""
    return [
        ClusterPairAssignment(
            storm_id=w.storm_id,
            lat_cluster=assign(lat_model, w.lat_predictor),
            lon_cluster=assign(lon_model, w.lon_predictor),
        )
        for w in windows
    ]
