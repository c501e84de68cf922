"""Exact k-nearest-neighbor queries and farthest point sampling.

Both operations define a strict tie rule so results are reproducible:
neighbors are ordered by ascending Euclidean distance with ties broken by
ascending point index, and farthest point sampling breaks max-distance ties
by ascending index. Queries are exact vectorized scans; at the cloud sizes
this package targets (<= a few thousand points) that is both fast and free
of the tie-order ambiguity an acceleration structure would introduce.
"""

from __future__ import annotations

import numpy as np

from .cloud import PointCloud

_CHUNK = 256  # query rows per distance block, bounds peak memory


def _as_points(obj) -> np.ndarray:
    coords = obj.coords if isinstance(obj, PointCloud) else np.asarray(obj, dtype=np.float64)
    coords = np.atleast_2d(coords)
    if coords.ndim != 2 or coords.shape[1] != 3:
        raise ValueError(f"expected (N, 3) coordinates, got {coords.shape}")
    return coords


class KnnIndex:
    """Read-only neighbor index over a fixed set of points.

    Thread-safe for concurrent queries (queries never mutate the index).
    """

    def __init__(self, points) -> None:
        self.points = np.ascontiguousarray(_as_points(points))
        self.points.setflags(write=False)

    def __len__(self) -> int:
        return self.points.shape[0]

    def query(self, queries, k: int) -> tuple[np.ndarray, np.ndarray]:
        """k nearest points for each query row.

        Returns (indices, distances), each of shape (M, k) for (M, 3) input
        or (k,) for a single query point. The query point itself is a valid
        neighbor when it belongs to the indexed set (distance 0 first).
        """
        q = np.asarray(queries, dtype=np.float64)
        single = q.ndim == 1
        q = np.atleast_2d(q)
        if q.shape[1] != 3:
            raise ValueError(f"queries must be (M, 3), got {q.shape}")
        n = len(self)
        if not 1 <= k <= n:
            raise ValueError(f"k={k} out of range for index of {n} points")
        idx = np.empty((q.shape[0], k), dtype=np.intp)
        dist = np.empty((q.shape[0], k), dtype=np.float64)
        for lo in range(0, q.shape[0], _CHUNK):
            hi = min(lo + _CHUNK, q.shape[0])
            diff = q[lo:hi, None, :] - self.points[None, :, :]
            d2 = np.einsum("mnc,mnc->mn", diff, diff)
            # stable sort on distance keeps ascending-index order inside ties
            order = np.argsort(d2, axis=1, kind="stable")[:, :k]
            idx[lo:hi] = order
            dist[lo:hi] = np.sqrt(np.take_along_axis(d2, order, axis=1))
        if single:
            return idx[0], dist[0]
        return idx, dist

    def self_neighbor_table(self, k: int) -> np.ndarray:
        """(N, k) neighbor indices of the indexed points themselves."""
        indices, _ = self.query(self.points, k)
        return indices


def build_index(cloud) -> KnnIndex:
    return KnnIndex(cloud)


def knn(index: KnnIndex, query, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Functional form of :meth:`KnnIndex.query`."""
    return index.query(query, k)


def fps_indices(points, m: int, start: int = 0) -> np.ndarray:
    """Greedy farthest point sampling over raw coordinates.

    Repeatedly picks the point maximizing the distance to the selected set;
    ties resolve to the lowest index (argmax returns the first maximum).
    """
    coords = _as_points(points)
    n = coords.shape[0]
    if not 1 <= m <= n:
        raise ValueError(f"cannot sample {m} points from {n}")
    if not 0 <= start < n:
        raise ValueError(f"start index {start} out of range for {n} points")
    selected = np.empty(m, dtype=np.intp)
    selected[0] = start
    diff = coords - coords[start]
    min_d2 = np.einsum("nc,nc->n", diff, diff)
    for i in range(1, m):
        nxt = int(np.argmax(min_d2))
        selected[i] = nxt
        diff = coords - coords[nxt]
        np.minimum(min_d2, np.einsum("nc,nc->n", diff, diff), out=min_d2)
    return selected


def farthest_point_sample(cloud, m: int, start: int = 0) -> np.ndarray:
    """FPS over a cloud or coordinate array; returns the selected indices."""
    return fps_indices(cloud, m, start)
