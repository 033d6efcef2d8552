"""Online cluster assignment of query points by k-nearest-neighbor vote.

Distances are plain Euclidean on the control parameter.  Ties are broken in a
fixed order so classification is deterministic: equal distances prefer the
smaller training input, a tied vote prefers the label of the nearest neighbor
among the tied labels, and an (unreachable in practice) residual tie prefers
the lowest label index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import ClusteredDataset
from .errors import InvalidParameter

DEFAULT_NEIGHBORS = 3


@dataclass(frozen=True)
class NearestNeighborClassifier:
    """Maps a control parameter to the cluster of its nearest training samples.

    Attributes
    ----------
    x:
        Training inputs, ascending (dataset order), shape (M,).
    labels:
        Cluster label per training input, ints in 1..k, shape (M,).
    k:
        Number of clusters.
    n_neighbors:
        Vote size; capped by M at construction time.
    """

    x: np.ndarray
    labels: np.ndarray
    k: int
    n_neighbors: int = DEFAULT_NEIGHBORS

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        if x.ndim != 1 or labels.shape != x.shape:
            raise InvalidParameter(
                f"inputs {x.shape} and labels {labels.shape} must be matching 1-D arrays"
            )
        if x.size == 0:
            raise InvalidParameter("classifier needs at least one training sample")
        if not np.all(np.isfinite(x)):
            raise InvalidParameter("training inputs contain non-finite values")
        if np.any(np.diff(x) <= 0):
            raise InvalidParameter("training inputs must be strictly ascending")
        if self.k < 1 or labels.min() < 1 or labels.max() > self.k:
            raise InvalidParameter(f"labels must lie in 1..{self.k}")
        if not 1 <= self.n_neighbors <= x.size:
            raise InvalidParameter(
                f"n_neighbors must lie in 1..{x.size}, got {self.n_neighbors}"
            )
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_dataset(cls, ds: ClusteredDataset, n_neighbors: int = DEFAULT_NEIGHBORS):
        return cls(ds.inputs, ds.labels, ds.k, min(n_neighbors, ds.m))

    def classify(self, chi: float) -> int:
        """Cluster label for one query point."""
        return int(self.classify_batch([chi])[0])

    def classify_batch(self, queries) -> np.ndarray:
        """Cluster labels for an array of query points.

        Vectorized over queries so batch classification costs one distance
        matrix and one sort rather than a Python loop.
        """
        queries = np.atleast_1d(np.asarray(queries, dtype=float))
        if queries.ndim != 1:
            raise InvalidParameter(f"queries must be 1-D, got shape {queries.shape}")
        if queries.size == 0:
            return np.zeros(0, dtype=int)
        if not np.all(np.isfinite(queries)):
            raise InvalidParameter("queries contain non-finite values")
        p = queries.size
        nn = self.n_neighbors
        # The nn nearest training points in 1-D (ties included) lie within nn
        # positions of the insertion index on either side, so a binary search
        # plus a tiny per-row sort replaces a full distance sort.
        lo = np.searchsorted(self.x, queries) - nn
        lo = np.clip(lo, 0, max(self.x.size - 2 * nn, 0))
        cand = lo[:, None] + np.arange(min(2 * nn, self.x.size))[None, :]
        dist = np.abs(self.x[cand] - queries[:, None])
        # Candidates are in ascending chi, so a stable sort on distance makes
        # equal distances pick the smaller training input.
        order = np.argsort(dist, axis=1, kind="stable")[:, :nn]
        picked = self.labels[np.take_along_axis(cand, order, axis=1)]  # (P, nn)
        votes = (picked[:, :, None] == np.arange(1, self.k + 1)).sum(axis=1)
        # Winner: the first neighbor (in distance order) whose label's vote
        # count is maximal.  With a unique majority that is the majority label;
        # on a tied vote it is the label of the nearest tied neighbor.
        top = votes.max(axis=1)
        rows = np.arange(p)[:, None]
        is_top = votes[rows, picked - 1] == top[:, None]
        return picked[np.arange(p), np.argmax(is_top, axis=1)]

    def partition(self, queries) -> list[tuple[int, np.ndarray]]:
        """Group query indices by predicted cluster, ascending cluster id.

        Returns ``(cluster, indices)`` pairs covering every query exactly
        once; the index arrays recover the original query order.
        """
        assigned = self.classify_batch(queries)
        groups = []
        for cluster in range(1, self.k + 1):
            idx = np.flatnonzero(assigned == cluster)
            if idx.size:
                groups.append((cluster, idx))
        return groups
