"""Offline sample generation: response clustering and adaptive boundary refinement.

The generator starts from a small uniform grid over the control-parameter
interval, clusters the solver responses by pattern (k-means on the field
vectors), and as long as any cluster holds fewer than ``q_min`` samples it
inserts the midpoint of every adjacent pair of samples whose labels differ --
i.e. it refines exactly where the response pattern switches.  The loop stops
once every cluster is populated well enough for its own sub-regressor.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .dataset import ClusteredDataset, LabeledDataset, canonicalize_labels, is_duplicate
from .errors import ConvergenceFailure, InvalidParameter
from .seeding import rng_for
from .solvers import Solver, label_samples

log = logging.getLogger(__name__)

# Namespace tag for k-means restart streams (see seeding.rng_for).
_KMEANS_TAG = 7


@dataclass(frozen=True)
class SamplingConfig:
    """Knobs of the adaptive generator.

    ``kmeans_tol=None`` resolves to ``1e-8 * (max|Y| + 1)`` against the data
    being clustered, so the stopping test scales with the response magnitude.
    """

    chi_min: float
    chi_max: float
    m0: int = 5
    k: int = 3
    q_min: int = 4
    kmeans_tol: float | None = None
    kmeans_max_iter: int = 100
    kmeans_restarts: int = 10
    outer_max_iter: int = 50
    seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.chi_min) or not np.isfinite(self.chi_max):
            raise InvalidParameter("chi_min/chi_max must be finite")
        if not self.chi_min < self.chi_max:
            raise InvalidParameter(
                f"need chi_min < chi_max, got [{self.chi_min}, {self.chi_max}]"
            )
        if self.m0 < 2:
            raise InvalidParameter(f"initial grid needs at least 2 points, got {self.m0}")
        if self.k < 1:
            raise InvalidParameter(f"cluster count must be >= 1, got {self.k}")
        if self.m0 < self.k:
            raise InvalidParameter(
                f"initial grid ({self.m0}) must hold at least k={self.k} samples"
            )
        if self.q_min < 1:
            raise InvalidParameter(f"q_min must be >= 1, got {self.q_min}")
        if self.kmeans_tol is not None and self.kmeans_tol < 0:
            raise InvalidParameter("kmeans_tol must be >= 0")
        if self.kmeans_max_iter < 1 or self.kmeans_restarts < 1 or self.outer_max_iter < 1:
            raise InvalidParameter("iteration/restart budgets must be >= 1")


def uniform_grid(chi_min: float, chi_max: float, m: int) -> np.ndarray:
    """``m`` equally spaced control parameters including both endpoints."""
    if m < 2:
        raise InvalidParameter(f"a uniform grid needs at least 2 points, got {m}")
    if not chi_min < chi_max:
        raise InvalidParameter(f"need chi_min < chi_max, got [{chi_min}, {chi_max}]")
    return np.linspace(float(chi_min), float(chi_max), int(m))


@dataclass(frozen=True)
class KMeansResult:
    centroids: np.ndarray  # (k, N); row j-1 belongs to label j
    labels: np.ndarray  # (M,) ints in 1..k, canonicalized by first occurrence
    sse: float
    iterations: int


def _squared_distances(outputs: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """d2[j, i] = squared Euclidean distance of sample column i to centroid j."""
    diff = centroids[:, :, None] - outputs[None, :, :]
    return np.einsum("kni,kni->ki", diff, diff)


def _lloyd(outputs, centroids, tol, max_iter):
    k, m = centroids.shape[0], outputs.shape[1]
    labels = None
    for it in range(1, max_iter + 1):
        d2 = _squared_distances(outputs, centroids)
        new_labels = d2.argmin(axis=0)  # ties: lowest cluster index
        counts = np.bincount(new_labels, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            # Repair: hand the sample farthest from its current centroid to the
            # empty cluster, never emptying a singleton in the process.
            own = d2[new_labels, np.arange(m)]
            movable = np.flatnonzero(counts[new_labels] > 1)
            donor = movable[np.argmax(own[movable])]
            counts[new_labels[donor]] -= 1
            new_labels[donor] = empty
            counts[empty] += 1
        converged = labels is not None and np.array_equal(new_labels, labels)
        labels = new_labels
        new_centroids = np.empty_like(centroids)
        for j in range(k):
            new_centroids[j] = outputs[:, labels == j].mean(axis=1)
        shift = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
        centroids = new_centroids
        if converged or shift <= tol:
            break
    sse = float(((outputs - centroids[labels].T) ** 2).sum())
    return centroids, labels, sse, it


def kmeans(
    outputs,
    k: int,
    *,
    tol: float | None = None,
    max_iter: int = 100,
    n_restarts: int = 10,
    seed=0,
) -> KMeansResult:
    """Cluster sample columns by Euclidean distance (Lloyd iterations).

    Initial centroids are ``k`` distinct sample columns drawn per restart; the
    restart with the lowest sum of squared distances wins (earliest on ties).
    Returned labels are 1-based and canonicalized by first occurrence, and the
    returned centroids are exactly the means of their assigned columns.
    """
    outputs = np.asarray(outputs, dtype=float)
    if outputs.ndim != 2:
        raise InvalidParameter(f"outputs must be 2-D (N, M), got shape {outputs.shape}")
    if not np.all(np.isfinite(outputs)):
        raise InvalidParameter("outputs contain non-finite values")
    m = outputs.shape[1]
    if k < 1:
        raise InvalidParameter(f"cluster count must be >= 1, got {k}")
    if m < k:
        raise InvalidParameter(f"cannot split {m} samples into {k} clusters")
    if n_restarts < 1 or max_iter < 1:
        raise InvalidParameter("restart/iteration budgets must be >= 1")
    if tol is None:
        tol = 1e-8 * (float(np.abs(outputs).max(initial=0.0)) + 1.0)

    best = None
    for restart in range(n_restarts):
        rng = rng_for(seed, _KMEANS_TAG, restart)
        init = outputs[:, rng.choice(m, size=k, replace=False)].T.copy()
        centroids, labels, sse, iters = _lloyd(outputs, init, tol, max_iter)
        if best is None or sse < best[0]:
            best = (sse, centroids, labels, iters)
    sse, centroids, labels, iters = best
    canonical = canonicalize_labels(labels + 1, k)
    # Permute centroid rows to match the canonical labels.
    perm = np.empty(k, dtype=int)
    for old, new in {int(o): int(c) for o, c in zip(labels, canonical)}.items():
        perm[new - 1] = old
    return KMeansResult(centroids[perm], canonical, sse, iters)


def boundary_midpoints(inputs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Midpoints of adjacent sample pairs whose cluster labels differ.

    ``inputs`` must be sorted ascending (dataset order).  Midpoints that
    collide with an existing sample under the duplicate tolerance are dropped
    (they could not be added to the dataset anyway).
    """
    inputs = np.asarray(inputs, dtype=float)
    labels = np.asarray(labels)
    mids = []
    for i in range(inputs.shape[0] - 1):
        if labels[i] != labels[i + 1]:
            mid = 0.5 * (inputs[i] + inputs[i + 1])
            if not (is_duplicate(mid, inputs[i]) or is_duplicate(mid, inputs[i + 1])):
                mids.append(mid)
    return np.array(mids, dtype=float)


def cluster_dataset(ds: LabeledDataset, config: SamplingConfig, round_tag: int = 0) -> ClusteredDataset:
    """Cluster an existing dataset's responses under ``config``."""
    result = kmeans(
        ds.outputs,
        config.k,
        tol=config.kmeans_tol,
        max_iter=config.kmeans_max_iter,
        n_restarts=config.kmeans_restarts,
        seed=(config.seed, round_tag),
    )
    return ClusteredDataset(ds.inputs, ds.outputs, labels=result.labels, k=config.k)


def _deficient(sizes: np.ndarray, q_min: int) -> list[int]:
    return [j + 1 for j in range(sizes.shape[0]) if sizes[j] < q_min]


def adaptive_generate(solver: Solver, config: SamplingConfig) -> ClusteredDataset:
    """Generate a clustered training set for ``solver`` by boundary refinement.

    Raises :class:`ConvergenceFailure` if some cluster still holds fewer than
    ``q_min`` samples after the outer iteration budget, or when no refinable
    boundary is left (the message names the deficient clusters).
    """
    ds = label_samples(solver, uniform_grid(config.chi_min, config.chi_max, config.m0))
    history = []
    for round_no in range(config.outer_max_iter):
        cds = cluster_dataset(ds, config, round_tag=round_no)
        sizes = cds.cluster_sizes()
        record = {
            "round": round_no,
            "m": cds.m,
            "cluster_sizes": [int(s) for s in sizes],
            "added": [],
        }
        history.append(record)
        deficient = _deficient(sizes, config.q_min)
        if not deficient:
            log.debug(
                "sampling converged after %d round(s): m=%d sizes=%s",
                round_no + 1, cds.m, record["cluster_sizes"],
            )
            return ClusteredDataset(
                cds.inputs, cds.outputs, labels=cds.labels, k=cds.k,
                history=tuple(history),
            )
        mids = boundary_midpoints(cds.inputs, cds.labels)
        if mids.size == 0:
            raise ConvergenceFailure(
                f"clusters {deficient} hold fewer than q_min={config.q_min} samples "
                "but no cluster boundary is left to refine"
            )
        record["added"] = [float(v) for v in mids]
        log.debug(
            "round %d: m=%d sizes=%s deficient=%s adding %d midpoint(s)",
            round_no, cds.m, record["cluster_sizes"], deficient, mids.size,
        )
        ds = ds.merged(mids, label_samples(solver, mids).outputs)
    cds = cluster_dataset(ds, config, round_tag=config.outer_max_iter)
    deficient = _deficient(cds.cluster_sizes(), config.q_min)
    raise ConvergenceFailure(
        f"clusters {deficient} still hold fewer than q_min={config.q_min} samples "
        f"after {config.outer_max_iter} refinement rounds (m={cds.m})"
    )
