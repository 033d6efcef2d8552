"""End-to-end offline training and online prediction.

Offline: generate (or accept) a clustered training set, reduce each cluster's
snapshots to latent coordinates, and train one GP sub-regressor per cluster
on its latent rows.  Online: classify each query to a cluster by nearest
training samples, predict latent rows with that cluster's GP, and restore the
full field through the cluster's basis.

Models serialize to a versioned JSON document with base64-packed float64
arrays; loading refactorizes deterministically, so a round-tripped model
yields bit-identical predictions.
"""

from __future__ import annotations

import base64
import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .classify import DEFAULT_NEIGHBORS, NearestNeighborClassifier
from .dataset import ClusteredDataset, LabeledDataset
from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    InvalidParameter,
    IoError,
    ParseError,
    VersionMismatch,
)
from .gpr import GPModel, Hyperparams, OptimizerConfig
from .reduction import ReducedBasis, fit_basis, project, restore
from .sampling import SamplingConfig, adaptive_generate, cluster_dataset
from .solvers import Solver

log = logging.getLogger(__name__)

MODEL_FORMAT = "cag-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    """Everything offline training needs besides the data source."""

    sampling: SamplingConfig
    r: int = 50
    n_neighbors: int = DEFAULT_NEIGHBORS
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def __post_init__(self):
        if self.r < 1:
            raise InvalidParameter(f"reduction order must be >= 1, got {self.r}")
        if self.n_neighbors < 1:
            raise InvalidParameter(f"n_neighbors must be >= 1, got {self.n_neighbors}")


@dataclass
class SubRegressor:
    """One cluster's reduction basis plus its trained GP."""

    cluster: int
    basis: ReducedBasis
    gp: GPModel


@dataclass
class TrainedModel:
    """A full classify-then-predict surrogate."""

    field_length: int
    r_requested: int
    classifier: NearestNeighborClassifier
    subs: list[SubRegressor]
    provenance: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.classifier.k

    def sub(self, cluster: int) -> SubRegressor:
        for sub in self.subs:
            if sub.cluster == cluster:
                return sub
        raise InvalidParameter(f"model has no cluster {cluster}")


@dataclass
class Prediction:
    """Restored fields plus per-query latent variance and cluster assignment.

    ``fields`` is (N, P) with one column per query (queries keep their input
    order).  ``latent_variance`` is the shared posterior variance of the
    latent rows; ``field_variance`` (optional) pushes it through the basis as
    a diagonal approximation.
    """

    inputs: np.ndarray
    fields: np.ndarray
    latent_variance: np.ndarray
    clusters: np.ndarray
    field_variance: np.ndarray | None = None


def _train_subs(cds: ClusteredDataset, config: TrainConfig) -> list[SubRegressor]:
    subs = []
    for cluster in range(1, cds.k + 1):
        idx = cds.cluster_indices(cluster)
        x = cds.inputs[idx]
        snapshots = cds.outputs[:, idx]
        basis = fit_basis(snapshots, config.r)
        latent = project(basis, snapshots)
        optimizer = replace(config.optimizer, seed=(config.optimizer.seed, 50 + cluster))
        gp = GPModel.fit(x, latent, optimizer)
        log.debug(
            "cluster %d: m=%d r_eff=%d theta=(%.4g, %.4g, %.4g)",
            cluster, x.size, basis.r_eff,
            gp.hyperparams.ell, gp.hyperparams.sigma_f, gp.hyperparams.sigma_n,
        )
        subs.append(SubRegressor(cluster, basis, gp))
    return subs


def offline_train(
    config: TrainConfig,
    solver: Solver | None = None,
    dataset: LabeledDataset | None = None,
) -> TrainedModel:
    """Train a surrogate from a solver (adaptive sampling) or a given dataset.

    Exactly one of ``solver``/``dataset`` must be provided.  A plain
    :class:`LabeledDataset` is clustered first; a :class:`ClusteredDataset`
    is taken as-is.  Either way every cluster must reach ``q_min`` samples,
    otherwise training refuses with :class:`ConvergenceFailure`.
    """
    if (solver is None) == (dataset is None):
        raise InvalidParameter("provide exactly one of solver= or dataset=")
    if solver is not None:
        cds = adaptive_generate(solver, config.sampling)
        source = {"solver": solver.name, "solver_params": dict(solver.params)}
    else:
        if dataset.m == 0:
            raise InvalidParameter("cannot train on an empty dataset")
        if isinstance(dataset, ClusteredDataset):
            cds = dataset
        else:
            cds = cluster_dataset(dataset, config.sampling)
        deficient = [
            cluster + 1
            for cluster, size in enumerate(cds.cluster_sizes())
            if size < config.sampling.q_min
        ]
        if deficient:
            raise ConvergenceFailure(
                f"clusters {deficient} hold fewer than q_min={config.sampling.q_min} "
                "samples; provide more data or lower q_min"
            )
        source = {"solver": None, "solver_params": {}}
    classifier = NearestNeighborClassifier.from_dataset(cds, config.n_neighbors)
    subs = _train_subs(cds, config)
    provenance = {
        **source,
        "m": cds.m,
        "k": cds.k,
        "cluster_sizes": [int(s) for s in cds.cluster_sizes()],
        "cluster_ranges": {str(c): r for c, r in cds.cluster_ranges().items()},
        "history": list(cds.history) if cds.history else [],
        "config": {
            "chi_min": config.sampling.chi_min,
            "chi_max": config.sampling.chi_max,
            "m0": config.sampling.m0,
            "q_min": config.sampling.q_min,
            "r": config.r,
            "n_neighbors": config.n_neighbors,
            "seed": config.sampling.seed,
        },
    }
    return TrainedModel(cds.n, config.r, classifier, subs, provenance)


def train_uniform_baseline(
    solver: Solver,
    chi_min: float,
    chi_max: float,
    m: int,
    *,
    r: int = 50,
    optimizer: OptimizerConfig = OptimizerConfig(),
    n_neighbors: int = DEFAULT_NEIGHBORS,
    seed: int = 0,
) -> TrainedModel:
    """Single-cluster surrogate on a plain uniform grid of ``m`` samples.

    This is the comparison baseline: same reduction and GP machinery, but no
    clustering (k=1) and no adaptivity, so the sample budget ``m`` is spent
    uniformly over the interval.
    """
    sampling = SamplingConfig(chi_min, chi_max, m0=m, k=1, q_min=1, seed=seed)
    config = TrainConfig(sampling, r=r, n_neighbors=n_neighbors, optimizer=optimizer)
    return offline_train(config, solver=solver)


def online_predict(model: TrainedModel, queries, *, field_variance: bool = False) -> Prediction:
    """Classify each query, predict through its cluster's GP, restore fields."""
    queries = np.atleast_1d(np.asarray(queries, dtype=float))
    if queries.ndim != 1:
        raise InvalidParameter(f"queries must be 1-D, got shape {queries.shape}")
    if not np.all(np.isfinite(queries)):
        raise InvalidParameter("queries contain non-finite values")
    p = queries.shape[0]
    fields = np.zeros((model.field_length, p))
    variance = np.zeros(p)
    fvar = np.zeros((model.field_length, p)) if field_variance else None
    clusters = np.zeros(p, dtype=int)
    for cluster, idx in model.classifier.partition(queries):
        sub = model.sub(cluster)
        latent_mean, latent_var = sub.gp.predict(queries[idx])
        fields[:, idx] = restore(sub.basis, latent_mean)
        variance[idx] = latent_var
        clusters[idx] = cluster
        if field_variance:
            gain = (sub.basis.basis**2).sum(axis=1)  # (N,)
            fvar[:, idx] = gain[:, None] * latent_var[None, :]
    return Prediction(queries, fields, variance, clusters, fvar)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _pack(arr: np.ndarray) -> dict:
    arr = np.ascontiguousarray(arr, dtype="<f8")
    return {"shape": list(arr.shape), "data": base64.b64encode(arr.tobytes()).decode("ascii")}


def _unpack(obj, what: str) -> np.ndarray:
    try:
        shape = tuple(int(s) for s in obj["shape"])
        raw = base64.b64decode(obj["data"].encode("ascii"), validate=True)
    except (KeyError, TypeError, AttributeError, ValueError) as exc:
        raise ParseError(f"malformed packed array {what!r}: {exc}") from exc
    arr = np.frombuffer(raw, dtype="<f8")
    if arr.size != int(np.prod(shape)):
        raise DimensionMismatch(
            f"packed array {what!r}: {arr.size} values cannot fill shape {shape}"
        )
    return arr.reshape(shape).astype(float)


def model_to_document(model: TrainedModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "field_length": model.field_length,
        "r_requested": model.r_requested,
        "k": model.k,
        "n_neighbors": model.classifier.n_neighbors,
        "classifier": {
            "x": _pack(model.classifier.x),
            "labels": [int(v) for v in model.classifier.labels],
        },
        "clusters": [
            {
                "cluster": sub.cluster,
                "x": _pack(sub.gp.x),
                "targets": _pack(sub.gp.phi),
                "hyperparams": {
                    "ell": sub.gp.hyperparams.ell,
                    "sigma_f": sub.gp.hyperparams.sigma_f,
                    "sigma_n": sub.gp.hyperparams.sigma_n,
                },
                "basis": _pack(sub.basis.basis),
                "singular_values": _pack(sub.basis.singular_values),
                "rank": sub.basis.rank,
            }
            for sub in model.subs
        ],
        "provenance": model.provenance,
    }


def model_from_document(doc: dict) -> TrainedModel:
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ParseError(f"not a {MODEL_FORMAT} document")
    if doc.get("version") != MODEL_VERSION:
        raise VersionMismatch(
            f"model version {doc.get('version')!r} unsupported (expected {MODEL_VERSION})"
        )
    try:
        classifier = NearestNeighborClassifier(
            _unpack(doc["classifier"]["x"], "classifier.x"),
            np.array(doc["classifier"]["labels"], dtype=int),
            int(doc["k"]),
            int(doc["n_neighbors"]),
        )
        subs = []
        for entry in doc["clusters"]:
            basis = ReducedBasis(
                _unpack(entry["basis"], "basis"),
                _unpack(entry["singular_values"], "singular_values"),
                int(entry["rank"]),
            )
            hp = Hyperparams(**entry["hyperparams"])
            gp = GPModel.build(_unpack(entry["x"], "x"), _unpack(entry["targets"], "targets"), hp)
            if basis.r_eff != gp.r:
                raise DimensionMismatch(
                    f"cluster {entry['cluster']}: basis keeps {basis.r_eff} directions "
                    f"but GP carries {gp.r} target rows"
                )
            subs.append(SubRegressor(int(entry["cluster"]), basis, gp))
        model = TrainedModel(
            int(doc["field_length"]),
            int(doc["r_requested"]),
            classifier,
            subs,
            doc.get("provenance", {}),
        )
    except KeyError as exc:
        raise ParseError(f"model document missing key {exc}") from exc
    for sub in model.subs:
        if sub.basis.n != model.field_length:
            raise DimensionMismatch(
                f"cluster {sub.cluster}: basis rows {sub.basis.n} != field length "
                f"{model.field_length}"
            )
    return model


def save_model(model: TrainedModel, path) -> None:
    try:
        with open(path, "w") as fh:
            json.dump(model_to_document(model), fh, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_model(path) -> TrainedModel:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    return model_from_document(doc)
