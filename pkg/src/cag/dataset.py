"""Data model: control parameters, response fields, and (clustered) datasets.

A sample couples one scalar control parameter ``chi`` with one response field,
a flat float vector of length N (a discretized displacement history, a single
function value, a flattened FEM field -- the pipeline does not care).  A
dataset stores M samples column-wise in an ``(N, M)`` array and keeps them
sorted by ascending ``chi``; sorting is enforced at construction so every
downstream stage can rely on it.

CSV and JSON serialization round-trip exactly (values are written with
``repr``-level precision).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateInput,
    InvalidParameter,
    IoError,
    ParseError,
)

# Two control-parameter values closer than this (relatively) are considered
# the same sample.
DUPLICATE_RTOL = 1e-12


def _as_float_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def is_duplicate(a: float, b: float) -> bool:
    """True when two control-parameter values collide under the dataset tolerance."""
    return abs(a - b) <= DUPLICATE_RTOL * max(abs(a), abs(b))


@dataclass(eq=False)
class LabeledDataset:
    """Solver-labeled samples: ``inputs[i]`` produced column ``i`` of ``outputs``.

    Arguments
    ---------
    inputs:  shape (M,) control-parameter values.
    outputs: shape (N, M) response fields, one column per sample.

    Samples are re-sorted by ascending input at construction (columns move
    with their inputs).  Duplicate inputs and non-finite values are rejected.
    """

    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        inputs = _as_float_vector(self.inputs, "inputs")
        outputs = np.asarray(self.outputs, dtype=float)
        if outputs.ndim != 2:
            raise DimensionMismatch(f"outputs must be 2-D (N, M), got shape {outputs.shape}")
        if outputs.shape[1] != inputs.shape[0]:
            raise DimensionMismatch(
                f"{inputs.shape[0]} inputs but {outputs.shape[1]} output columns"
            )
        if not np.all(np.isfinite(inputs)):
            raise InvalidParameter("inputs contain non-finite values")
        if not np.all(np.isfinite(outputs)):
            raise InvalidParameter("outputs contain non-finite values")
        order = np.argsort(inputs, kind="stable")
        inputs = inputs[order]
        outputs = outputs[:, order]
        for i in range(len(inputs) - 1):
            if is_duplicate(inputs[i], inputs[i + 1]):
                raise DuplicateInput(f"duplicate control parameter {inputs[i]!r}")
        self.inputs = inputs
        self.outputs = outputs

    @property
    def m(self) -> int:
        """Number of samples."""
        return self.inputs.shape[0]

    @property
    def n(self) -> int:
        """Field length."""
        return self.outputs.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return (
            self.outputs.shape == other.outputs.shape
            and np.array_equal(self.inputs, other.inputs)
            and np.array_equal(self.outputs, other.outputs)
        )

    def merged(self, inputs, outputs) -> "LabeledDataset":
        """Return a new dataset with extra samples appended (and re-sorted)."""
        inputs = _as_float_vector(inputs, "inputs")
        outputs = np.asarray(outputs, dtype=float)
        if outputs.ndim != 2:
            raise DimensionMismatch(f"merged fields must be 2-D, got shape {outputs.shape}")
        if self.m == 0 and self.n == 0:
            # Empty dataset with unknown field length adopts the new one.
            base_outputs = np.zeros((outputs.shape[0], 0))
        elif outputs.shape[0] != self.n:
            raise DimensionMismatch(
                f"merged fields must have shape (N={self.n}, *), got {outputs.shape}"
            )
        else:
            base_outputs = self.outputs
        return LabeledDataset(
            np.concatenate([self.inputs, inputs]),
            np.concatenate([base_outputs, outputs], axis=1),
        )


@dataclass(eq=False)
class ClusteredDataset(LabeledDataset):
    """A labeled dataset plus a 1-based cluster label per sample.

    ``labels[i]`` is the cluster of sample ``i`` in sorted order; labels are
    canonicalized so cluster 1 is the first one encountered along ascending
    ``chi``.  Every cluster 1..k must own at least one sample.

    ``history`` optionally records the adaptive-refinement rounds that
    produced the dataset (for reports); it never affects equality.
    """

    labels: np.ndarray = field(default=None)
    k: int = 0
    history: tuple = field(default=None, compare=False)

    def __post_init__(self):
        if self.labels is None:
            raise InvalidParameter("labels are required")
        labels = np.asarray(self.labels)
        inputs = _as_float_vector(self.inputs, "inputs")
        if labels.shape != inputs.shape:
            raise DimensionMismatch(
                f"{inputs.shape[0]} inputs but {labels.shape} labels"
            )
        order = np.argsort(inputs, kind="stable")
        super().__post_init__()
        labels = np.asarray(labels[order], dtype=int)
        if self.k <= 0:
            raise InvalidParameter(f"cluster count must be positive, got {self.k}")
        if labels.size and (labels.min() < 1 or labels.max() > self.k):
            raise InvalidParameter(f"labels must lie in 1..{self.k}")
        counts = np.bincount(labels, minlength=self.k + 1)[1:]
        if np.any(counts == 0):
            missing = [i + 1 for i in range(self.k) if counts[i] == 0]
            raise InvalidParameter(f"empty cluster(s): {missing}")
        self.labels = canonicalize_labels(labels, self.k)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ClusteredDataset):
            return NotImplemented
        return (
            LabeledDataset.__eq__(self, other) is True
            and self.k == other.k
            and np.array_equal(self.labels, other.labels)
        )

    def cluster_indices(self, cluster: int) -> np.ndarray:
        """Sorted sample indices belonging to ``cluster`` (1-based)."""
        if not 1 <= cluster <= self.k:
            raise InvalidParameter(f"cluster {cluster} outside 1..{self.k}")
        return np.flatnonzero(self.labels == cluster)

    def cluster_sizes(self) -> np.ndarray:
        """Sample count per cluster, index 0 = cluster 1."""
        return np.bincount(self.labels, minlength=self.k + 1)[1:]

    def cluster_ranges(self) -> dict[int, list[tuple[float, float]]]:
        """Contiguous chi intervals covered by each cluster (may be several)."""
        ranges: dict[int, list[tuple[float, float]]] = {c: [] for c in range(1, self.k + 1)}
        i = 0
        while i < self.m:
            j = i
            while j + 1 < self.m and self.labels[j + 1] == self.labels[i]:
                j += 1
            ranges[int(self.labels[i])].append((float(self.inputs[i]), float(self.inputs[j])))
            i = j + 1
        return ranges


def canonicalize_labels(labels: np.ndarray, k: int) -> np.ndarray:
    """Relabel clusters 1..k by order of first occurrence (labels are 1-based)."""
    labels = np.asarray(labels, dtype=int)
    mapping: dict[int, int] = {}
    for lab in labels:
        if int(lab) not in mapping:
            mapping[int(lab)] = len(mapping) + 1
    return np.array([mapping[int(lab)] for lab in labels], dtype=int)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _format_of(path, explicit: str | None) -> str:
    if explicit is not None:
        fmt = explicit.lower()
    else:
        fmt = str(path).rsplit(".", 1)[-1].lower() if "." in str(path) else ""
    if fmt not in ("csv", "json"):
        raise InvalidParameter(f"unknown dataset format {fmt!r} (use 'csv' or 'json')")
    return fmt


def save_dataset(ds: LabeledDataset, path, fmt: str | None = None) -> None:
    """Write a dataset to ``path`` as CSV (header chi,f0,..) or JSON records."""
    fmt = _format_of(path, fmt)
    try:
        with open(path, "w", newline="") as fh:
            if fmt == "csv":
                writer = csv.writer(fh)
                writer.writerow(["chi"] + [f"f{i}" for i in range(ds.n)])
                for i in range(ds.m):
                    writer.writerow(
                        [repr(float(ds.inputs[i]))]
                        + [repr(float(v)) for v in ds.outputs[:, i]]
                    )
            else:
                records = [
                    {"chi": float(ds.inputs[i]), "field": [float(v) for v in ds.outputs[:, i]]}
                    for i in range(ds.m)
                ]
                json.dump(records, fh, indent=1)
                fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_dataset(path, fmt: str | None = None) -> LabeledDataset:
    """Read a dataset written by :func:`save_dataset` (or hand-made, same shape)."""
    fmt = _format_of(path, fmt)
    try:
        with open(path, newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if fmt == "csv":
        return _parse_csv(text, path)
    return _parse_json(text, path)


def _parse_float(token: str, where: str) -> float:
    try:
        value = float(token)
    except ValueError as exc:
        raise ParseError(f"{where}: not a number: {token!r}") from exc
    if math.isnan(value) or math.isinf(value):
        raise ParseError(f"{where}: non-finite value {token!r}")
    return value


def _parse_csv(text: str, path) -> LabeledDataset:
    rows = [
        row
        for row in csv.reader(text.splitlines())
        if row and not row[0].lstrip().startswith("#")
    ]
    if not rows:
        raise ParseError(f"{path}: empty file (expected a header row)")
    header = [cell.strip() for cell in rows[0]]
    if not header or header[0] != "chi":
        raise ParseError(f"{path}: first header column must be 'chi', got {header[:1]!r}")
    n = len(header) - 1
    inputs, columns = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != n + 1:
            raise ParseError(
                f"{path}:{lineno}: expected {n + 1} columns, got {len(row)}"
            )
        where = f"{path}:{lineno}"
        inputs.append(_parse_float(row[0], where))
        columns.append([_parse_float(cell, where) for cell in row[1:]])
    outputs = np.array(columns, dtype=float).T if columns else np.zeros((n, 0))
    return LabeledDataset(np.array(inputs, dtype=float), outputs)


def _json_number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{where}: expected a number, got {value!r}")
    if math.isnan(value) or math.isinf(value):
        raise ParseError(f"{where}: non-finite value {value!r}")
    return float(value)


def _parse_json(text: str, path) -> LabeledDataset:
    try:
        records = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(records, list):
        raise ParseError(f"{path}: expected a top-level list of records")
    inputs, columns = [], []
    n = None
    for idx, rec in enumerate(records):
        if not isinstance(rec, dict) or "chi" not in rec or "field" not in rec:
            raise ParseError(f"{path}: record {idx} must have 'chi' and 'field' keys")
        if not isinstance(rec["field"], list):
            raise ParseError(f"{path}: record {idx}: 'field' must be a list")
        if n is None:
            n = len(rec["field"])
        elif len(rec["field"]) != n:
            raise DimensionMismatch(
                f"{path}: record {idx} has field length {len(rec['field'])}, expected {n}"
            )
        where = f"{path}: record {idx}"
        inputs.append(_json_number(rec["chi"], where))
        columns.append([_json_number(v, where) for v in rec["field"]])
    if n is None:
        n = 0
    outputs = np.array(columns, dtype=float).T if columns else np.zeros((n, 0))
    return LabeledDataset(np.array(inputs, dtype=float), outputs)
