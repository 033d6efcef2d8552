"""Per-cluster linear order reduction via truncated singular value decomposition.

A cluster's field snapshots ``Y`` (one column per sample) are compressed to
latent coordinates through the leading left singular vectors: the basis keeps
``r_eff = min(r, N, M)`` columns, the latent block is ``basis.T @ Y`` and the
restoration is ``basis @ latent``.  No mean-centering is applied: the latent
rows carry the raw field content, and restoration is exact whenever ``r_eff``
reaches the numerical rank of ``Y``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidParameter, NumericalFailure

# Singular values below this fraction of the largest count as zero for rank.
RANK_RTOL = 1e-12


@dataclass(frozen=True)
class ReducedBasis:
    """Orthonormal reduction basis for one cluster.

    ``basis`` holds the leading left singular vectors column-wise, each
    sign-fixed so its largest-magnitude entry is positive (ties: first such
    entry), which makes the decomposition reproducible across BLAS builds.
    ``singular_values`` keeps the full descending spectrum for diagnostics.
    """

    basis: np.ndarray
    singular_values: np.ndarray
    rank: int

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def r_eff(self) -> int:
        return self.basis.shape[1]


def fit_basis(outputs, r: int) -> ReducedBasis:
    """Compute the reduction basis of a snapshot block ``outputs`` (N, M)."""
    outputs = np.asarray(outputs, dtype=float)
    if outputs.ndim != 2:
        raise DimensionMismatch(f"snapshots must be 2-D (N, M), got shape {outputs.shape}")
    n, m = outputs.shape
    if n < 1 or m < 1:
        raise InvalidParameter(f"cannot reduce an empty snapshot block {outputs.shape}")
    if r < 1:
        raise InvalidParameter(f"requested order must be >= 1, got {r}")
    if not np.all(np.isfinite(outputs)):
        raise InvalidParameter("snapshots contain non-finite values")
    try:
        u, s, _ = np.linalg.svd(outputs, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD of {outputs.shape} snapshot block failed: {exc}") from exc
    r_eff = min(int(r), n, m)
    basis = u[:, :r_eff].copy()
    for j in range(r_eff):
        lead = np.argmax(np.abs(basis[:, j]))
        if basis[lead, j] < 0:
            basis[:, j] = -basis[:, j]
    s_max = s[0] if s.size else 0.0
    rank = int(np.count_nonzero(s > RANK_RTOL * s_max)) if s_max > 0 else 0
    return ReducedBasis(basis, s, rank)


def project(basis: ReducedBasis, outputs) -> np.ndarray:
    """Latent coordinates ``basis.T @ outputs`` of full fields (N, M) -> (r_eff, M)."""
    outputs = np.asarray(outputs, dtype=float)
    if outputs.ndim != 2 or outputs.shape[0] != basis.n:
        raise DimensionMismatch(
            f"fields must have shape ({basis.n}, *), got {outputs.shape}"
        )
    return basis.basis.T @ outputs


def restore(basis: ReducedBasis, latent) -> np.ndarray:
    """Full fields ``basis @ latent`` from latent coordinates (r_eff, M) -> (N, M)."""
    latent = np.asarray(latent, dtype=float)
    if latent.ndim != 2 or latent.shape[0] != basis.r_eff:
        raise DimensionMismatch(
            f"latent block must have shape ({basis.r_eff}, *), got {latent.shape}"
        )
    return basis.basis @ latent
