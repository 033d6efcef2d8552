"""Squared-exponential Gaussian process regression on latent target rows.

One model couples a single hyperparameter triple theta = (ell, sigma_f,
sigma_n) to *all* latent rows of its cluster: the training objective is the
sum over rows of the per-row negative log marginal likelihood

    Q_r(theta) = 1/2 phi_r^T G^-1 phi_r + 1/2 log|G| + M/2 log(2 pi),
    G = K(X, X) + sigma_n^2 I,

with the squared-exponential kernel
``k(a, b) = sigma_f^2 exp(-(a - b)^2 / (2 ell^2))``.  Because the rows share
G, prediction cost is one factorization for the whole cluster and the
posterior variance is identical across rows.

The objective is minimized over log-parameters by nonlinear conjugate
gradients (Polak-Ribiere with non-negativity reset) and a backtracking Armijo
line search.  Gradients are analytic,

    dQ/dtheta = -1/2 a^T (dG/dtheta) a + 1/2 tr(G^-1 dG/dtheta),
    a = G^-1 phi_r,

summed over rows; the finite-difference cross-check lives in the test suite.
All solves go through a Cholesky factorization with an escalating-jitter
retry; no matrix is ever inverted to solve a system (the identity-side
``cho_solve`` that yields G^-1 is used only for the trace term above).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve_triangular

from .errors import InvalidParameter, NumericalFailure
from .seeding import rng_for

log = logging.getLogger(__name__)

# Relative jitter ladder for failed factorizations, scaled by mean(diag(G)).
JITTER_LEVELS = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)

# Namespace tag for optimizer restart streams (see seeding.rng_for).
_RESTART_TAG = 11

# Largest per-component move (in log-parameter units) a line search may *try*
# first; ill-scaled early gradients otherwise propose astronomically far
# trial points and the backtracking walk can settle in a bad basin.
_MAX_TRIAL_MOVE = 1.0

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Hyperparams:
    """Kernel length scale, signal deviation, and noise deviation (all > 0)."""

    ell: float
    sigma_f: float
    sigma_n: float

    def __post_init__(self):
        for name in ("ell", "sigma_f", "sigma_n"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidParameter(f"{name} must be finite and > 0, got {value}")

    def log_array(self) -> np.ndarray:
        return np.log([self.ell, self.sigma_f, self.sigma_n])

    @classmethod
    def from_log(cls, u) -> "Hyperparams":
        ell, sigma_f, sigma_n = np.exp(np.asarray(u, dtype=float))
        return cls(float(ell), float(sigma_f), float(sigma_n))


@dataclass(frozen=True)
class OptimizerConfig:
    """Conjugate-gradient settings for hyperparameter training."""

    max_iter: int = 200
    grad_tol: float = 1e-6
    f_tol: float = 1e-9
    restarts: int = 8
    seed: int = 0
    initial_step: float = 1.0
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 40

    def __post_init__(self):
        if self.max_iter < 0:
            raise InvalidParameter("max_iter must be >= 0")
        if self.restarts < 1 or self.max_backtracks < 1:
            raise InvalidParameter("restart/backtrack budgets must be >= 1")
        if self.grad_tol <= 0 or self.f_tol <= 0:
            raise InvalidParameter("tolerances must be > 0")
        if not 0 < self.backtrack < 1:
            raise InvalidParameter("backtrack factor must lie in (0, 1)")
        if not 0 < self.armijo_c1 < 1:
            raise InvalidParameter("armijo_c1 must lie in (0, 1)")
        if self.initial_step <= 0:
            raise InvalidParameter("initial_step must be > 0")


def se_kernel(xa, xb, hp: Hyperparams) -> np.ndarray:
    """Squared-exponential kernel matrix between two point sets (p,) x (q,)."""
    xa = np.atleast_1d(np.asarray(xa, dtype=float))
    xb = np.atleast_1d(np.asarray(xb, dtype=float))
    diff = xa[:, None] - xb[None, :]
    return hp.sigma_f**2 * np.exp(-0.5 * (diff / hp.ell) ** 2)


def _factorize(gram: np.ndarray):
    """Cholesky with escalating diagonal jitter; returns (factor, jitter_used)."""
    scale = float(np.mean(np.diag(gram)))
    if not math.isfinite(scale):
        raise NumericalFailure("Gram matrix has non-finite diagonal")
    for level in JITTER_LEVELS:
        try:
            shifted = gram if level == 0.0 else gram + (level * scale) * np.eye(gram.shape[0])
            factor = cho_factor(shifted, lower=True, check_finite=False)
        except (LinAlgError, ValueError):
            continue
        if not np.all(np.isfinite(factor[0])):
            continue
        if level > 0.0:
            log.debug("Cholesky needed jitter %.1e * %.3e", level, scale)
        return factor, level * scale
    raise NumericalFailure(
        f"Cholesky failed for {gram.shape[0]}x{gram.shape[0]} Gram matrix "
        f"even with jitter up to {JITTER_LEVELS[-1]:.0e} * mean diagonal"
    )


def _as_targets(phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    if phi.ndim == 1:
        phi = phi[None, :]
    if phi.ndim != 2:
        raise InvalidParameter(f"targets must be (R, M) or (M,), got shape {phi.shape}")
    return phi


def nlml(hp: Hyperparams, x, phi) -> float:
    """Summed negative log marginal likelihood of all target rows under ``hp``."""
    x = np.asarray(x, dtype=float)
    phi = _as_targets(phi)
    m, r = x.shape[0], phi.shape[0]
    if phi.shape[1] != m:
        raise InvalidParameter(f"{m} inputs but target rows of length {phi.shape[1]}")
    gram = se_kernel(x, x, hp) + hp.sigma_n**2 * np.eye(m)
    factor, _ = _factorize(gram)
    logdet = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    alpha = cho_solve(factor, phi.T, check_finite=False)  # (M, R)
    data_term = 0.5 * float(np.sum(phi.T * alpha))
    return data_term + r * (0.5 * logdet + 0.5 * m * _LOG_2PI)


def nlml_value_grad(hp: Hyperparams, x, phi) -> tuple[float, np.ndarray]:
    """NLML and its analytic gradient with respect to (ell, sigma_f, sigma_n).

    Uses a = G^-1 phi_r per row:  dQ/dtheta = -1/2 sum_r a_r^T dG a_r
    + R/2 tr(G^-1 dG), with dG/d ell = K . D^2 / ell^3, dG/d sigma_f =
    2 K / sigma_f and dG/d sigma_n = 2 sigma_n I.
    """
    x = np.asarray(x, dtype=float)
    phi = _as_targets(phi)
    m, r = x.shape[0], phi.shape[0]
    if phi.shape[1] != m:
        raise InvalidParameter(f"{m} inputs but target rows of length {phi.shape[1]}")
    kern = se_kernel(x, x, hp)
    gram = kern + hp.sigma_n**2 * np.eye(m)
    factor, _ = _factorize(gram)
    logdet = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    alpha = cho_solve(factor, phi.T, check_finite=False)  # (M, R)
    value = 0.5 * float(np.sum(phi.T * alpha)) + r * (0.5 * logdet + 0.5 * m * _LOG_2PI)

    ginv = cho_solve(factor, np.eye(m), check_finite=False)
    d2 = (x[:, None] - x[None, :]) ** 2
    grad = np.empty(3)
    for idx, dgram in enumerate((kern * d2 / hp.ell**3, 2.0 * kern / hp.sigma_f)):
        quad = float(np.sum((dgram @ alpha) * alpha))
        trace = float(np.sum(ginv * dgram))
        grad[idx] = -0.5 * quad + 0.5 * r * trace
    # Noise direction: dG = 2 sigma_n I.
    quad_n = 2.0 * hp.sigma_n * float(np.sum(alpha * alpha))
    trace_n = 2.0 * hp.sigma_n * float(np.trace(ginv))
    grad[2] = -0.5 * quad_n + 0.5 * r * trace_n
    return value, grad


def default_init(x, phi) -> Hyperparams:
    """Data-scaled starting point: span-based length, target-deviation signal."""
    x = np.asarray(x, dtype=float)
    phi = _as_targets(phi)
    span = float(x.max() - x.min()) if x.size > 1 else 1.0
    ell0 = max(span / math.sqrt(max(x.size, 1)), 1e-8)
    sf0 = max(float(np.std(phi)), 1e-8)
    return Hyperparams(ell0, sf0, 1e-3 * sf0)


def _minimize_pr_cg(value_grad, value_only, u0: np.ndarray, cfg: OptimizerConfig):
    """Polak-Ribiere CG with Armijo backtracking over log-parameters."""
    u = np.asarray(u0, dtype=float).copy()
    f, g = value_grad(u)
    if not (math.isfinite(f) and np.all(np.isfinite(g))):
        raise NumericalFailure("objective not finite at the starting point")
    d = -g
    n = u.shape[0]
    restart_every = 3 * n
    for it in range(1, cfg.max_iter + 1):
        if float(np.abs(g).max()) <= cfg.grad_tol:
            break
        g_dot_d = float(g @ d)
        if g_dot_d >= 0.0:  # not a descent direction: fall back to steepest
            d = -g
            g_dot_d = float(g @ d)
        d_inf = float(np.abs(d).max())
        step = min(cfg.initial_step, _MAX_TRIAL_MOVE / d_inf) if d_inf > 0 else cfg.initial_step
        f_new = None
        for _ in range(cfg.max_backtracks):
            trial = value_only(u + step * d)
            if math.isfinite(trial) and trial <= f + cfg.armijo_c1 * step * g_dot_d:
                f_new = trial
                break
            step *= cfg.backtrack
        if f_new is None:
            if np.array_equal(d, -g):
                break  # no progress possible along steepest descent
            d = -g
            continue
        u_new = u + step * d
        f_new, g_new = value_grad(u_new)
        if not (math.isfinite(f_new) and np.all(np.isfinite(g_new))):
            break
        done = abs(f - f_new) <= cfg.f_tol * max(1.0, abs(f))
        if it % restart_every == 0:
            beta = 0.0
        else:
            denom = float(g @ g)
            beta = max(0.0, float(g_new @ (g_new - g)) / denom) if denom > 0 else 0.0
        d = -g_new + beta * d
        u, f, g = u_new, f_new, g_new
        if done:
            break
    return u, f, it


def fit_hyperparams(x, phi, cfg: OptimizerConfig = OptimizerConfig()) -> Hyperparams:
    """Train theta on (x, phi) by restarted CG descent of the summed NLML.

    The first start is the data-scaled heuristic; each further restart
    perturbs its log-parameters uniformly in [-1, 1].  The restart reaching
    the lowest objective wins (earliest on ties).
    """
    x = np.asarray(x, dtype=float)
    phi = _as_targets(phi)
    if x.ndim != 1:
        raise InvalidParameter(f"inputs must be 1-D, got shape {x.shape}")
    if x.size == 0:
        raise InvalidParameter("cannot train on an empty cluster")
    if cfg.max_iter == 0:
        return default_init(x, phi)

    # Exploratory line-search steps can push parameters far enough to overflow;
    # any such point just reads as +inf and gets backtracked away from.
    def value_grad(u):
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                value, grad_theta = nlml_value_grad(Hyperparams.from_log(u), x, phi)
        except (NumericalFailure, InvalidParameter, OverflowError, FloatingPointError):
            return math.inf, np.full(3, np.nan)
        return value, grad_theta * np.exp(u)  # chain rule onto log-parameters

    def value_only(u):
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                return nlml(Hyperparams.from_log(u), x, phi)
        except (NumericalFailure, InvalidParameter, OverflowError, FloatingPointError):
            return math.inf

    u0 = default_init(x, phi).log_array()
    rng = rng_for(cfg.seed, _RESTART_TAG)
    starts = [u0] + [u0 + rng.uniform(-1.0, 1.0, size=3) for _ in range(cfg.restarts - 1)]
    best = None
    for u_start in starts:
        try:
            u, f, iters = _minimize_pr_cg(value_grad, value_only, u_start, cfg)
        except NumericalFailure:
            continue
        if not math.isfinite(f):
            continue
        if best is None or f < best[0]:
            best = (f, u, iters)
    if best is None:
        raise NumericalFailure("all hyperparameter restarts failed to produce a finite fit")
    f, u, iters = best
    log.debug("hyperparameter fit: nlml=%.6g after %d iteration(s)", f, iters)
    return Hyperparams.from_log(u)


class GPModel:
    """A trained regressor over one cluster's latent target rows.

    Holds the training inputs, the (R, M) latent targets, the shared
    hyperparameters, and the cached Cholesky factor of G so prediction never
    refactorizes.  ``build`` is deterministic: the same (x, phi, theta) always
    yields bit-identical predictions.
    """

    def __init__(self, x, phi, hyperparams, factor, alpha, jitter, half_inv):
        self.x = x
        self.phi = phi
        self.hyperparams = hyperparams
        self._factor = factor
        self.jitter = jitter
        # Fuse the mean weights (M, R) and the transposed inverse Cholesky
        # factor (M, M) into one block so predict costs a single matmul; the
        # first R output columns are means, the rest feed the variance.
        self._predict_block = np.hstack([alpha, half_inv.T])

    @classmethod
    def build(cls, x, phi, hyperparams: Hyperparams) -> "GPModel":
        x = np.asarray(x, dtype=float)
        phi = _as_targets(phi)
        if x.ndim != 1:
            raise InvalidParameter(f"inputs must be 1-D, got shape {x.shape}")
        if phi.shape[1] != x.shape[0]:
            raise InvalidParameter(
                f"{x.shape[0]} inputs but target rows of length {phi.shape[1]}"
            )
        gram = se_kernel(x, x, hyperparams) + hyperparams.sigma_n**2 * np.eye(x.shape[0])
        factor, jitter = _factorize(gram)
        alpha = cho_solve(factor, phi.T, check_finite=False)
        half_inv = solve_triangular(
            factor[0], np.eye(x.shape[0]), lower=factor[1], check_finite=False
        )
        return cls(x, phi, hyperparams, factor, alpha, jitter, half_inv)

    @classmethod
    def fit(cls, x, phi, cfg: OptimizerConfig = OptimizerConfig()) -> "GPModel":
        return cls.build(x, phi, fit_hyperparams(x, phi, cfg))

    @property
    def m(self) -> int:
        return self.x.shape[0]

    @property
    def r(self) -> int:
        return self.phi.shape[0]

    def predict(self, xstar) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean rows (R, P) and per-query variance (P,).

        The variance k(x*, x*) - k*^T G^-1 k* is shared by all target rows
        (they share G).  Writing the subtracted term as a row-wise sum of
        squares of cross @ L^-T keeps the result inside [0, sigma_f^2] even
        for ill-conditioned G.
        """
        xstar = np.atleast_1d(np.asarray(xstar, dtype=float))
        if xstar.ndim != 1:
            raise InvalidParameter(f"queries must be 1-D, got shape {xstar.shape}")
        if xstar.size == 0:
            return np.zeros((self.r, 0)), np.zeros(0)
        if not np.all(np.isfinite(xstar)):
            raise InvalidParameter("queries contain non-finite values")
        hp = self.hyperparams
        cross = np.subtract.outer(xstar, self.x)  # (P, M)
        np.multiply(cross, cross, out=cross)
        cross *= -0.5 / hp.ell**2
        np.exp(cross, out=cross)
        cross *= hp.sigma_f**2
        out = cross @ self._predict_block  # (P, R + M)
        mean = out[:, : self.r].T  # (R, P)
        whitened = out[:, self.r :]  # (P, M)
        np.multiply(whitened, whitened, out=whitened)
        variance = hp.sigma_f**2 - whitened.sum(axis=1)
        return mean, np.maximum(variance, 0.0)
