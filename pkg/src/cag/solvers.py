"""Built-in analytical test problems and the solver handle used to label samples.

A :class:`Solver` is just a named map from a scalar control parameter to a
response-field vector.  Two closed-form problems ship with the package:

* ``wavelet`` -- the scalar function w(t) = 1 + sin(6 t) exp(-t^2 / 2),
  treated as a field of length 1 with the evaluation point t as the control
  parameter.
* ``spring`` -- the free-vibration displacement history of a single-mass
  spring-damper system, with the damping ratio zeta as the control parameter
  and the sampled displacement d(t) on a uniform time grid as the field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dataset import LabeledDataset
from .errors import InvalidParameter

# |zeta - 1| below this means critically damped: the under/overdamped formulas
# both degenerate (omega_d or the root gap vanish), so the limit form is used.
CRITICAL_WINDOW = 1e-9


def wavelet(t):
    """Damped oscillation around 1: ``1 + sin(6 t) * exp(-t^2 / 2)``.

    Accepts scalars or arrays; far from the origin the function flattens to 1,
    in roughly [-4, 4] it oscillates -- which is exactly what makes it a good
    stress test for pattern-aware sampling.
    """
    t = np.asarray(t, dtype=float)
    return 1.0 + np.sin(6.0 * t) * np.exp(-0.5 * t * t)


@dataclass(frozen=True)
class SpringConfig:
    """Physical constants and time discretization of the spring-damper problem.

    Defaults: 0.1 kg mass, 200 N/m stiffness, 0.1 m initial displacement,
    released from rest, observed for 1 s at 200 uniformly spaced instants
    (endpoints included).
    """

    mass: float = 0.1
    stiffness: float = 200.0
    d0: float = 0.1
    horizon: float = 1.0
    n_time: int = 200

    def __post_init__(self):
        if not (self.mass > 0 and math.isfinite(self.mass)):
            raise InvalidParameter(f"mass must be positive, got {self.mass}")
        if not (self.stiffness > 0 and math.isfinite(self.stiffness)):
            raise InvalidParameter(f"stiffness must be positive, got {self.stiffness}")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise InvalidParameter(f"horizon must be positive, got {self.horizon}")
        if not math.isfinite(self.d0):
            raise InvalidParameter(f"d0 must be finite, got {self.d0}")
        if self.n_time < 2:
            raise InvalidParameter(f"need at least 2 time points, got {self.n_time}")

    def time_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_time)


def spring_displacement(zeta: float, config: SpringConfig = SpringConfig()) -> np.ndarray:
    """Displacement history of the spring-damper released from rest.

    The closed-form solution has three branches in the damping ratio:

    * underdamped (zeta < 1):
      ``exp(-zeta wn t) (d0 cos(wd t) + (zeta wn d0 / wd) sin(wd t))``
      with ``wd = wn sqrt(1 - zeta^2)``;
    * critically damped (zeta = 1): ``exp(-wn t) (d0 + d0 wn t)``;
    * overdamped (zeta > 1): with real decay rates
      ``r12 = (zeta -/+ sqrt(zeta^2 - 1)) wn``,
      ``(-r2 exp(-r1 t) + r1 exp(-r2 t)) d0 / (r1 - r2)``
      (note r1 < r2: the slow rate keeps the larger weight).

    ``wn = sqrt(stiffness / mass)`` throughout.  The branches join
    continuously at zeta = 1; values within :data:`CRITICAL_WINDOW` of 1 use
    the critical branch.
    """
    zeta = float(zeta)
    if not math.isfinite(zeta) or zeta < 0:
        raise InvalidParameter(f"damping ratio must be finite and >= 0, got {zeta}")
    t = config.time_grid()
    wn = math.sqrt(config.stiffness / config.mass)
    d0 = config.d0
    if abs(zeta - 1.0) < CRITICAL_WINDOW:
        return np.exp(-wn * t) * (d0 + d0 * wn * t)
    if zeta < 1.0:
        wd = wn * math.sqrt(1.0 - zeta * zeta)
        return np.exp(-zeta * wn * t) * (
            d0 * np.cos(wd * t) + (zeta * wn * d0 / wd) * np.sin(wd * t)
        )
    gap = math.sqrt(zeta * zeta - 1.0)
    r1 = (zeta - gap) * wn  # slow decay
    r2 = (zeta + gap) * wn  # fast decay
    return (-r2 * np.exp(-r1 * t) + r1 * np.exp(-r2 * t)) * d0 / (r1 - r2)


@dataclass(frozen=True)
class Solver:
    """A named map from a control parameter to a response-field vector."""

    name: str
    evaluate: Callable[[float], np.ndarray]
    params: dict = field(default_factory=dict)

    def __call__(self, chi: float) -> np.ndarray:
        out = np.asarray(self.evaluate(float(chi)), dtype=float)
        return np.atleast_1d(out)


def wavelet_solver() -> Solver:
    return Solver("wavelet", lambda t: np.atleast_1d(wavelet(t)))


def spring_solver(config: SpringConfig = SpringConfig()) -> Solver:
    return Solver(
        "spring",
        lambda zeta: spring_displacement(zeta, config),
        params={
            "mass": config.mass,
            "stiffness": config.stiffness,
            "d0": config.d0,
            "horizon": config.horizon,
            "n_time": config.n_time,
        },
    )


SOLVERS: dict[str, Callable[..., Solver]] = {
    "wavelet": wavelet_solver,
    "spring": spring_solver,
}


def get_solver(name: str, **params) -> Solver:
    """Look up a built-in solver by name (``wavelet`` or ``spring``)."""
    try:
        factory = SOLVERS[name]
    except KeyError:
        raise InvalidParameter(
            f"unknown solver {name!r}; available: {sorted(SOLVERS)}"
        ) from None
    if name == "spring" and params:
        return spring_solver(SpringConfig(**params))
    if params:
        raise InvalidParameter(f"solver {name!r} takes no parameters")
    return factory()


def label_samples(solver: Solver, inputs) -> LabeledDataset:
    """Evaluate ``solver`` at every input and bundle the results as a dataset."""
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim != 1:
        raise InvalidParameter(f"inputs must be 1-D, got shape {inputs.shape}")
    if inputs.size == 0:
        return LabeledDataset(np.zeros(0), np.zeros((0, 0)))
    columns = [solver(chi) for chi in inputs]
    n = columns[0].shape[0]
    for chi, col in zip(inputs, columns):
        if col.shape != (n,):
            raise InvalidParameter(
                f"solver returned field of shape {col.shape} at chi={chi} "
                f"(expected ({n},))"
            )
    return LabeledDataset(inputs, np.column_stack(columns))
