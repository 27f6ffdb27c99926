"""Shared domain types, grids, norms and boundary-derivative estimation.

Everything here is an immutable value type or a pure function; concurrent
use needs no locking.  Natural units hbar = m = 1 are the defaults, but all
formulas keep the symbols so dimensional runs work unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DirichletViolationError

# Dirichlet fields must vanish at the walls to this tolerance, relative to
# the field maximum.  Spectral representations are exactly zero there and
# the finite-difference steppers pin the endpoints, so this only trips on
# caller mistakes.
ENDPOINT_ZERO_RTOL = 1e-12


class Side(Enum):
    """Which wall of the interval."""

    LEFT = "left"
    RIGHT = "right"


class PrefactorConvention(Enum):
    """Constant converting time-integrated wall flux into a decay exponent.

    The per-step absorption probability is c * dt * sum(lambda * |dK/dx|^2)
    over the walls.  FINAL_RATE uses c = hbar/(pi m), the constant that the
    closed survival law quotes; PRODUCT_LIMIT uses c = hbar/(2 pi m), the
    literal continuum limit of the printed per-step discount.  The two are
    provided side by side precisely because they differ by a factor of two;
    see the convergence scenario for the documented comparison.
    """

    FINAL_RATE = "final-rate"
    PRODUCT_LIMIT = "product-limit"

    def rate_constant(self, params: "PhysicalParams") -> float:
        c = params.hbar / (math.pi * params.mass)
        return c if self is PrefactorConvention.FINAL_RATE else 0.5 * c


@dataclass(frozen=True)
class PhysicalParams:
    """Fundamental constants of a run: hbar and the particle mass."""

    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and math.isfinite(self.hbar)):
            raise ValueError(f"hbar must be positive and finite, got {self.hbar}")
        if not (self.mass > 0 and math.isfinite(self.mass)):
            raise ValueError(f"mass must be positive and finite, got {self.mass}")


@dataclass(frozen=True)
class AbsorberSpec:
    """Characteristic absorption lengths of the two walls.

    lambda_left / lambda_right convert the boundary flux |dK/dx|^2 at the
    left / right wall into an absorption probability; zero means that wall
    reflects without absorbing.
    """

    lambda_left: float = 0.0
    lambda_right: float = 0.0
    convention: PrefactorConvention = PrefactorConvention.FINAL_RATE

    def __post_init__(self):
        if self.lambda_left < 0 or self.lambda_right < 0:
            raise ValueError("absorption lengths must be >= 0")

    @property
    def absorbing(self) -> bool:
        return self.lambda_left > 0 or self.lambda_right > 0


@dataclass(frozen=True)
class Domain:
    """Closed interval [left, right]; right may be +inf for half-line work."""

    left: float
    right: float

    def __post_init__(self):
        if math.isnan(self.left) or math.isnan(self.right):
            raise ValueError("domain endpoints must not be NaN")
        if not self.left < self.right:
            raise ValueError(f"domain needs left < right, got [{self.left}, {self.right}]")

    @property
    def finite(self) -> bool:
        return math.isfinite(self.left) and math.isfinite(self.right)

    @property
    def length(self) -> float:
        return self.right - self.left


@dataclass(frozen=True, eq=False)
class SpatialGrid:
    """Uniform grid over a finite domain, endpoints included."""

    domain: Domain
    n_points: int
    nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_points < 8:
            raise ValueError(f"need at least 8 grid points, got {self.n_points}")
        if not self.domain.finite:
            raise ValueError("cannot build a finite grid on an infinite domain")
        nodes = np.linspace(self.domain.left, self.domain.right, self.n_points)
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)

    @property
    def spacing(self) -> float:
        return self.domain.length / (self.n_points - 1)


def make_grid(domain: Domain, n_points: int) -> SpatialGrid:
    """Uniform grid spanning the domain, both endpoints included."""
    return SpatialGrid(domain, n_points)


@dataclass(frozen=True, eq=False)
class WaveField:
    """Complex field samples K(x, t) on a spatial grid at one instant."""

    grid: SpatialGrid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=complex)
        if values.shape != (self.grid.n_points,):
            raise ValueError(
                f"field has {values.shape} values for a {self.grid.n_points}-point grid"
            )
        if not np.all(np.isfinite(values.view(float))):
            raise ValueError("field values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def scale(self) -> float:
        """Largest magnitude on the grid (0 for the zero field)."""
        return float(np.max(np.abs(self.values)))


def require_dirichlet(field: WaveField, side: Side | None = None) -> None:
    """Raise unless the field vanishes at the requested wall(s)."""
    tol = ENDPOINT_ZERO_RTOL * max(field.scale(), 1e-300)
    checks = {
        Side.LEFT: abs(field.values[0]),
        Side.RIGHT: abs(field.values[-1]),
    }
    sides = [side] if side is not None else [Side.LEFT, Side.RIGHT]
    for s in sides:
        if checks[s] > tol:
            raise DirichletViolationError(
                f"field endpoint at {s.value} wall is {checks[s]:.3e}, "
                f"expected 0 within {tol:.3e}"
            )


def l2_norm_sq(field: WaveField) -> float:
    """Trapezoid-rule approximation of the probability integral |K|^2 dx."""
    return float(np.trapezoid(np.abs(field.values) ** 2, dx=field.grid.spacing))


# One-sided first-derivative stencil of order h^4 on nodes 1..4, valid when
# the node-0 value is known to be zero (its -25/12h term drops out).
_STENCIL = np.array([48.0, -36.0, 16.0, -3.0]) / 12.0


def boundary_derivative(field: WaveField, side: Side) -> complex:
    """dK/dx at a wall from a 4th-order one-sided stencil.

    Exploits the Dirichlet zero at the wall, so only four interior values
    enter.  Raises DirichletViolationError when the endpoint is not zero
    within tolerance.
    """
    if field.grid.n_points < 5:
        raise ValueError("boundary derivative needs at least 5 grid points")
    require_dirichlet(field, side)
    h = field.grid.spacing
    if side is Side.LEFT:
        window = field.values[1:5]
        return complex(np.dot(_STENCIL, window) / h)
    window = field.values[-2:-6:-1]
    return complex(-np.dot(_STENCIL, window) / h)


def integrate_time_series(times: np.ndarray, values: np.ndarray) -> float:
    """Trapezoid-rule integral of samples over a strictly ascending time grid."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise ValueError("need at least two time samples")
    if values.shape != times.shape:
        raise ValueError("times and values must have matching shapes")
    if not np.all(np.diff(times) > 0):
        raise ValueError("times must be strictly ascending")
    return float(np.trapezoid(values, times))


@dataclass(frozen=True, eq=False)
class SurvivalCurve:
    """Survival probability 1-P(t) sampled in time, with per-step absorption.

    survival[0] is 1 by construction and the sequence never increases;
    step_absorption[i] is the probability removed on the step ending at
    times[i+1].
    """

    times: np.ndarray
    survival: np.ndarray
    step_absorption: np.ndarray

    def __post_init__(self):
        times = np.ascontiguousarray(self.times, dtype=float)
        surv = np.ascontiguousarray(self.survival, dtype=float)
        step = np.ascontiguousarray(self.step_absorption, dtype=float)
        if times.ndim != 1 or surv.shape != times.shape:
            raise ValueError("times and survival must be 1-d with equal length")
        if step.shape != (times.size - 1,):
            raise ValueError("need one step_absorption entry per interval")
        if not np.all(np.diff(times) > 0):
            raise ValueError("times must be strictly ascending")
        if surv[0] != 1.0:
            raise ValueError(f"survival must start at 1, got {surv[0]}")
        if np.any(np.diff(surv) > 0):
            raise ValueError("survival must be non-increasing")
        if np.any(surv <= 0) or np.any(surv > 1):
            raise ValueError("survival values must lie in (0, 1]")
        if np.any(step < 0):
            raise ValueError("step absorption must be >= 0")
        for arr, name in ((times, "times"), (surv, "survival"), (step, "step_absorption")):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @classmethod
    def from_step_absorption(cls, times: np.ndarray, step_absorption: np.ndarray) -> "SurvivalCurve":
        """Build the curve as the running product of per-step discounts."""
        step = np.asarray(step_absorption, dtype=float)
        surv = np.concatenate([[1.0], np.cumprod(1.0 - step)])
        return cls(np.asarray(times, dtype=float), surv, step)

    def resampled(self, times: np.ndarray) -> "SurvivalCurve":
        """Linear-interpolation resample onto a new ascending grid."""
        times = np.asarray(times, dtype=float)
        if times[0] < self.times[0] - 1e-12 or times[-1] > self.times[-1] + 1e-12:
            raise ValueError("resample grid must lie inside the curve's range")
        surv = np.interp(times, self.times, self.survival)
        surv[0] = self.survival[0]
        step = 1.0 - surv[1:] / surv[:-1]
        return SurvivalCurve(times, surv, np.maximum(step, 0.0))
