"""Time-domain propagation with Dirichlet walls and per-step discounting.

Three interchangeable steppers advance the confined kernel K(x, t):

* ``SPECTRAL_SINE``: sine-transform modes advanced by exact phases; exact
  (to round-off) for band-limited fields, zero potential only.
* ``CRANK_NICOLSON``: Cayley form on the standard second difference;
  unconditionally stable, unitary in the discrete norm, O(dt^2) accurate.
* ``FEYNMAN_KERNEL``: the discretized short-time path-integral recursion;
  each step convolves the piecewise-linear interpolant of K with the free
  kernel over the box, evaluated in closed form via Fresnel integrals.

Absorption never modifies K; the surviving population is discounted by the
probability P_j absorbed on each step, giving the survival curve and the
physical state Psi = sqrt(survival) * K.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field
from enum import Enum
from typing import Callable

import numpy as np
from scipy.fft import dst, idst
from scipy.linalg import matmul_toeplitz, solve_banded
from scipy.special import fresnel

from .core import (
    AbsorberSpec,
    PhysicalParams,
    Side,
    SpatialGrid,
    SurvivalCurve,
    WaveField,
    boundary_derivative,
    l2_norm_sq,
    require_dirichlet,
)
from .errors import ConfigurationError, NumericError, StepResolutionError

SURVIVAL_FLOOR = 1e-300
COARSE_STEP_WARNING = 0.1


@dataclass(frozen=True, eq=False)
class Potential:
    """Real potential sampled on the grid nodes, with a zero fast path."""

    values: np.ndarray | None = None

    def __post_init__(self):
        if self.values is not None:
            vals = np.ascontiguousarray(self.values, dtype=float)
            if not np.all(np.isfinite(vals)):
                raise ValueError("potential must be finite at every node")
            vals.flags.writeable = False
            object.__setattr__(self, "values", vals)

    @property
    def is_zero(self) -> bool:
        return self.values is None or not np.any(self.values)

    @classmethod
    def zero(cls) -> "Potential":
        return cls(None)

    @classmethod
    def from_callable(cls, grid: SpatialGrid, fn: Callable[[np.ndarray], np.ndarray]) -> "Potential":
        return cls(np.asarray(fn(grid.nodes), dtype=float))

    def on_grid(self, grid: SpatialGrid) -> np.ndarray:
        if self.values is None:
            return np.zeros(grid.n_points)
        if self.values.shape != (grid.n_points,):
            raise ValueError("potential sampled on a different grid")
        return self.values


class StepperKind(Enum):
    SPECTRAL_SINE = "spectral"
    CRANK_NICOLSON = "cn"
    FEYNMAN_KERNEL = "feynman"


@dataclass(frozen=True)
class PropagationConfig:
    """Everything a discounted propagation run needs."""

    dt: float
    n_steps: int
    stepper: StepperKind
    grid: SpatialGrid
    potential: Potential
    absorber: AbsorberSpec
    params: PhysicalParams
    history_stride: int = 0
    metadata: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 1:
            raise ValueError("need at least one step")
        if self.history_stride < 0:
            raise ValueError("history_stride must be >= 0")
        meta = dict(self.metadata)
        meta.setdefault("total_time", self.dt * self.n_steps)
        if self.stepper is StepperKind.CRANK_NICOLSON:
            # stability-free scheme; record the accuracy-bound step instead
            h = self.grid.spacing
            e_max = 2.0 * self.params.hbar**2 / (self.params.mass * h**2)
            t_total = self.dt * self.n_steps
            dt_acc = math.sqrt(0.12 * self.params.hbar**3 / (t_total * e_max**3))
            meta.setdefault("cn_dt_for_percent_phase", dt_acc)
        object.__setattr__(self, "metadata", meta)

    @property
    def total_time(self) -> float:
        return self.dt * self.n_steps


@dataclass(frozen=True)
class DiscountedField:
    """Kernel K plus the survival scalar; Psi = sqrt(survival) * K."""

    kernel: WaveField
    survival: float

    def __post_init__(self):
        if not (0 < self.survival <= 1):
            raise ValueError(f"survival must lie in (0, 1], got {self.survival}")

    @property
    def psi_values(self) -> np.ndarray:
        return math.sqrt(self.survival) * self.kernel.values


@dataclass(frozen=True)
class PropagationResult:
    curve: SurvivalCurve
    final: DiscountedField
    history: list | None
    truncated: bool


# ---------------------------------------------------------------------------
# steppers


class _SpectralStepper:
    """Exact per-mode phases on the sine basis of the grid's full width."""

    def __init__(self, grid: SpatialGrid, dt: float, params: PhysicalParams,
                 potential: Potential):
        if not potential.is_zero:
            raise ConfigurationError(
                "the sine-spectral stepper handles zero potential only; "
                "use the cn stepper for V != 0"
            )
        m_int = grid.n_points - 2
        length = grid.domain.length
        j = np.arange(1, m_int + 1)
        energies = params.hbar**2 * (j * np.pi / length) ** 2 / (2 * params.mass)
        self._phase = np.exp(-1j * energies * dt / params.hbar)

    def advance(self, values: np.ndarray) -> np.ndarray:
        out = np.zeros_like(values)
        out[1:-1] = idst(dst(values[1:-1], type=1) * self._phase, type=1)
        return out


class _CrankNicolsonStepper:
    """Cayley form (1 + i dt H / 2 hbar) K' = (1 - i dt H / 2 hbar) K."""

    def __init__(self, grid: SpatialGrid, dt: float, params: PhysicalParams,
                 potential: Potential):
        h = grid.spacing
        v_int = potential.on_grid(grid)[1:-1]
        coef = 1j * dt / (2.0 * params.hbar)
        self._h_diag = params.hbar**2 / (params.mass * h**2) + v_int
        self._h_off = -params.hbar**2 / (2.0 * params.mass * h**2)
        m_int = grid.n_points - 2
        ab = np.zeros((3, m_int), dtype=complex)
        ab[0, 1:] = coef * self._h_off
        ab[1, :] = 1.0 + coef * self._h_diag
        ab[2, :-1] = coef * self._h_off
        self._ab = ab
        self._coef = coef

    def advance(self, values: np.ndarray) -> np.ndarray:
        v = values[1:-1]
        rhs = v - self._coef * self._apply_h(v)
        try:
            out_int = solve_banded((1, 1), self._ab, rhs)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
            raise NumericError(f"tridiagonal solve failed: {exc}") from exc
        out = np.zeros_like(values)
        out[1:-1] = out_int
        return out

    def _apply_h(self, v: np.ndarray) -> np.ndarray:
        out = self._h_diag * v
        out[1:] += self._h_off * v[:-1]
        out[:-1] += self._h_off * v[1:]
        return out


class _FresnelKernelStepper:
    """One step of the short-time kernel recursion, in closed form.

    The previous field is read as its piecewise-linear interpolant (zero at
    and beyond the walls); integrating each linear piece against
    alpha exp(i m (x-y)^2 / (2 hbar dt)) reduces to Fresnel integrals, and
    on a uniform grid the resulting one-step matrix is Toeplitz, so a step
    is an FFT-based Toeplitz multiply.  The potential enters as the phase
    exp(-i V(x) dt / hbar) at the target point.
    """

    def __init__(self, grid: SpatialGrid, dt: float, params: PhysicalParams,
                 potential: Potential):
        h = grid.spacing
        fresnel_len = math.sqrt(2.0 * math.pi * params.hbar * dt / params.mass)
        if fresnel_len <= 2.0 * h:
            raise StepResolutionError(dt, 2.0 * h**2 * params.mass / (math.pi * params.hbar))
        m_int = grid.n_points - 2
        col, row = self._weights(h, m_int, dt, params)
        self._col, self._row = col, row
        self._vphase = np.exp(-1j * potential.on_grid(grid)[1:-1] * dt / params.hbar)

    @staticmethod
    def _weights(h: float, m_int: int, dt: float, params: PhysicalParams):
        hbar, m = params.hbar, params.mass
        ell = math.sqrt(math.pi * hbar * dt / m)
        alpha = math.sqrt(m / (2.0 * math.pi * hbar * dt)) * np.exp(-1j * np.pi / 4.0)

        def kappa(u):
            return np.exp(1j * m * u**2 / (2.0 * hbar * dt))

        def f_cum(u):
            s, c = fresnel(u / ell)
            return ell * (c + 1j * s)

        iht = -1j * hbar * dt / m
        offsets = np.arange(-(m_int - 1), m_int)
        p1 = (offsets - 1) * h
        m1 = offsets * h
        q1 = (offsets + 1) * h
        rise = (iht * (kappa(m1) - kappa(p1)) - p1 * (f_cum(m1) - f_cum(p1))) / h
        fall = (q1 * (f_cum(q1) - f_cum(m1)) - iht * (kappa(q1) - kappa(m1))) / h
        w = alpha * (rise + fall)
        zero = m_int - 1
        return w[zero::-1].copy(), w[zero:].copy()

    def advance(self, values: np.ndarray) -> np.ndarray:
        out = np.zeros_like(values)
        out[1:-1] = self._vphase * matmul_toeplitz((self._col, self._row), values[1:-1])
        return out


_STEPPERS = {
    StepperKind.SPECTRAL_SINE: _SpectralStepper,
    StepperKind.CRANK_NICOLSON: _CrankNicolsonStepper,
    StepperKind.FEYNMAN_KERNEL: _FresnelKernelStepper,
}


def _make_stepper(kind: StepperKind, grid: SpatialGrid, dt: float,
                  params: PhysicalParams, potential: Potential):
    return _STEPPERS[kind](grid, dt, params, potential)


def step_spectral_sine(field: WaveField, dt: float, params: PhysicalParams) -> WaveField:
    """Advance a Dirichlet field one step by exact sine-mode phases (V = 0)."""
    stepper = _SpectralStepper(field.grid, dt, params, Potential.zero())
    return WaveField(field.grid, stepper.advance(field.values), field.time + dt)


def step_crank_nicolson(field: WaveField, dt: float, potential: Potential,
                        params: PhysicalParams) -> WaveField:
    """Advance a Dirichlet field one Crank-Nicolson step."""
    stepper = _CrankNicolsonStepper(field.grid, dt, params, potential)
    return WaveField(field.grid, stepper.advance(field.values), field.time + dt)


def step_feynman_kernel(field: WaveField, dt: float, potential: Potential,
                        params: PhysicalParams) -> WaveField:
    """Advance a Dirichlet field one short-time-kernel step."""
    stepper = _FresnelKernelStepper(field.grid, dt, params, potential)
    return WaveField(field.grid, stepper.advance(field.values), field.time + dt)


def absorb_probability(field: WaveField, dt: float, absorber: AbsorberSpec,
                       params: PhysicalParams) -> float:
    """Probability absorbed at the walls during one step of length dt.

    c * dt * [lambda_left |dK/dx(left)|^2 + lambda_right |dK/dx(right)|^2]
    with c set by the absorber's prefactor convention.  Clamped to [0, 1);
    warns when the raw value reaches 0.1, which means dt is too coarse for
    the discount model.
    """
    c = absorber.convention.rate_constant(params)
    total = 0.0
    if absorber.lambda_left > 0:
        total += absorber.lambda_left * abs(boundary_derivative(field, Side.LEFT)) ** 2
    if absorber.lambda_right > 0:
        total += absorber.lambda_right * abs(boundary_derivative(field, Side.RIGHT)) ** 2
    p = c * dt * total
    if p >= COARSE_STEP_WARNING:
        warnings.warn(
            f"per-step absorption {p:.3g} >= {COARSE_STEP_WARNING}; "
            "the discount model needs a finer time step",
            stacklevel=2,
        )
    return min(max(p, 0.0), np.nextafter(1.0, 0.0))


def propagate_with_absorption(initial: WaveField, config: PropagationConfig) -> PropagationResult:
    """Run the discounted propagation loop.

    Each step advances K with the configured stepper, evaluates the
    absorption probability from the post-step field, and multiplies the
    survival by (1 - P_j).  K itself is never damped; the discount lives
    entirely in the survival factor.  Stops early (flagged) if survival
    underflows 1e-300.
    """
    require_dirichlet(initial)
    norm = l2_norm_sq(initial)
    if abs(norm - 1.0) > 1e-6:
        raise ValueError(f"initial field must be normalized, got |K|^2 = {norm}")
    stepper = _make_stepper(config.stepper, initial.grid, config.dt,
                            config.params, config.potential)
    values = initial.values
    survival = 1.0
    times = [initial.time]
    steps_p = []
    history = [] if config.history_stride else None
    if history is not None:
        history.append(initial)
    truncated = False
    fld = initial
    for j in range(1, config.n_steps + 1):
        values = stepper.advance(values)
        t = initial.time + j * config.dt
        fld = WaveField(initial.grid, values, t)
        p = absorb_probability(fld, config.dt, config.absorber, config.params)
        survival *= 1.0 - p
        times.append(t)
        steps_p.append(p)
        if history is not None and j % config.history_stride == 0:
            history.append(fld)
        if survival < SURVIVAL_FLOOR:
            truncated = True
            break
    curve = SurvivalCurve.from_step_absorption(np.asarray(times), np.asarray(steps_p))
    final = DiscountedField(fld, survival)
    return PropagationResult(curve=curve, final=final, history=history, truncated=truncated)


def combined_cavity_decay(transverse: SurvivalCurve, axial: SurvivalCurve) -> SurvivalCurve:
    """Pointwise product of two decay laws (cavity: transverse x axial).

    Identical time grids multiply directly; otherwise both curves are
    resampled by linear interpolation onto the finer grid restricted to the
    overlapping range.  The ranges must overlap and share the start time.
    """
    if np.array_equal(transverse.times, axial.times):
        ta, sa = transverse.times, transverse.survival * axial.survival
    else:
        t0 = max(transverse.times[0], axial.times[0])
        t1 = min(transverse.times[-1], axial.times[-1])
        if not t1 > t0:
            raise ValueError("survival curves do not overlap in time")
        if abs(transverse.times[0] - axial.times[0]) > 1e-12:
            raise ValueError("survival curves must share the start time")
        source = transverse if transverse.times.size >= axial.times.size else axial
        ta = source.times[(source.times >= t0) & (source.times <= t1)]
        sa = transverse.resampled(ta).survival * axial.resampled(ta).survival
    step = 1.0 - sa[1:] / sa[:-1]
    return SurvivalCurve(ta, sa, np.maximum(step, 0.0))
