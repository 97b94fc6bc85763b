"""Discounted optimal-control solvers on rectangular grids.

The classical solver marches the Bellman recursion

    V(x, t) = min_u [ L(x, u, t) dt + e^(lam dt) V(x + f(x, u, t) dt, t + dt) ]

backward from a terminal slice, evaluating the shifted value by multilinear
interpolation (semi-Lagrangian).  The fractional solver replaces the
per-step discount e^(lam dt) with the Mittag-Leffler kernel E_a(lam dt^a)
and, as a diagnostic, evaluates the residual of the nonlocal PDE form

    -lam A(a) D^(1-a) V - dV/dt - min_u H(x, u, dV/dx, t)

per time slice with the windowed L1 derivative.  Control minimization is
exhaustive over a finite control grid; ties break to the lowest index.
Dynamics and running-cost callables must accept numpy arrays with leading
batch dimensions (state shape (..., dim_x), control shape (..., dim_u)).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DivergenceError, DomainError, StateEscapeError
from .fracderiv import FracOrder, HistoryBuffer, amplitude, rl_window_deriv
from .specfun import DiscountSpec, kernel

__all__ = [
    "ControlProblem",
    "SolverConfig",
    "ValueField",
    "Policy",
    "pre_hamiltonian",
    "min_hamiltonian",
    "solve_classical",
    "solve_fractional",
    "evaluate_cost",
    "lqr_oracle",
]

_BOUNDARIES = ("clamp_gradient", "extrapolate_linear")
_DIVERGENCE_LIMIT = 1e12
_ESCAPE_INFLATION = 1.5


@dataclass(frozen=True)
class ControlProblem:
    """Dynamics, running cost, control grid, and state box of one problem."""

    dim_x: int
    dynamics: Callable
    running_cost: Callable
    control_grid: Sequence
    state_box: Sequence
    boundary: str = "clamp_gradient"

    def __post_init__(self) -> None:
        if self.dim_x not in (1, 2):
            raise DomainError(f"dim_x must be 1 or 2, got {self.dim_x!r}")
        controls = np.atleast_2d(np.asarray(self.control_grid, dtype=float))
        if controls.size == 0:
            raise DomainError("control_grid must be non-empty")
        box = np.asarray(self.state_box, dtype=float).reshape(-1, 2)
        if box.shape[0] != self.dim_x:
            raise DomainError(f"state_box must give [lo, hi] per state dimension")
        if not np.all(box[:, 0] < box[:, 1]):
            raise DomainError("state_box entries must satisfy lo < hi")
        if self.boundary not in _BOUNDARIES:
            raise DomainError(f"boundary must be one of {_BOUNDARIES}, got {self.boundary!r}")
        object.__setattr__(self, "_controls", controls)
        object.__setattr__(self, "_box", box)

    @property
    def controls(self) -> np.ndarray:
        """Control grid as a (count, dim_u) array."""
        return self._controls

    @property
    def box(self) -> np.ndarray:
        """State box as a (dim_x, 2) array."""
        return self._box


@dataclass(frozen=True)
class SolverConfig:
    """Time step, horizon truncation, grid resolution, and memory window."""

    dt: float
    horizon: float
    nx: int
    window: int = 64
    terminal_value: Callable | None = None

    def __post_init__(self) -> None:
        if not (isinstance(self.dt, (int, float)) and math.isfinite(self.dt) and self.dt > 0.0):
            raise DomainError(f"dt must be positive and finite, got {self.dt!r}")
        if not (isinstance(self.horizon, (int, float)) and self.horizon > 0.0):
            raise DomainError(f"horizon must be positive, got {self.horizon!r}")
        steps = self.horizon / self.dt
        if abs(steps - round(steps)) > 1e-8 * max(1.0, steps):
            raise DomainError("horizon must be an integer number of dt steps")
        if not (isinstance(self.nx, int) and self.nx >= 8):
            raise DomainError(f"nx must be an integer >= 8, got {self.nx!r}")
        if not (isinstance(self.window, int) and self.window >= 1):
            raise DomainError(f"window must be a positive integer, got {self.window!r}")

    @property
    def steps(self) -> int:
        return round(self.horizon / self.dt)


@dataclass
class ValueField:
    """Value function samples over (time, state grid), plus diagnostics.

    ``residual`` holds the per-slice PDE residual filled in by
    solve_fractional; rows without enough trailing history are NaN.
    """

    times: np.ndarray
    axes: tuple
    values: np.ndarray
    residual: np.ndarray | None = None

    def at(self, x, time_index: int = 0) -> float:
        """Multilinear interpolation of the slice at ``time_index``."""
        foot = np.atleast_1d(np.asarray(x, dtype=float))[None, :]
        return float(_interp_grid(self.axes, self.values[time_index], foot, "clamp_gradient")[0])


@dataclass
class Policy:
    """Argmin control indices over (time, state grid), into ``control_grid``."""

    controls: np.ndarray
    control_grid: np.ndarray

    def control_at(self, time_index: int, node_index) -> np.ndarray:
        idx = self.controls[(time_index, *np.atleast_1d(node_index))]
        return self.control_grid[idx]


def _axes_for(prob: ControlProblem, nx: int) -> tuple:
    return tuple(np.linspace(lo, hi, nx) for lo, hi in prob.box)


def _grid_states(axes: tuple) -> np.ndarray:
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1)


def _interp_grid(axes: tuple, values: np.ndarray, feet: np.ndarray, boundary: str) -> np.ndarray:
    """Multilinear interpolation of a grid field at arbitrary feet.

    clamp_gradient clips feet into the box (constant continuation);
    extrapolate_linear continues the outermost cell's linear model.
    """
    dim = len(axes)
    bases = []
    fracs = []
    for d in range(dim):
        ax = axes[d]
        step = ax[1] - ax[0]
        g = (feet[..., d] - ax[0]) / step
        if boundary == "clamp_gradient":
            g = np.clip(g, 0.0, len(ax) - 1.0)
        base = np.clip(np.floor(g).astype(np.int64), 0, len(ax) - 2)
        bases.append(base)
        fracs.append(g - base)
    if dim == 1:
        b0, f0 = bases[0], fracs[0]
        return values[b0] * (1.0 - f0) + values[b0 + 1] * f0
    b0, b1 = bases
    f0, f1 = fracs
    n1 = len(axes[1])
    flat = values.ravel()
    i00 = b0 * n1 + b1
    v00 = flat[i00]
    v01 = flat[i00 + 1]
    v10 = flat[i00 + n1]
    v11 = flat[i00 + n1 + 1]
    return (
        v00 * (1 - f0) * (1 - f1)
        + v01 * (1 - f0) * f1
        + v10 * f0 * (1 - f1)
        + v11 * f0 * f1
    )


def _batched_LF(prob: ControlProblem, states: np.ndarray, t: float):
    """Running cost and velocity over (grid shape, control count) batches."""
    U = prob.controls
    shape = states.shape[:-1]
    xb = np.broadcast_to(states[..., None, :], shape + (U.shape[0], prob.dim_x))
    ub = np.broadcast_to(U, shape + U.shape)
    F = np.asarray(prob.dynamics(xb, ub, t), dtype=float)
    L = np.asarray(prob.running_cost(xb, ub, t), dtype=float)
    F = np.broadcast_to(F, xb.shape)
    L = np.broadcast_to(L, shape + (U.shape[0],))
    return L, F


def pre_hamiltonian(prob: ControlProblem, x, u, p, t: float = 0.0) -> float:
    """L(x, u, t) + p . f(x, u, t)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    f = np.atleast_1d(np.asarray(prob.dynamics(x, u, t), dtype=float))
    cost = float(np.asarray(prob.running_cost(x, u, t)))
    return cost + float(np.dot(p, f))


def min_hamiltonian(prob: ControlProblem, x, p, t: float = 0.0) -> tuple[float, int]:
    """Exhaustive minimum of the pre-Hamiltonian over the control grid.

    Returns (value, argmin index); ties break to the lowest index.
    """
    vals = [pre_hamiltonian(prob, x, u, p, t) for u in prob.controls]
    idx = int(np.argmin(vals))
    return vals[idx], idx


def _stability_guard(spec: DiscountSpec, dt: float) -> None:
    increment = abs(spec.lam) * dt**spec.alpha / math.gamma(spec.alpha + 1.0)
    if increment >= 1.0:
        msg = (
            f"discount increment |lam| dt^alpha / Gamma(alpha+1) = {increment:.3g} >= 1; "
            "reduce dt"
        )
        if spec.lam > 0.0:
            warnings.warn(msg)
        else:
            raise DomainError(msg)


def _march(prob: ControlProblem, spec: DiscountSpec, cfg: SolverConfig) -> tuple[ValueField, Policy]:
    _stability_guard(spec, cfg.dt)
    nt = cfg.steps
    axes = _axes_for(prob, cfg.nx)
    states = _grid_states(axes)
    shape = states.shape[:-1]
    times = np.arange(nt + 1) * cfg.dt
    if spec.alpha == 1.0:
        disc = math.exp(spec.lam * cfg.dt)
    else:
        disc = float(kernel(spec, cfg.dt))
    values = np.empty((nt + 1,) + shape)
    policy = np.zeros((nt,) + shape, dtype=np.int32)
    if cfg.terminal_value is None:
        values[nt] = 0.0
    else:
        values[nt] = np.asarray(cfg.terminal_value(states), dtype=float)
    for i in range(nt - 1, -1, -1):
        t = times[i]
        L, F = _batched_LF(prob, states, t)
        feet = states[..., None, :] + F * cfg.dt
        shifted = _interp_grid(axes, values[i + 1], feet, prob.boundary)
        cand = L * cfg.dt + disc * shifted
        best = np.argmin(cand, axis=-1)
        policy[i] = best
        slice_i = np.take_along_axis(cand, best[..., None], axis=-1)[..., 0]
        if not np.all(np.isfinite(slice_i)) or np.abs(slice_i).max() > _DIVERGENCE_LIMIT:
            raise DivergenceError(f"value field diverged at t = {t:g}")
        values[i] = slice_i
    return (
        ValueField(times=times, axes=axes, values=values),
        Policy(controls=policy, control_grid=prob.controls),
    )


def _min_h_field(prob: ControlProblem, axes: tuple, states: np.ndarray, v_slice: np.ndarray, t: float) -> np.ndarray:
    grads = np.gradient(v_slice, *axes) if len(axes) > 1 else [np.gradient(v_slice, axes[0])]
    L, F = _batched_LF(prob, states, t)
    h = L.copy()
    for d in range(prob.dim_x):
        h += grads[d][..., None] * F[..., d]
    return h.min(axis=-1)


def _residual_field(prob: ControlProblem, spec: DiscountSpec, cfg: SolverConfig, fld: ValueField) -> np.ndarray:
    """PDE residual -lam A(a) D^(1-a) V - V_t - min H per time slice.

    The order-(1-a) derivative is the windowed L1 form over the trailing
    cfg.window intervals; slices without a full window or a forward
    neighbour stay NaN.
    """
    nt = cfg.steps
    axes = fld.axes
    states = _grid_states(axes)
    amp = amplitude(spec.alpha)
    order = FracOrder(1.0 - spec.alpha)
    res = np.full_like(fld.values, np.nan)
    buf = HistoryBuffer(cfg.dt, cfg.window + 1)
    buf.push(fld.times[0], fld.values[0])
    for i in range(1, nt):
        buf.push(fld.times[i], fld.values[i])
        if len(buf) < cfg.window + 1:
            continue
        frac = rl_window_deriv(buf, order)
        v_t = (fld.values[i + 1] - fld.values[i]) / cfg.dt
        min_h = _min_h_field(prob, axes, states, fld.values[i], fld.times[i])
        res[i] = -spec.lam * amp * frac - v_t - min_h
    return res


def solve_classical(prob: ControlProblem, spec: DiscountSpec, cfg: SolverConfig) -> tuple[ValueField, Policy]:
    """Backward value iteration with the exponential per-step discount e^(lam dt)."""
    if spec.alpha != 1.0:
        raise DomainError("solve_classical requires alpha = 1")
    return _march(prob, spec, cfg)


def solve_fractional(prob: ControlProblem, spec: DiscountSpec, cfg: SolverConfig) -> tuple[ValueField, Policy]:
    """Backward value iteration discounted by E_a(lam dt^a) per step.

    At alpha = 1 the update is exactly the classical one (E_1 = exp).  The
    returned ValueField carries the PDE residual diagnostic over the trailing
    L1 window.
    """
    if cfg.window < 10:
        warnings.warn(f"memory window of {cfg.window} slices is short; residual diagnostics may be crude")
    fld, pol = _march(prob, spec, cfg)
    fld.residual = _residual_field(prob, spec, cfg, fld)
    return fld, pol


def _escape_bounds(prob: ControlProblem) -> np.ndarray:
    box = prob.box
    center = 0.5 * (box[:, 0] + box[:, 1])
    half = 0.5 * (box[:, 1] - box[:, 0])
    return np.stack([center - _ESCAPE_INFLATION * half, center + _ESCAPE_INFLATION * half], axis=1)


def _policy_law(prob: ControlProblem, policy: Policy, cfg: SolverConfig):
    axes = _axes_for(prob, cfg.nx)
    nt = policy.controls.shape[0]
    steps = [ax[1] - ax[0] for ax in axes]

    def law(x: np.ndarray, t: float) -> np.ndarray:
        i = min(max(int(round(t / cfg.dt)), 0), nt - 1)
        idx = tuple(
            int(np.clip(round((x[d] - axes[d][0]) / steps[d]), 0, len(axes[d]) - 1))
            for d in range(prob.dim_x)
        )
        return policy.control_grid[policy.controls[(i, *idx)]]

    return law


def evaluate_cost(prob: ControlProblem, spec: DiscountSpec, law, x0, cfg: SolverConfig) -> float:
    """Forward rollout cost under a feedback law or solved Policy.

    Integrates the dynamics with classical RK4 and accumulates
    kernel(spec, t) * L along the trajectory with trapezoid weights up to
    cfg.horizon.  ``law`` is either a callable (state, time) -> control or a
    Policy (looked up at the nearest grid node, held per step).
    """
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    box = prob.box
    if x.shape != (prob.dim_x,):
        raise DomainError(f"x0 must have {prob.dim_x} components")
    if np.any(x < box[:, 0]) or np.any(x > box[:, 1]):
        raise DomainError(f"x0 {x0!r} lies outside the state box")
    if isinstance(law, Policy):
        law = _policy_law(prob, law, cfg)
    nt = cfg.steps
    dt = cfg.dt
    times = np.arange(nt + 1) * dt
    if spec.alpha == 1.0:
        weights = np.exp(spec.lam * times)
    else:
        weights = np.asarray(kernel(spec, times), dtype=float)
    bounds = _escape_bounds(prob)

    def f_at(xq: np.ndarray, t: float) -> np.ndarray:
        u = np.atleast_1d(np.asarray(law(xq, t), dtype=float))
        return np.atleast_1d(np.asarray(prob.dynamics(xq, u, t), dtype=float))

    run = np.empty(nt + 1)
    u = np.atleast_1d(np.asarray(law(x, 0.0), dtype=float))
    run[0] = float(np.asarray(prob.running_cost(x, u, 0.0)))
    for i in range(nt):
        t = times[i]
        k1 = f_at(x, t)
        k2 = f_at(x + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = f_at(x + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = f_at(x + dt * k3, t + dt)
        x = x + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if np.any(x < bounds[:, 0]) or np.any(x > bounds[:, 1]):
            raise StateEscapeError(f"trajectory escaped the inflated state box at t = {times[i + 1]:g}")
        t2 = times[i + 1]
        u = np.atleast_1d(np.asarray(law(x, t2), dtype=float))
        run[i + 1] = float(np.asarray(prob.running_cost(x, u, t2)))
    y = weights * run
    return float(dt * (0.5 * y[0] + y[1:-1].sum() + 0.5 * y[-1]))


def lqr_oracle(a: float, b: float, q: float, r: float, lam: float) -> tuple[float, float]:
    """Stabilizing root of the discounted scalar Riccati equation.

    Solves (b^2/r) P^2 - (2a + lam) P - q = 0 for the root reached by value
    iteration and returns (P, k) with feedback u = k x, k = -P b / r.
    """
    if not (r > 0.0):
        raise DomainError(f"r must be positive, got {r!r}")
    if not (q >= 0.0):
        raise DomainError(f"q must be non-negative, got {q!r}")
    if b == 0.0:
        raise DomainError("b must be nonzero")
    disc = (2.0 * a + lam) ** 2 + 4.0 * q * b * b / r
    if disc < 0.0:
        raise DomainError(f"negative discriminant {disc!r}: no real stationary value")
    P = r * ((2.0 * a + lam) + math.sqrt(disc)) / (2.0 * b * b)
    return P, -P * b / r
