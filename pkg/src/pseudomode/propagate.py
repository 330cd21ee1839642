"""Time evolution under a constant Liouvillian."""
from __future__ import annotations

from dataclasses import dataclass, field
import math
import warnings

import numpy as np

from . import hilbert as hs
from .model import Liouvillian


class GeneratorError(ValueError):
    """The Liouvillian cannot produce a well-defined long-time limit."""


class StepSizeUnderflow(RuntimeError):
    pass


@dataclass(frozen=True)
class TimeGrid:
    t_start: float = 0.0
    t_end: float = 50.0
    n_points: int = 1001

    def __post_init__(self):
        if self.t_start < 0:
            raise ValueError(f"t_start must be >= 0, got {self.t_start}")
        if not self.t_end > self.t_start:
            raise ValueError(f"t_end ({self.t_end}) must exceed t_start ({self.t_start})")
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ValueError(f"n_points must be an integer >= 2, got {self.n_points}")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_points)

    @property
    def step(self) -> float:
        return (self.t_end - self.t_start) / (self.n_points - 1)


@dataclass
class Trajectory:
    """Sampled density matrices plus per-point validation diagnostics."""

    grid: TimeGrid
    states: np.ndarray
    fock_dim: int = 1
    trace_err: np.ndarray = field(default=None, repr=False)
    herm_err: np.ndarray = field(default=None, repr=False)
    min_eig: np.ndarray = field(default=None, repr=False)
    cutoff_population: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.trace_err is None:
            self.trace_err, self.herm_err, self.min_eig = hs.density_diagnostics(self.states)
        if self.cutoff_population is None:
            self.cutoff_population = cutoff_population(self.states, self.fock_dim)

    @property
    def max_cutoff_population(self) -> float:
        return float(self.cutoff_population.max())

    def atomic(self) -> np.ndarray:
        return hs.partial_trace_pseudomode(self.states, self.fock_dim)


def cutoff_population(states: np.ndarray, fock_dim: int) -> np.ndarray:
    """Population of the highest retained Fock level (zero without a mode)."""
    if fock_dim <= 1:
        return np.zeros(states.shape[0])
    n = states.shape[-1]
    d = n // fock_dim
    diag = np.real(np.diagonal(states, axis1=-2, axis2=-1)).reshape(-1, d, fock_dim)
    return diag[:, :, -1].sum(axis=1)


def validate_trajectory(traj: Trajectory, tol: hs.Tolerances = hs.DEFAULT_TOL,
                        warn_factor: float = 10.0, abort_factor: float = 1000.0) -> None:
    """Warn past ``warn_factor`` x tolerance and raise past ``abort_factor`` x."""
    checks = (
        ("trace error", traj.trace_err, tol.trace),
        ("Hermiticity error", traj.herm_err, tol.hermiticity),
        ("negative eigenvalue", -traj.min_eig, tol.positivity),
    )
    for name, values, limit in checks:
        k = int(np.argmax(values))
        worst = float(values[k])
        t = float(traj.grid.times[k])
        if worst > abort_factor * limit:
            raise hs.InvalidStateError(
                f"{name} {worst:.3e} at t={t:.6g} exceeds {abort_factor:g}x tolerance {limit:g}")
        if worst > warn_factor * limit:
            warnings.warn(f"{name} {worst:.3e} at t={t:.6g} exceeds {warn_factor:g}x tolerance",
                          RuntimeWarning, stacklevel=3)


def _check_inputs(lv: Liouvillian, rho0) -> np.ndarray:
    rho0 = hs.check_density(rho0)
    if rho0.shape[0] != lv.dim:
        raise ValueError(f"state dimension {rho0.shape[0]} does not match generator "
                         f"dimension {lv.dim}")
    return rho0


def step_propagator(lv: Liouvillian, dt: float) -> np.ndarray:
    return hs.expm(lv.matrix * dt)


def state_at(lv: Liouvillian, rho0, t: float) -> np.ndarray:
    """Fresh ``unvec(expm(L t) vec(rho0))``."""
    rho0 = hs.as_matrix(rho0)
    return hs.unvec(hs.expm(lv.matrix * t) @ hs.vec(rho0), rho0.shape[0])


def evolve_vectors(prop: np.ndarray, v0: np.ndarray, n_points: int) -> np.ndarray:
    """Repeatedly apply a step propagator; ``v0`` may carry trailing batch axes."""
    out = np.empty((n_points,) + v0.shape, dtype=complex)
    out[0] = v0
    for k in range(1, n_points):
        out[k] = prop @ out[k - 1]
    return out


def propagate_expm(lv: Liouvillian, rho0, grid: TimeGrid, *, propagator=None,
                   tol: hs.Tolerances = hs.DEFAULT_TOL) -> Trajectory:
    """Exact evolution sampled on ``grid`` using one precomputed step propagator.

    ``propagator`` may be passed in to share ``expm(L * grid.step)`` between
    many initial states.
    """
    rho0 = _check_inputs(lv, rho0)
    if propagator is None:
        propagator = step_propagator(lv, grid.step)
    v0 = hs.vec(rho0)
    if grid.t_start > 0:
        v0 = hs.expm(lv.matrix * grid.t_start) @ v0
    vs = evolve_vectors(propagator, v0, grid.n_points)
    states = np.swapaxes(vs.reshape(grid.n_points, lv.dim, lv.dim), 1, 2)
    traj = Trajectory(grid, states, lv.fock_dim)
    validate_trajectory(traj, tol)
    return traj


# -- Dormand-Prince 5(4) ---------------------------------------------------

_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
# 5th-order weights minus embedded 4th-order weights
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


def dopri5(fun, y0, times, rtol: float = 1e-10, atol: float = 1e-12,
           max_steps: int = 10_000_000):
    """Integrate ``y' = fun(t, y)`` and return ``y`` at each entry of ``times``.

    Adaptive Dormand-Prince 5(4) with local extrapolation and FSAL; steps are
    truncated so every output time is hit exactly.  ``y0`` may be any
    complex or real array.
    """
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) <= 0):
        raise ValueError("output times must be strictly increasing")
    y = np.array(y0, dtype=complex)
    out = np.empty((len(times),) + y.shape, dtype=complex)
    out[0] = y
    t = float(times[0])
    k1 = fun(t, y)

    scale = atol + rtol * np.abs(y)
    d0 = np.max(np.abs(y) / scale)
    d1 = np.max(np.abs(k1) / scale)
    h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h = min(h, times[-1] - t)

    steps = 0
    for idx in range(1, len(times)):
        t_target = float(times[idx])
        while t < t_target:
            steps += 1
            if steps > max_steps:
                raise RuntimeError(f"dopri5 exceeded {max_steps} steps")
            last = t + h >= t_target
            h_try = t_target - t if last else h
            if h_try <= 16 * np.finfo(float).eps * max(abs(t), 1.0):
                raise StepSizeUnderflow(f"step size underflow at t={t}")
            ks = [k1]
            for s in range(1, 7):
                incr = sum(a * k for a, k in zip(_A[s], ks) if a != 0.0)
                ks.append(fun(t + _C[s] * h_try, y + h_try * incr))
            y_new = y + h_try * sum(a * k for a, k in zip(_A[6], ks[:6]) if a != 0.0)
            err = h_try * sum(e * k for e, k in zip(_E, ks) if e != 0.0)
            sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err_norm = float(np.max(np.abs(err) / sc))
            if err_norm <= 1.0:
                t = t_target if last else t + h_try
                y = y_new
                k1 = ks[6]
                factor = 5.0 if err_norm == 0 else min(5.0, max(0.2, 0.9 * err_norm ** -0.2))
                h = h_try * factor if not last else max(h, h_try * factor)
            else:
                h = h_try * max(0.2, 0.9 * err_norm ** -0.2)
        out[idx] = y
    return out


def propagate_rk(lv: Liouvillian, rho0, grid: TimeGrid, *, rtol: float = 1e-10,
                 atol: float = 1e-13, tol: hs.Tolerances = hs.DEFAULT_TOL) -> Trajectory:
    """Adaptive Runge-Kutta evolution, an independent check on :func:`propagate_expm`."""
    rho0 = _check_inputs(lv, rho0)
    mat = np.asarray(lv.matrix)
    times = grid.times
    if grid.t_start > 0:
        times = np.concatenate(([0.0], times))
    vs = dopri5(lambda t, v: mat @ v, hs.vec(rho0), times, rtol=rtol, atol=atol)
    if grid.t_start > 0:
        vs = vs[1:]
    states = np.swapaxes(vs.reshape(grid.n_points, lv.dim, lv.dim), 1, 2)
    traj = Trajectory(grid, states, lv.fock_dim)
    validate_trajectory(traj, tol)
    return traj


# -- long-time limit -------------------------------------------------------

def kernel_projector(lv: Liouvillian, zero_tol: float = 1e-10,
                     ) -> np.ndarray:
    """Spectral projector onto ker(L) along range(L).

    Raises :class:`GeneratorError` for growing modes or for a kernel that is
    not semisimple.
    """
    mat = np.asarray(lv.matrix)
    evals = np.linalg.eigvals(mat)
    if np.max(evals.real) > zero_tol:
        raise GeneratorError(f"eigenvalue with positive real part {np.max(evals.real):.3e}")
    k = int(np.sum(np.abs(evals) < zero_tol))
    if k == 0:
        raise GeneratorError("generator has no stationary state")
    u, _, vh = np.linalg.svd(mat)
    right = vh[-k:].conj().T
    left = u[:, -k:]
    overlap = left.conj().T @ right
    if np.linalg.cond(overlap) > 1e8:
        raise GeneratorError("zero eigenvalue is not semisimple")
    return right @ np.linalg.solve(overlap, left.conj().T)


def asymptotic_state(lv: Liouvillian, rho0, zero_tol: float = 1e-10) -> np.ndarray:
    """Limit of ``exp(L t) rho0`` as ``t -> infinity``.

    Oscillating modes (purely imaginary non-zero eigenvalues) that rho0
    overlaps are reported as :class:`GeneratorError`.
    """
    rho0 = _check_inputs(lv, rho0)
    v0 = hs.vec(rho0)
    mat = np.asarray(lv.matrix)
    evals, right = np.linalg.eig(mat)
    if np.max(evals.real) > zero_tol:
        raise GeneratorError(f"eigenvalue with positive real part {np.max(evals.real):.3e}")
    rotating = (np.abs(evals.real) < zero_tol) & (np.abs(evals.imag) >= zero_tol)
    if rotating.any():
        coeffs = np.linalg.lstsq(right, v0, rcond=None)[0]
        weight = np.abs(coeffs[rotating]) * np.linalg.norm(right[:, rotating], axis=0)
        if weight.max() > 1e-8:
            raise GeneratorError("state overlaps a purely oscillating mode; no limit exists")
    v_inf = kernel_projector(lv, zero_tol) @ v0
    return hs.unvec(v_inf, lv.dim)
