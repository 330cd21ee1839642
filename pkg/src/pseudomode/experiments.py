"""Initial states, concurrence pipelines, death-interval detection and sweeps."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
import math
from typing import Callable, Sequence

import numpy as np

from . import hilbert as hs
from . import model
from .entanglement import concurrence_general, off_x_magnitude, x_branches
from .model import Backend, ModelParams
from .propagate import (TimeGrid, Trajectory, asymptotic_state, dopri5, evolve_vectors,
                        kernel_projector, propagate_expm, propagate_rk, state_at,
                        step_propagator, validate_trajectory)

DEFAULT_ZERO_TOL = 1e-9
X_FORM_TOL = 1e-10


class Family(str, Enum):
    ENTANGLED = "entangled"
    FACTORIZED = "factorized"
    SINGLE_EXCITATION = "single_excitation"


class Method(str, Enum):
    EXPM = "expm"
    RK = "rk"


@dataclass(frozen=True)
class InitialStateSpec:
    """``theta`` is ignored by the factorized family."""

    family: Family = Family.ENTANGLED
    alpha_sq: float = 0.5
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        _check_alpha(self.alpha_sq)


def _check_alpha(alpha_sq: float) -> None:
    if not 0.0 <= alpha_sq <= 1.0:
        raise ValueError(f"alpha_sq must lie in [0, 1], got {alpha_sq}")


def _pure(psi: np.ndarray) -> np.ndarray:
    return np.outer(psi, psi.conj())


def initial_entangled(alpha_sq: float, theta: float = 0.0) -> np.ndarray:
    """``alpha|00> + e^{i theta} sqrt(1 - alpha^2)|11>`` as a bare-basis density matrix."""
    _check_alpha(alpha_sq)
    psi = np.zeros(4, dtype=complex)
    psi[0] = math.sqrt(alpha_sq)
    psi[3] = np.exp(1j * theta) * math.sqrt(1.0 - alpha_sq)
    return _pure(psi)


def initial_factorized(alpha_sq: float) -> np.ndarray:
    """Both qubits in ``alpha^2 |0><0| + (1 - alpha^2)|1><1|``."""
    _check_alpha(alpha_sq)
    q = np.diag([alpha_sq, 1.0 - alpha_sq]).astype(complex)
    return hs.qubit_pair(q, q)


def initial_single_excitation(alpha_sq: float, theta: float = 0.0) -> np.ndarray:
    """``alpha|10> + e^{i theta} sqrt(1 - alpha^2)|01>``."""
    _check_alpha(alpha_sq)
    psi = np.zeros(4, dtype=complex)
    psi[1] = math.sqrt(alpha_sq)
    psi[2] = np.exp(1j * theta) * math.sqrt(1.0 - alpha_sq)
    return _pure(psi)


def initial_state(spec: InitialStateSpec) -> np.ndarray:
    if spec.family is Family.ENTANGLED:
        return initial_entangled(spec.alpha_sq, spec.theta)
    if spec.family is Family.FACTORIZED:
        return initial_factorized(spec.alpha_sq)
    return initial_single_excitation(spec.alpha_sq, spec.theta)


def embed_with_mode_vacuum(rho_atoms, fock_dim: int) -> np.ndarray:
    """Bare two-qubit state -> dressed basis (x) pseudomode vacuum."""
    rho_atoms = hs.as_matrix(rho_atoms)
    if rho_atoms.shape != (4, 4):
        raise ValueError(f"expected a 4x4 atomic state, got {rho_atoms.shape}")
    return hs.embed_mode_vacuum(hs.to_dressed(rho_atoms), fock_dim)


def asymptotic_concurrence_factorized(alpha_sq: float) -> float:
    """Predicted stationary concurrence ``alpha^2 (1 - alpha^2)`` of the factorized family."""
    _check_alpha(alpha_sq)
    return alpha_sq * (1.0 - alpha_sq)


# -- backend dynamics ------------------------------------------------------

@lru_cache(maxsize=64)
def _liouvillian(params: ModelParams, backend: Backend) -> model.Liouvillian:
    return model.liouvillian_for(backend, params)


@lru_cache(maxsize=64)
def _step(params: ModelParams, backend: Backend, dt: float) -> np.ndarray:
    p = step_propagator(_liouvillian(params, backend), dt)
    p.flags.writeable = False
    return p


@lru_cache(maxsize=16)
def _single_qubit_images(params: ModelParams, grid: TimeGrid, method: Method) -> np.ndarray:
    """Images of ``|i><j|`` under the single-qubit reduced map at each grid time.

    Shape ``(n_points, 2, 2, 2, 2)`` indexed ``[t, i, j, row, col]``.
    """
    lv = model.liouvillian_single_qubit(params)
    nf = lv.fock_dim
    basis = np.stack([hs.vec(hs.embed_mode_vacuum(hs.outer(i, j, 2), nf))
                      for i in range(2) for j in range(2)], axis=1)
    if method is Method.EXPM:
        v0 = hs.expm(lv.matrix * grid.t_start) @ basis if grid.t_start > 0 else basis
        vs = evolve_vectors(hs.expm(lv.matrix * grid.step), v0, grid.n_points)
    else:
        mat = np.asarray(lv.matrix)
        times = grid.times if grid.t_start == 0 else np.concatenate(([0.0], grid.times))
        vs = dopri5(lambda t, v: mat @ v, basis, times)
        vs = vs[-grid.n_points:]
    d = lv.dim
    full = np.moveaxis(vs, 2, 1).reshape(grid.n_points, 4, d, d)
    full = np.swapaxes(full, -1, -2)
    reduced = hs.partial_trace_pseudomode(full, nf)
    images = reduced.reshape(grid.n_points, 2, 2, 2, 2)
    images.flags.writeable = False
    return images


def apply_product_images(images: np.ndarray, rho_bare) -> np.ndarray:
    """Apply ``Lambda (x) Lambda`` given single-qubit images (stacked over time)."""
    r4 = np.asarray(rho_bare, dtype=complex).reshape(2, 2, 2, 2)  # [rb, ra, cb, ca]
    out = np.einsum("...acxy,...bdpq,badc->...pxqy", images, images, r4)
    return out.reshape(out.shape[:-4] + (4, 4))


def _independent_state_at(params: ModelParams, rho_bare, t: float) -> np.ndarray:
    return model.apply_map(model.dynamical_map_independent(params, t), rho_bare)


@dataclass
class Evolution:
    """Bare-basis atomic states on a grid, with a fresh-propagation evaluator."""

    atomic: np.ndarray
    evaluate: Callable[[float], np.ndarray]
    full: Trajectory | None = None


def evolve(rho_bare, params: ModelParams, backend, grid: TimeGrid,
           method=Method.EXPM) -> Evolution:
    backend, method = Backend(backend), Method(method)
    rho_bare = hs.check_density(rho_bare)
    if backend is Backend.INDEPENDENT_STRUCTURED:
        images = _single_qubit_images(params, grid, method)
        atomic = apply_product_images(images, rho_bare)
        validate_trajectory(Trajectory(grid, atomic, 1))
        return Evolution(atomic, lambda t: _independent_state_at(params, rho_bare, t))

    lv = _liouvillian(params, backend)
    full0 = embed_with_mode_vacuum(rho_bare, lv.fock_dim)
    if method is Method.EXPM:
        traj = propagate_expm(lv, full0, grid, propagator=_step(params, backend, grid.step))
    else:
        traj = propagate_rk(lv, full0, grid)
    atomic = hs.to_bare(traj.atomic())

    def evaluate(t: float) -> np.ndarray:
        out = state_at(lv, full0, t)
        return hs.to_bare(hs.partial_trace_pseudomode(out, lv.fock_dim))

    return Evolution(atomic, evaluate, traj)


# -- concurrence traces ----------------------------------------------------

@dataclass
class ConcurrenceTrace:
    grid: TimeGrid
    c: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    pop_minus: np.ndarray
    trace_err: np.ndarray
    off_x: np.ndarray
    backend: str = ""
    states: np.ndarray | None = field(default=None, repr=False)
    trajectory: Trajectory | None = field(default=None, repr=False)
    evaluate: Callable[[float], np.ndarray] | None = field(default=None, repr=False,
                                                           compare=False)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def branch_max(self) -> np.ndarray:
        return np.maximum(self.c1, self.c2)


def trace_from_states(grid: TimeGrid, states: np.ndarray, backend: str = "",
                      x_tol: float = X_FORM_TOL, **extra) -> ConcurrenceTrace:
    off_x = off_x_magnitude(states)
    if off_x.max() > x_tol:
        k = int(np.argmax(off_x))
        raise hs.InvalidStateError(
            f"reduced state left X form at t={grid.times[k]:.6g} (off-X {off_x[k]:.3e})")
    c1, c2 = x_branches(states)
    c = np.clip(np.maximum(0.0, np.maximum(c1, c2)), 0.0, 1.0)
    pop_minus = np.real(hs.to_dressed(states)[:, hs.MINUS, hs.MINUS])
    trace_err = np.abs(np.trace(states, axis1=1, axis2=2) - 1.0)
    return ConcurrenceTrace(grid, c, c1, c2, pop_minus, trace_err, off_x, backend,
                            states, **extra)


def run_trace(spec: InitialStateSpec, params: ModelParams = ModelParams(),
              backend=Backend.COMMON_STRUCTURED, grid: TimeGrid = TimeGrid(),
              method=Method.EXPM) -> ConcurrenceTrace:
    """Initial state -> evolution -> atomic reduction -> concurrence with diagnostics."""
    backend = Backend(backend)
    evo = evolve(initial_state(spec), params, backend, grid, method)
    return trace_from_states(grid, evo.atomic, backend.value,
                             trajectory=evo.full, evaluate=evo.evaluate)


# -- sudden death / birth --------------------------------------------------

@dataclass(frozen=True)
class DeathIntervals:
    """Ordered ``(t_death, t_revival)`` pairs; ``t_revival`` is ``inf`` if open-ended."""

    intervals: tuple[tuple[float, float], ...]
    t_start: float
    t_end: float
    resolution: float

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def __getitem__(self, k):
        return self.intervals[k]

    def durations(self) -> list[float]:
        return [min(b, self.t_end) - a for a, b in self.intervals]

    def total_duration(self) -> float:
        return float(sum(self.durations()))

    def revivals(self) -> list[float]:
        """Times at which concurrence becomes positive again."""
        return [b for _, b in self.intervals if math.isfinite(b)]

    def births(self) -> list[float]:
        """Revivals of intervals that began at the start of the grid (ESB times)."""
        return [b for a, b in self.intervals if a == self.t_start and math.isfinite(b)]


def _bisect(pred: Callable[[float], bool], lo: float, hi: float, width: float) -> float:
    """Boundary between ``pred(lo) == False`` and ``pred(hi) == True``."""
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def detect_death_intervals(trace: ConcurrenceTrace, zero_tol: float = DEFAULT_ZERO_TOL,
                           refine: bool = True) -> DeathIntervals:
    """Maximal intervals where ``max(C1, C2) < -zero_tol``.

    Endpoints are refined by bisection with fresh propagation to a resolution
    of one hundredth of the grid step (when the trace carries an evaluator).
    """
    times = trace.times
    dead = trace.branch_max() < -zero_tol
    resolution = trace.grid.step / 100.0
    do_refine = refine and trace.evaluate is not None

    def is_dead(t: float) -> bool:
        c1, c2 = x_branches(trace.evaluate(t))
        return bool(max(c1, c2) < -zero_tol)

    intervals = []
    k, n = 0, len(times)
    while k < n:
        if not dead[k]:
            k += 1
            continue
        j = k
        while j + 1 < n and dead[j + 1]:
            j += 1
        if k == 0:
            t_death = float(times[0])
        elif do_refine:
            t_death = _bisect(is_dead, times[k - 1], times[k], resolution)
        else:
            t_death = float(times[k])
        if j == n - 1:
            t_rev = math.inf
        elif do_refine:
            t_rev = _bisect(lambda t: not is_dead(t), times[j], times[j + 1], resolution)
        else:
            t_rev = float(times[j + 1])
        intervals.append((t_death, t_rev))
        k = j + 1
    return DeathIntervals(tuple(intervals), float(times[0]), float(times[-1]),
                          resolution if do_refine else trace.grid.step)


# -- sweeps ----------------------------------------------------------------

@dataclass
class SweepSurface:
    alpha_sq: np.ndarray
    times: np.ndarray
    concurrence: np.ndarray
    backend: str
    family: str
    params: ModelParams
    theta: float = 0.0


def sweep(family, alpha_grid: Sequence[float], params: ModelParams = ModelParams(),
          backend=Backend.COMMON_STRUCTURED, grid: TimeGrid = TimeGrid(),
          theta: float = 0.0, threads: int = 1) -> SweepSurface:
    """Concurrence over (alpha^2, t); rows are assembled by index."""
    family, backend = Family(family), Backend(backend)
    alphas = np.asarray(alpha_grid, dtype=float)
    specs = [InitialStateSpec(family, float(a), theta) for a in alphas]

    def cell(spec):
        return run_trace(spec, params, backend, grid).c

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(cell, specs))
    else:
        rows = [cell(s) for s in specs]
    surface = np.vstack(rows) if rows else np.empty((0, grid.n_points))
    return SweepSurface(alphas, grid.times, surface, backend.value, family.value,
                        params, theta)


def default_alpha_grid(n: int = 51) -> np.ndarray:
    return np.linspace(0.0, 1.0, n)


# -- long-time limit -------------------------------------------------------

def steady_state(spec: InitialStateSpec, params: ModelParams = ModelParams(),
                 backend=Backend.COMMON_STRUCTURED) -> tuple[np.ndarray, float]:
    """Asymptotic bare-basis atomic state and its concurrence."""
    backend = Backend(backend)
    rho0 = initial_state(spec)
    if backend is Backend.INDEPENDENT_STRUCTURED:
        lv = model.liouvillian_single_qubit(params)
        proj = kernel_projector(lv)
        images = model.single_qubit_basis_images(proj, lv.fock_dim)
        rho_inf = apply_product_images(images, rho0)
    else:
        lv = _liouvillian(params, backend)
        full = asymptotic_state(lv, embed_with_mode_vacuum(rho0, lv.fock_dim))
        rho_inf = hs.to_bare(hs.partial_trace_pseudomode(full, lv.fock_dim))
    return rho_inf, concurrence_general(rho_inf)
