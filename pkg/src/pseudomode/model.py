"""Generators for the three dynamics backends.

Everything is written in the frame rotating at the (resonant) atomic
frequency, so the free Hamiltonian drops out and only the atom-pseudomode
exchange and the pseudomode leakage remain.  Rates and times are measured
in units of the Markovian single-atom decay rate ``gamma0 = 4 Omega^2 / Gamma``.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
import math

import numpy as np

from . import hilbert as hs

DEFAULT_OMEGA = math.sqrt(0.05)
DEFAULT_GAMMA = 0.2
DEFAULT_FOCK_CUTOFF = 2


class Backend(str, Enum):
    COMMON_STRUCTURED = "common_structured"
    COMMON_MARKOV = "common_markov"
    INDEPENDENT_STRUCTURED = "independent_structured"


def markov_rate(omega_coupling: float, gamma_pseudo: float) -> float:
    """Markovian decay rate ``4 Omega^2 / Gamma`` of a single atom."""
    if gamma_pseudo <= 0:
        raise ValueError(f"pseudomode width must be positive, got {gamma_pseudo}")
    return 4.0 * omega_coupling**2 / gamma_pseudo


@dataclass(frozen=True)
class ModelParams:
    """Reservoir/coupling configuration.

    ``omega_coupling`` and ``gamma_pseudo`` are in units of gamma0; with the
    defaults gamma0 evaluates to 1.
    """

    omega_coupling: float = DEFAULT_OMEGA
    gamma_pseudo: float = DEFAULT_GAMMA
    fock_cutoff: int = DEFAULT_FOCK_CUTOFF

    def __post_init__(self):
        if not self.omega_coupling > 0:
            raise ValueError(f"omega_coupling must be > 0, got {self.omega_coupling}")
        if not self.gamma_pseudo > 0:
            raise ValueError(f"gamma_pseudo must be > 0, got {self.gamma_pseudo}")
        if int(self.fock_cutoff) != self.fock_cutoff or self.fock_cutoff < 2:
            raise ValueError(f"fock_cutoff must be an integer >= 2, got {self.fock_cutoff}")

    @property
    def gamma0(self) -> float:
        return markov_rate(self.omega_coupling, self.gamma_pseudo)

    @property
    def strong_coupling(self) -> bool:
        return self.gamma_pseudo / self.omega_coupling < 4.0

    @property
    def fock_dim(self) -> int:
        return self.fock_cutoff + 1

    def as_dict(self) -> dict:
        return {
            "omega_coupling": self.omega_coupling,
            "gamma_pseudo": self.gamma_pseudo,
            "fock_cutoff": self.fock_cutoff,
            "gamma0": self.gamma0,
        }


@dataclass(frozen=True)
class SpectralDensity:
    params: ModelParams
    omega0: float = 0.0


def spectral_density_value(sd: SpectralDensity, omega: float) -> float:
    """Lorentzian reservoir spectrum J(omega) with peak gamma0/pi at omega0."""
    om, gam = sd.params.omega_coupling, sd.params.gamma_pseudo
    return om**2 / math.pi * gam / ((omega - sd.omega0) ** 2 + (gam / 2) ** 2)


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """Superoperator on column-stacked ``kron(atom, mode)`` density matrices.

    Atomic factors are in the dressed basis for the common backends.
    ``fock_dim == 1`` means no pseudomode (Markovian backend).
    """

    matrix: np.ndarray
    backend: str
    atomic_dim: int = 4
    fock_dim: int = 1

    @property
    def dim(self) -> int:
        return self.atomic_dim * self.fock_dim


def _frozen(m: np.ndarray) -> np.ndarray:
    m = np.array(m, dtype=complex)
    m.flags.writeable = False
    return m


def coupling_V(params: ModelParams) -> np.ndarray:
    """Ladder-pseudomode exchange on the ``kron(dressed, Fock)`` space."""
    nf = params.fock_dim
    a = hs.destroy(nf)
    up_0 = hs.outer(hs.PLUS, hs.GROUND, 4)    # |+><0|
    up_1 = hs.outer(hs.DOUBLE, hs.PLUS, 4)    # |2><+|
    half = hs.kron(up_0, a) + hs.kron(up_1, a)
    return math.sqrt(2.0) * params.omega_coupling * (half + half.conj().T)


def _pseudomode_generator(v: np.ndarray, a_full: np.ndarray, gamma: float) -> np.ndarray:
    return hs.commutator_super(v) + hs.dissipator_super(a_full, gamma)


def liouvillian_common_structured(params: ModelParams) -> Liouvillian:
    nf = params.fock_dim
    a_full = hs.kron(np.eye(4), hs.destroy(nf))
    mat = _pseudomode_generator(coupling_V(params), a_full, params.gamma_pseudo)
    return Liouvillian(_frozen(mat), Backend.COMMON_STRUCTURED.value, 4, nf)


def collective_lowering() -> np.ndarray:
    """``sigma_-^A + sigma_-^B`` in the dressed basis."""
    ident = np.eye(2)
    j_bare = hs.qubit_pair(hs.SIGMA_MINUS, ident) + hs.qubit_pair(ident, hs.SIGMA_MINUS)
    return hs.to_dressed(j_bare)


def liouvillian_common_markov(gamma0: float) -> Liouvillian:
    if gamma0 <= 0:
        raise ValueError(f"gamma0 must be > 0, got {gamma0}")
    mat = hs.dissipator_super(collective_lowering(), gamma0)
    return Liouvillian(_frozen(mat), Backend.COMMON_MARKOV.value, 4, 1)


def liouvillian_single_qubit(params: ModelParams) -> Liouvillian:
    """One qubit with its own pseudomode, coupling Omega (no collective sqrt 2)."""
    nf = params.fock_dim
    a = hs.destroy(nf)
    half = hs.kron(hs.SIGMA_PLUS, a)
    v = params.omega_coupling * (half + half.conj().T)
    a_full = hs.kron(np.eye(2), a)
    mat = _pseudomode_generator(v, a_full, params.gamma_pseudo)
    return Liouvillian(_frozen(mat), "single_qubit_structured", 2, nf)


def liouvillian_for(backend, params: ModelParams) -> Liouvillian:
    backend = Backend(backend)
    if backend is Backend.COMMON_STRUCTURED:
        return liouvillian_common_structured(params)
    if backend is Backend.COMMON_MARKOV:
        return liouvillian_common_markov(params.gamma0)
    raise ValueError("the independent backend has no joint two-qubit Liouvillian; "
                     "use dynamical_map_independent")


# -- maps ------------------------------------------------------------------

def map_from_columns(images: np.ndarray) -> np.ndarray:
    """Process matrix from images of the matrix units.

    ``images[i, j]`` is the image of ``|i><j|``; the returned matrix acts on
    column-stacked vectors.
    """
    d = images.shape[0]
    m = np.empty((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            m[:, i + d * j] = hs.vec(images[i, j])
    return m


def single_qubit_basis_images(propagator: np.ndarray, fock_dim: int) -> np.ndarray:
    """Apply a qubit+mode propagator to every ``|i><j| (x) |0><0|`` and trace the mode."""
    images = np.empty((2, 2, 2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            full = hs.embed_mode_vacuum(hs.outer(i, j, 2), fock_dim)
            out = hs.unvec(propagator @ hs.vec(full))
            images[i, j] = hs.partial_trace_pseudomode(out, fock_dim)
    return images


def dynamical_map_single_qubit(params: ModelParams, t: float) -> np.ndarray:
    """Exact reduced map of one qubit in its own Lorentzian reservoir (4x4)."""
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    lv = liouvillian_single_qubit(params)
    prop = hs.expm(lv.matrix * t)
    return map_from_columns(single_qubit_basis_images(prop, lv.fock_dim))


def product_map(map_a: np.ndarray, map_b: np.ndarray) -> np.ndarray:
    """Two-qubit process matrix of ``map_a (x) map_b`` in the bare basis (16x16)."""
    images = np.empty((4, 4, 4, 4), dtype=complex)
    for ia in range(2):
        for ib in range(2):
            for ja in range(2):
                for jb in range(2):
                    img_a = hs.unvec(map_a @ hs.vec(hs.outer(ia, ja, 2)))
                    img_b = hs.unvec(map_b @ hs.vec(hs.outer(ib, jb, 2)))
                    images[ia + 2 * ib, ja + 2 * jb] = hs.qubit_pair(img_a, img_b)
    return map_from_columns(images)


def dynamical_map_independent(params: ModelParams, t: float) -> np.ndarray:
    single = dynamical_map_single_qubit(params, t)
    return product_map(single, single)


def apply_map(process: np.ndarray, rho) -> np.ndarray:
    rho = hs.as_matrix(rho)
    return hs.unvec(process @ hs.vec(rho), rho.shape[0])


def choi_matrix(process: np.ndarray) -> np.ndarray:
    """``sum_ij |i><j| (x) Phi(|i><j|)``; PSD iff the map is completely positive."""
    d = math.isqrt(process.shape[0])
    choi = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            img = hs.unvec(process[:, i + d * j], d)
            choi += np.kron(hs.outer(i, j, d), img)
    return choi
