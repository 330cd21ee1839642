"""Dense linear algebra and Hilbert-space bookkeeping.

Conventions used throughout the package:

* Every operator is a dense ``complex128`` ndarray.
* Two-qubit bare basis order is ``|00>, |10>, |01>, |11>`` where the first
  label is qubit A and ``1`` is the excited level.  Flat index is
  ``a + 2*b``, so a product operator is ``np.kron(op_b, op_a)``; use
  :func:`qubit_pair` rather than calling ``kron`` directly.
* Dressed basis order is ``|0>, |+>, |->, |2>``.
* Composite atom + pseudomode space is ``kron(atom, mode)``.
* Superoperators act on column-stacked vectors:
  ``vec(A @ rho @ B) == kron(B.T, A) @ vec(rho)``.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

BARE_LABELS = ("|00>", "|10>", "|01>", "|11>")
DRESSED_LABELS = ("|0>", "|+>", "|->", "|2>")

# dressed indices
GROUND, PLUS, MINUS, DOUBLE = 0, 1, 2, 3

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# qubit basis (|0>=ground, |1>=excited)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.T.copy()


class InvalidStateError(ValueError):
    """A matrix failed density-matrix validation."""


@dataclass(frozen=True)
class Tolerances:
    hermiticity: float = 1e-10
    trace: float = 1e-10
    positivity: float = 1e-8


DEFAULT_TOL = Tolerances()


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {m.shape}")
    return m


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def qubit_pair(op_a, op_b) -> np.ndarray:
    """Two-qubit product ``op_a (x) op_b`` in the bare basis order."""
    return kron(op_b, op_a)


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(index: int, dim: int) -> np.ndarray:
    p = np.zeros((dim, dim), dtype=complex)
    p[index, index] = 1.0
    return p


def outer(bra_index: int, ket_index: int, dim: int) -> np.ndarray:
    """``|bra_index><ket_index|``."""
    m = np.zeros((dim, dim), dtype=complex)
    m[bra_index, ket_index] = 1.0
    return m


def destroy(dim: int) -> np.ndarray:
    """Truncated bosonic annihilation operator on Fock levels ``0..dim-1``."""
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def dressed_transform() -> np.ndarray:
    """Unitary T with ``dressed_coords = T @ bare_coords``.

    Rows are the dressed states written in bare coordinates; the matrix is
    real symmetric and its own inverse.
    """
    s = 1.0 / math.sqrt(2.0)
    return np.array(
        [[1, 0, 0, 0],
         [0, s, s, 0],
         [0, s, -s, 0],
         [0, 0, 0, 1]],
        dtype=complex,
    )


_T = dressed_transform()


def to_dressed(rho_bare) -> np.ndarray:
    """Rewrite a bare-basis operator (or a stack of them) in the dressed basis."""
    return _T @ np.asarray(rho_bare, dtype=complex) @ _T.conj().T


def to_bare(rho_dressed) -> np.ndarray:
    return _T.conj().T @ np.asarray(rho_dressed, dtype=complex) @ _T


def partial_trace_pseudomode(rho_full, fock_dim: int) -> np.ndarray:
    """Trace out the pseudomode from ``kron(atom, mode)`` states.

    Accepts a single ``(d*fock_dim, d*fock_dim)`` matrix or a stack with a
    leading batch axis.  The atomic dimension is inferred (4 for the
    two-qubit problem, 2 for a lone qubit).
    """
    rho = np.asarray(rho_full, dtype=complex)
    n = rho.shape[-1]
    if rho.shape[-2] != n or fock_dim < 1 or n % fock_dim:
        raise ValueError(
            f"cannot trace a Fock factor of dimension {fock_dim} from shape {rho.shape}"
        )
    d = n // fock_dim
    r = rho.reshape(rho.shape[:-2] + (d, fock_dim, d, fock_dim))
    return np.einsum("...injn->...ij", r)


def embed_mode_vacuum(rho_atoms, fock_dim: int) -> np.ndarray:
    """``rho_atoms (x) |0><0|`` on the atom + pseudomode space (no basis change)."""
    return kron(rho_atoms, projector(0, fock_dim))


# -- vectorization ---------------------------------------------------------

def vec(m) -> np.ndarray:
    return np.asarray(m, dtype=complex).reshape(-1, order="F")


def unvec(v, dim: int | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    if dim is None:
        dim = math.isqrt(v.shape[0])
    if dim * dim != v.shape[0]:
        raise ValueError(f"vector of length {v.shape[0]} is not a vectorized square matrix")
    return v.reshape((dim, dim) + v.shape[1:], order="F")


def spre(a) -> np.ndarray:
    """Superoperator of ``rho -> a @ rho``."""
    a = as_matrix(a)
    return np.kron(np.eye(a.shape[0]), a)


def spost(b) -> np.ndarray:
    """Superoperator of ``rho -> rho @ b``."""
    b = as_matrix(b)
    return np.kron(b.T, np.eye(b.shape[0]))


def sprepost(a, b) -> np.ndarray:
    """Superoperator of ``rho -> a @ rho @ b``."""
    return np.kron(as_matrix(b).T, as_matrix(a))


def commutator_super(h) -> np.ndarray:
    """Superoperator of ``rho -> -i [h, rho]``."""
    return -1j * (spre(h) - spost(h))


def dissipator_super(jump, rate: float = 1.0) -> np.ndarray:
    """Superoperator of ``rate * (J rho J^+ - {J^+ J, rho}/2)``."""
    j = as_matrix(jump)
    jd = j.conj().T
    jdj = jd @ j
    return rate * (sprepost(j, jd) - 0.5 * (spre(jdj) + spost(jdj)))


def trace_row(dim: int) -> np.ndarray:
    """Row vector r with ``r @ vec(rho) == trace(rho)``."""
    return vec(np.eye(dim))


# -- matrix exponential ----------------------------------------------------

# Higham (2005) scaling-and-squaring thresholds for double precision.
_THETA = {3: 1.495585217958292e-2, 5: 2.539398330063230e-1,
          7: 9.504178996162932e-1, 9: 2.097847961257068e0,
          13: 5.371920351148152e0}
_PADE = {
    3: (120., 60., 12., 1.),
    5: (30240., 15120., 3360., 420., 30., 1.),
    7: (17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.),
    9: (17643225600., 8821612800., 2075673600., 302702400., 30270240.,
        2162160., 110880., 3960., 90., 1.),
    13: (64764752532480000., 32382376266240000., 7771770303897600.,
         1187353796428800., 129060195264000., 10559470521600.,
         670442572800., 33522128640., 1323241920., 40840800., 960960.,
         16380., 182., 1.),
}


def _pade_uv(a: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    b = _PADE[m]
    ident = np.eye(a.shape[0], dtype=a.dtype)
    a2 = a @ a
    if m == 13:
        a4 = a2 @ a2
        a6 = a2 @ a4
        u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
                 + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
        v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
             + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident)
        return u, v
    powers = [ident, a2]
    for _ in range(2, (m + 1) // 2):
        powers.append(powers[-1] @ a2)
    u = sum(b[k] * powers[k // 2] for k in range(m, 0, -2))
    v = sum(b[k] * powers[k // 2] for k in range(m - 1, -1, -2))
    return a @ u, v


def expm(a) -> np.ndarray:
    """Matrix exponential by Pade scaling and squaring."""
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"expm needs a square matrix, got shape {a.shape}")
    norm = np.linalg.norm(a, 1)
    if not np.isfinite(norm):
        raise ValueError("expm input contains non-finite entries")
    for m in (3, 5, 7, 9):
        if norm <= _THETA[m]:
            u, v = _pade_uv(a, m)
            return np.linalg.solve(v - u, v + u)
    s = max(0, math.ceil(math.log2(norm / _THETA[13])))
    u, v = _pade_uv(a / 2.0**s, 13)
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r


# -- density-matrix validation ---------------------------------------------

def density_diagnostics(rho) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Trace error, Hermiticity error and minimum eigenvalue.

    Works on one matrix or a stack; returns arrays matching the batch shape.
    """
    rho = np.asarray(rho, dtype=complex)
    tr = np.trace(rho, axis1=-2, axis2=-1)
    trace_err = np.abs(tr - 1.0)
    herm = rho - np.conj(np.swapaxes(rho, -1, -2))
    herm_err = np.abs(herm).max(axis=(-2, -1))
    hermitian_part = 0.5 * (rho + np.conj(np.swapaxes(rho, -1, -2)))
    min_eig = np.linalg.eigvalsh(hermitian_part)[..., 0]
    return trace_err, herm_err, min_eig


def check_density(rho, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Raise :class:`InvalidStateError` unless ``rho`` is a valid density matrix."""
    rho = as_matrix(rho)
    if rho.shape[0] != rho.shape[1]:
        raise InvalidStateError(f"density matrix must be square, got {rho.shape}")
    trace_err, herm_err, min_eig = density_diagnostics(rho)
    if herm_err > tol.hermiticity:
        raise InvalidStateError(f"not Hermitian: max |rho - rho^+| = {herm_err:.3e}")
    if trace_err > tol.trace:
        raise InvalidStateError(f"trace differs from 1 by {trace_err:.3e}")
    if min_eig < -tol.positivity:
        raise InvalidStateError(f"negative eigenvalue {min_eig:.3e}")
    return rho
