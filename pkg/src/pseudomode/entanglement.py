"""Two-qubit concurrence: the general Wootters formula and the X-state closed form."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hilbert as hs

SPIN_FLIP = hs.kron(hs.SIGMA_Y, hs.SIGMA_Y)

# entries allowed to be non-zero in an X state
X_MASK = np.eye(4, dtype=bool) | np.eye(4, dtype=bool)[::-1]

NEGATIVE_EIG_TOL = 1e-10


@dataclass(frozen=True)
class XState:
    """Diagonal populations a..d and anti-diagonal coherences w, z (bare basis)."""

    a: float
    b: float
    c: float
    d: float
    w: complex = 0j
    z: complex = 0j

    @classmethod
    def from_matrix(cls, rho) -> "XState":
        rho = hs.as_matrix(rho)
        a, b, c, d = np.real(np.diag(rho))
        return cls(float(a), float(b), float(c), float(d), complex(rho[0, 3]), complex(rho[1, 2]))

    def to_matrix(self) -> np.ndarray:
        return np.array(
            [[self.a, 0, 0, self.w],
             [0, self.b, self.z, 0],
             [0, np.conj(self.z), self.c, 0],
             [np.conj(self.w), 0, 0, self.d]],
            dtype=complex,
        )

    def validate(self, tol: float = 1e-10) -> None:
        pops = (self.a, self.b, self.c, self.d)
        if min(pops) < -tol:
            raise hs.InvalidStateError(f"negative population in {pops}")
        if abs(sum(pops) - 1.0) > tol:
            raise hs.InvalidStateError(f"populations sum to {sum(pops)!r}")
        if abs(self.w) ** 2 > self.a * self.d + tol:
            raise hs.InvalidStateError("|w|^2 exceeds a*d")
        if abs(self.z) ** 2 > self.b * self.c + tol:
            raise hs.InvalidStateError("|z|^2 exceeds b*c")


def x_branches(rho) -> tuple[np.ndarray, np.ndarray]:
    """``C1 = 2|w| - 2 sqrt(bc)`` and ``C2 = 2|z| - 2 sqrt(ad)`` for a matrix or stack."""
    rho = np.asarray(rho, dtype=complex)
    pops = np.real(np.diagonal(rho, axis1=-2, axis2=-1))
    a, b, c, d = (pops[..., i] for i in range(4))
    w = np.abs(rho[..., 0, 3])
    z = np.abs(rho[..., 1, 2])
    c1 = 2 * w - 2 * np.sqrt(np.clip(b * c, 0.0, None))
    c2 = 2 * z - 2 * np.sqrt(np.clip(a * d, 0.0, None))
    return c1, c2


def concurrence_x(x: XState, tol: float = 1e-10) -> float:
    x.validate(tol)
    c1, c2 = x_branches(x.to_matrix())
    return float(min(1.0, max(0.0, c1, c2)))


def off_x_magnitude(rho) -> np.ndarray:
    """Largest modulus outside the diagonal and anti-diagonal (per matrix)."""
    rho = np.asarray(rho, dtype=complex)
    return np.abs(np.where(X_MASK, 0.0, rho)).max(axis=(-2, -1))


def is_x_form(rho, tol: float = 1e-10) -> tuple[bool, float]:
    rho = hs.as_matrix(rho)
    if rho.shape != (4, 4):
        raise ValueError(f"X form is defined for 4x4 matrices, got {rho.shape}")
    worst = float(off_x_magnitude(rho))
    return worst <= tol, worst


def concurrence_general(rho, tol: hs.Tolerances = hs.DEFAULT_TOL) -> float:
    """Wootters concurrence of an arbitrary two-qubit density matrix.

    The square roots of the eigenvalues of ``rho (Y Y) rho* (Y Y)`` are taken
    as the singular values of ``sqrt(rho) (Y Y) sqrt(rho)*``, which avoids
    the loss of precision of square-rooting tiny eigenvalues.
    """
    rho = hs.as_matrix(rho)
    if rho.shape != (4, 4):
        raise ValueError(f"concurrence needs a 4x4 density matrix, got {rho.shape}")
    trace_err, herm_err, _ = hs.density_diagnostics(rho)
    if herm_err > tol.hermiticity or trace_err > tol.trace:
        raise hs.InvalidStateError(
            f"invalid density matrix (trace error {trace_err:.2e}, Hermiticity {herm_err:.2e})")
    evals, evecs = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    if evals[0] < -NEGATIVE_EIG_TOL:
        raise hs.InvalidStateError(f"negative eigenvalue {evals[0]:.3e}")
    root = (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.conj().T
    s = np.linalg.svd(root @ SPIN_FLIP @ root.conj(), compute_uv=False)
    return float(min(1.0, max(0.0, s[0] - s[1] - s[2] - s[3])))
