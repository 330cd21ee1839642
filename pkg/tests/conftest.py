import math

import numpy as np
import pytest

from pseudomode import hilbert as hs

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def random_density(dim, rng, rank=None):
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_hermitian(dim, rng):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return g + g.conj().T


def random_unitary(dim, rng):
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_x_state(rng):
    """Uniformly sampled valid X state entries (a, b, c, d, w, z)."""
    a, b, c, d = rng.dirichlet(np.ones(4))
    w = math.sqrt(a * d) * rng.uniform() * np.exp(2j * math.pi * rng.uniform())
    z = math.sqrt(b * c) * rng.uniform() * np.exp(2j * math.pi * rng.uniform())
    return a, b, c, d, w, z


def taylor_expm(a, tail=1e-16):
    """Truncated power series; stops once the remaining tail is provably below ``tail``."""
    a = np.asarray(a, dtype=complex)
    norm = np.linalg.norm(a, 2)
    term = np.eye(a.shape[0], dtype=complex)
    total = term.copy()
    k = 0
    while True:
        k += 1
        term = term @ a / k
        total += term
        # geometric bound on the tail once k + 1 > norm
        nxt = np.linalg.norm(term, 2) * norm / (k + 1)
        if k + 1 > 2 * norm and nxt * 2 < tail:
            return total


def pseudomode_rhs(rho, v, a, gamma):
    """Right-hand side of the pseudomode master equation, evaluated matrix-wise."""
    n = a.conj().T @ a
    return -1j * (v @ rho - rho @ v) - gamma / 2 * (n @ rho + rho @ n - 2 * a @ rho @ a.conj().T)


def lindblad_rhs(rho, jump, rate):
    jd = jump.conj().T
    return rate * (jump @ rho @ jd - 0.5 * (jd @ jump @ rho + rho @ jd @ jump))


def apply_super(mat, rho):
    rho = np.asarray(rho)
    return hs.unvec(np.asarray(mat) @ hs.vec(rho), rho.shape[0])
