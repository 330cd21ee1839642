import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pseudomode import hilbert as hs
from pseudomode.entanglement import (XState, concurrence_general, concurrence_x, is_x_form,
                                     x_branches)

from conftest import random_density, random_unitary, random_x_state

BELL = np.outer([1, 0, 0, 1], [1, 0, 0, 1]) / 2


class TestGeneral:
    def test_bell(self):
        assert concurrence_general(BELL) == pytest.approx(1.0, abs=1e-14)

    def test_product(self):
        assert concurrence_general(hs.projector(0, 4)) == 0.0

    def test_maximally_mixed(self):
        assert concurrence_general(np.eye(4) / 4) == 0.0

    def test_pure_state_formula(self, rng):
        # pure state a|00> + b|10> + c|01> + d|11>: C = 2|ad - bc|
        for _ in range(20):
            psi = rng.normal(size=4) + 1j * rng.normal(size=4)
            psi /= np.linalg.norm(psi)
            expected = 2 * abs(psi[0] * psi[3] - psi[1] * psi[2])
            assert concurrence_general(np.outer(psi, psi.conj())) == pytest.approx(expected, abs=1e-12)

    def test_werner_threshold(self):
        # p Bell + (1-p) I/4 has C = max(0, (3p - 1)/2)
        for p in (0.1, 1 / 3, 0.5, 0.9):
            rho = p * BELL + (1 - p) * np.eye(4) / 4
            assert concurrence_general(rho) == pytest.approx(max(0.0, (3 * p - 1) / 2), abs=1e-12)

    def test_invalid(self):
        with pytest.raises(hs.InvalidStateError):
            concurrence_general(np.diag([1.2, -0.2, 0, 0]))
        with pytest.raises(hs.InvalidStateError):
            concurrence_general(np.eye(4))

    def test_local_unitary_invariance(self, rng):
        for _ in range(50):
            rho = random_density(4, rng, rank=int(rng.integers(1, 5)))
            u = hs.qubit_pair(random_unitary(2, rng), random_unitary(2, rng))
            rotated = u @ rho @ u.conj().T
            assert concurrence_general(rotated) == pytest.approx(concurrence_general(rho), abs=1e-10)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 4))
    def test_range(self, seed, rank):
        c = concurrence_general(random_density(4, np.random.default_rng(seed), rank))
        assert 0.0 <= c <= 1.0


class TestClosedForm:
    def test_coherent_branch(self):
        x = XState(0.5, 0.0, 0.0, 0.5, 0.3, 0.0)
        assert x_branches(x.to_matrix())[0] == pytest.approx(0.6)
        assert x_branches(x.to_matrix())[1] == pytest.approx(-1.0)
        assert concurrence_x(x) == pytest.approx(0.6, abs=1e-15)
        assert concurrence_general(x.to_matrix()) == pytest.approx(0.6, abs=1e-12)

    @pytest.mark.parametrize("alpha_sq", [0.0, 0.1, 0.5, 0.77, 1.0])
    def test_pure_entangled_family(self, alpha_sq):
        w = math.sqrt(alpha_sq * (1 - alpha_sq)) * np.exp(-0.4j)
        x = XState(alpha_sq, 0, 0, 1 - alpha_sq, w, 0)
        assert concurrence_x(x) == pytest.approx(2 * math.sqrt(alpha_sq * (1 - alpha_sq)), abs=1e-15)

    def test_classical_mixture(self):
        assert concurrence_x(XState(0, 0.5, 0.5, 0, 0, 0)) == 0.0

    def test_invalid(self):
        with pytest.raises(hs.InvalidStateError):
            concurrence_x(XState(0.5, 0, 0, 0.5, 0.6, 0))
        with pytest.raises(hs.InvalidStateError):
            concurrence_x(XState(0.5, 0.5, 0.5, 0, 0, 0))

    def test_matches_general_on_random_states(self, rng):
        worst = 0.0
        for _ in range(10_000):
            x = XState(*random_x_state(rng))
            worst = max(worst, abs(concurrence_x(x) - concurrence_general(x.to_matrix())))
        assert worst <= 1e-10

    def test_matches_general_on_boundary_states(self, rng):
        # rank-deficient: coherences at their positivity bound
        for _ in range(500):
            a, b, c, d, w, z = random_x_state(rng)
            w = math.sqrt(a * d) * w / abs(w) if abs(w) else w
            z = math.sqrt(b * c) * z / abs(z) if abs(z) else z
            x = XState(a, b, c, d, w, z)
            assert abs(concurrence_x(x) - concurrence_general(x.to_matrix())) <= 1e-10

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
    def test_phase_invariance(self, seed, phi_w, phi_z):
        a, b, c, d, w, z = random_x_state(np.random.default_rng(seed))
        base = concurrence_x(XState(a, b, c, d, abs(w), abs(z)))
        rotated = concurrence_x(XState(a, b, c, d, abs(w) * np.exp(1j * phi_w),
                                       abs(z) * np.exp(1j * phi_z)))
        assert rotated == pytest.approx(base, abs=1e-15)
        assert 0.0 <= rotated <= 1.0


class TestXForm:
    def test_diagonal(self):
        assert is_x_form(np.eye(4) / 4) == (True, 0.0)

    def test_bell(self):
        assert is_x_form(BELL)[0]

    def test_violation(self):
        rho = np.eye(4, dtype=complex) / 4
        rho[0, 1] = rho[1, 0] = 0.1
        ok, worst = is_x_form(rho)
        assert not ok and worst == pytest.approx(0.1)

    def test_round_trip(self, rng):
        x = XState(*random_x_state(rng))
        assert XState.from_matrix(x.to_matrix()) == x
