import math

import numpy as np
import pytest

from pseudomode import hilbert as hs
from pseudomode import model
from pseudomode.experiments import embed_with_mode_vacuum, initial_entangled, initial_factorized
from pseudomode.model import Liouvillian, ModelParams
from pseudomode.propagate import (GeneratorError, StepSizeUnderflow, TimeGrid, asymptotic_state,
                                  dopri5, propagate_expm, propagate_rk, state_at, step_propagator)

from conftest import random_density

BASE = ModelParams()
L_CS = model.liouvillian_common_structured(BASE)
NF = BASE.fock_dim


def zero_generator(dim):
    return Liouvillian(np.zeros((dim * dim, dim * dim), dtype=complex), "zero", dim, 1)


class TestTimeGrid:
    def test_uniform(self):
        g = TimeGrid(0.0, 50.0, 1001)
        assert g.step == pytest.approx(0.05)
        assert g.times[-1] == 50.0 and np.all(np.diff(g.times) > 0)

    @pytest.mark.parametrize("args", [(-1, 2, 3), (1, 1, 3), (0, 1, 1), (0, 1, 2.5)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            TimeGrid(*args)


class TestPropagateExpm:
    def test_zero_generator_constant(self, rng):
        rho = random_density(3, rng)
        traj = propagate_expm(zero_generator(3), rho, TimeGrid(0, 5, 11))
        assert np.abs(traj.states - rho).max() == 0.0

    def test_subradiant_trapped(self):
        rho = hs.embed_mode_vacuum(hs.projector(hs.MINUS, 4), NF)
        traj = propagate_expm(L_CS, rho, TimeGrid(0, 50, 201))
        assert np.abs(traj.states - rho).max() <= 1e-14

    def test_trace_and_structure(self, rng):
        rho = embed_with_mode_vacuum(random_density(4, rng), NF)
        traj = propagate_expm(L_CS, rho, TimeGrid(0, 50, 1001))
        assert traj.trace_err.max() <= 1e-10
        assert traj.herm_err.max() <= 1e-10
        assert traj.min_eig.min() >= -1e-8

    def test_matches_fresh_propagation(self, rng):
        rho = embed_with_mode_vacuum(random_density(4, rng), NF)
        grid = TimeGrid(0, 20, 81)
        traj = propagate_expm(L_CS, rho, grid)
        for k in (0, 17, 80):
            assert np.abs(traj.states[k] - state_at(L_CS, rho, grid.times[k])).max() <= 1e-12

    def test_offset_grid(self, rng):
        rho = embed_with_mode_vacuum(random_density(4, rng), NF)
        traj = propagate_expm(L_CS, rho, TimeGrid(3.0, 5.0, 5))
        assert np.abs(traj.states[0] - state_at(L_CS, rho, 3.0)).max() <= 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            propagate_expm(L_CS, np.eye(4) / 4, TimeGrid(0, 1, 3))

    def test_invalid_state(self):
        bad = np.zeros((12, 12))
        with pytest.raises(hs.InvalidStateError):
            propagate_expm(L_CS, bad, TimeGrid(0, 1, 3))

    def test_semigroup(self):
        p1 = step_propagator(L_CS, 0.05)
        p2 = step_propagator(L_CS, 0.1)
        assert np.abs(p2 - p1 @ p1).max() <= 1e-12

    def test_growing_generator_aborts(self):
        # population pumped out of nothing: breaks trace preservation
        bad = Liouvillian(0.5 * np.eye(4, dtype=complex), "bad", 2, 1)
        with pytest.raises(hs.InvalidStateError):
            propagate_expm(bad, np.diag([1.0, 0.0]), TimeGrid(0, 10, 11))

    def test_small_drift_warns(self):
        drift = Liouvillian(3e-9 * np.eye(4, dtype=complex), "drift", 2, 1)
        with pytest.warns(RuntimeWarning):
            propagate_expm(drift, np.diag([1.0, 0.0]), TimeGrid(0, 1, 3))

    def test_cutoff_diagnostic(self):
        rho = embed_with_mode_vacuum(initial_entangled(0.1), NF)
        traj = propagate_expm(L_CS, rho, TimeGrid(0, 50, 501))
        assert 0 < traj.max_cutoff_population <= 1


class TestDopri5:
    def test_scalar_decay(self):
        gammas = np.array([0.3, 1.0, 2.5])
        times = np.linspace(0, 10, 41)
        ys = dopri5(lambda t, y: -gammas * y, np.ones(3), times)
        assert np.abs(ys - np.exp(-np.outer(times, gammas))).max() <= 1e-10

    def test_diagonal_liouvillian(self):
        # pure dephasing: coherences decay, populations fixed
        gammas = np.array([0.0, 0.4, 0.4, 0.0])
        lv = Liouvillian(np.diag(-gammas).astype(complex), "diag", 2, 1)
        grid = TimeGrid(0, 8, 33)
        rho = np.array([[0.6, 0.2], [0.2, 0.4]])
        traj = propagate_rk(lv, rho, grid)
        vec0 = hs.vec(rho)
        expected = vec0 * np.exp(-np.outer(grid.times, gammas))
        got = np.array([hs.vec(s) for s in traj.states])
        assert np.abs(got - expected).max() <= 1e-10

    def test_zero_generator(self, rng):
        rho = random_density(2, rng)
        traj = propagate_rk(zero_generator(2), rho, TimeGrid(0, 3, 4))
        assert np.abs(traj.states - rho).max() == 0.0

    def test_harmonic_oscillator(self):
        times = np.linspace(0, 20, 11)
        ys = dopri5(lambda t, y: np.array([y[1], -y[0]]), np.array([1.0, 0.0]), times)
        assert np.abs(ys[:, 0].real - np.cos(times)).max() <= 1e-9

    def test_underflow(self):
        with pytest.raises(StepSizeUnderflow), np.errstate(all="ignore"):
            dopri5(lambda t, y: y / (1.0 - t) ** 2, np.ones(1), [0.0, 2.0])

    def test_rejects_non_increasing_times(self):
        with pytest.raises(ValueError):
            dopri5(lambda t, y: y, np.ones(1), [0.0, 0.0])

    def test_agrees_with_expm_on_default_model(self):
        rho = embed_with_mode_vacuum(initial_entangled(0.1), NF)
        grid = TimeGrid(0, 50, 1001)
        a = propagate_expm(L_CS, rho, grid)
        b = propagate_rk(L_CS, rho, grid)
        assert np.abs(a.states - b.states).max() < 1e-8


class TestAsymptoticState:
    def test_factorized_half(self):
        rho = embed_with_mode_vacuum(initial_factorized(0.5), NF)
        atoms = hs.partial_trace_pseudomode(asymptotic_state(L_CS, rho), NF)
        k = 0.25
        expected = (1 - k) * hs.projector(hs.GROUND, 4) + k * hs.projector(hs.MINUS, 4)
        assert np.abs(atoms - expected).max() <= 1e-10

    def test_mode_ends_in_vacuum(self):
        rho = embed_with_mode_vacuum(initial_factorized(0.3), NF)
        full = asymptotic_state(L_CS, rho)
        assert np.abs(full - hs.embed_mode_vacuum(hs.partial_trace_pseudomode(full, NF), NF)).max() \
            <= 1e-10

    def test_ground_fixed(self):
        rho = hs.embed_mode_vacuum(hs.projector(0, 4), NF)
        assert np.abs(asymptotic_state(L_CS, rho) - rho).max() <= 1e-12

    def test_subradiant_coherence_survives(self):
        psi = (hs.ket(hs.GROUND, 4) + hs.ket(hs.MINUS, 4)) / math.sqrt(2)
        rho = hs.embed_mode_vacuum(np.outer(psi, psi.conj()), NF)
        assert np.abs(asymptotic_state(L_CS, rho) - rho).max() <= 1e-12

    @pytest.mark.parametrize("alpha_sq", [0.2, 0.5, 0.9])
    def test_long_time_propagation(self, alpha_sq):
        rho = embed_with_mode_vacuum(initial_factorized(alpha_sq), NF)
        assert np.abs(asymptotic_state(L_CS, rho) - state_at(L_CS, rho, 500.0)).max() <= 1e-6

    def test_growing_mode_rejected(self):
        bad = Liouvillian(np.diag([0.0, 1e-3, 0.0, 0.0]).astype(complex), "bad", 2, 1)
        with pytest.raises(GeneratorError):
            asymptotic_state(bad, np.diag([1.0, 0.0]))

    def test_undamped_oscillation_rejected(self):
        unitary = Liouvillian(hs.commutator_super(hs.SIGMA_X), "unitary", 2, 1)
        with pytest.raises(GeneratorError):
            asymptotic_state(unitary, np.diag([1.0, 0.0]))


@pytest.mark.parametrize("lv", [L_CS, model.liouvillian_common_markov(1.0)],
                         ids=["structured", "markov"])
def test_subradiant_population_frozen(lv, rng):
    rho = embed_with_mode_vacuum(random_density(4, rng), lv.fock_dim)
    traj = propagate_expm(lv, rho, TimeGrid(0, 50, 501))
    pop = traj.atomic()[:, hs.MINUS, hs.MINUS].real
    assert np.abs(pop - pop[0]).max() <= 1e-10


def test_cutoff_exactness():
    grid = TimeGrid(0, 50, 1001)
    atoms = initial_entangled(0.1)
    runs = []
    for cutoff in (2, 3):
        params = ModelParams(fock_cutoff=cutoff)
        lv = model.liouvillian_common_structured(params)
        traj = propagate_expm(lv, embed_with_mode_vacuum(atoms, params.fock_dim), grid)
        runs.append(traj.atomic())
    assert np.abs(runs[0] - runs[1]).max() <= 1e-12
