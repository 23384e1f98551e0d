import math

import numpy as np
import pytest

from oracles import propagate, random_density
from qcurrent import currents, rotor, steady
from qcurrent import master_eq as me
from qcurrent.master_eq import BathParams
from qcurrent.numerics import partial_trace, trace_distance
from qcurrent.observables import coherent_input, thermal_state
from qcurrent.rotor import RotorParams

REF = RotorParams(0.1, 2.0, math.pi / 6)
BATHS = BathParams(0.2, 1.0, 0.2, 0.2)


@pytest.fixture(scope="module")
def gen():
    return me.build_global(REF, BATHS)


@pytest.fixture(scope="module")
def basis(gen):
    return steady.solve_basis(gen)


def test_basis_invariants(gen, basis):
    assert basis.kernel_dim == 3
    sym = rotor.global_rotation()
    for k, rho in enumerate(basis.states, start=1):
        assert np.max(np.abs(gen.apply(rho))) < 1e-9
        Rk = sym.projector(k)
        assert np.max(np.abs(Rk @ rho @ Rk - rho)) < 1e-12
        assert abs(np.trace(rho) - 1) < 1e-12
        assert np.min(np.linalg.eigvalsh(rho)) > -1e-12
        assert np.max(np.abs(partial_trace(rho, "a") - partial_trace(rho, "b"))) < 1e-9
    for i in range(3):
        for j in range(i + 1, 3):
            assert abs(np.trace(basis.states[i] @ basis.states[j])) < 1e-9
    assert basis.state(4) is basis.rho1


def test_basis_independent_of_kernel_vector(gen, basis):
    # project a different steady solution: the long-time limit of a random state
    rho_t = steady.long_time_state(gen, random_density(np.random.default_rng(3), 9))
    for k, Rk in enumerate(rotor.global_rotation().projectors, start=1):
        alt = Rk @ rho_t @ Rk / np.trace(Rk @ rho_t)
        assert np.max(np.abs(alt - basis.state(k))) < 1e-8


def test_kernel_dim_six_at_degenerate_phase():
    gen6 = me.build_global(RotorParams(0.1, 2.0, math.pi / 3), BATHS)
    b6 = steady.solve_basis(gen6)
    assert b6.kernel_dim == 6
    for rho in b6.states:
        assert np.max(np.abs(gen6.apply(rho))) < 1e-9
    with pytest.raises(steady.DegenerateSteadyStateError):
        steady.asymptotic_state(b6, np.eye(9) / 9)
    rho0 = random_density(np.random.default_rng(4), 9)
    ref = propagate(gen6.superoperator, rho0, 4000.0)
    assert trace_distance(steady.steady_state(gen6, rho0, b6), ref) < 1e-6


def test_local_generator_gives_duplicated_unique_state():
    b = steady.solve_basis(me.build_local(REF, BATHS))
    assert b.kernel_dim == 1
    assert b.rho1 is b.rho2 is b.rho3


def test_thermal_state_reconstruction():
    T = 0.8
    g_eq = me.build_global(REF, BathParams(T, T))
    b = steady.solve_basis(g_eq)
    rho_th = thermal_state(g_eq.hamiltonian, T)
    lam = steady.sector_weights(rho_th)
    mix = sum(l * s for l, s in zip(lam, b.states))
    assert np.max(np.abs(mix - rho_th)) < 1e-8


def test_weights_examples():
    w = steady.weights(np.eye(9) / 9)
    assert w.theta0 == 0 and np.allclose(w.lambdas, [1 / 3] * 3)
    corner = np.zeros((9, 9))
    corner[0, 0] = 1
    w = steady.weights(corner)
    assert w.theta0 == 0 and np.allclose(w.lambdas, [1 / 3] * 3, atol=1e-15)
    w = steady.weights(coherent_input(0.0).state)
    assert abs(w.theta0) == pytest.approx(1.0, abs=1e-12)
    assert w.lambda1 == pytest.approx(1.0, abs=1e-12)


def test_weight_formulas_match_sector_traces():
    rng = np.random.default_rng(5)
    for _ in range(20):
        rho0 = random_density(rng, 9)
        w = steady.weights(rho0)
        assert np.max(np.abs(np.array(w.lambdas) - steady.sector_weights(rho0))) < 1e-12
        assert sum(w.lambdas) == pytest.approx(1.0, abs=1e-12)
        assert all(-1e-12 <= l <= 1 + 1e-12 for l in w.lambdas)
        direct = sum(rho0[3 * ja + jb, 3 * ((ja + 1) % 3) + (jb + 1) % 3]
                     for ja in range(3) for jb in range(3))
        assert abs(w.theta0 - direct) < 1e-14


def test_asymptotic_state_examples(gen, basis):
    assert np.max(np.abs(steady.asymptotic_state(basis, basis.rho1) - basis.rho1)) < 1e-12
    mix = sum(basis.states) / 3
    assert np.max(np.abs(steady.asymptotic_state(basis, np.eye(9) / 9) - mix)) < 1e-12


def test_asymptotic_state_matches_long_time_propagation(gen, basis):
    rng = np.random.default_rng(6)
    for _ in range(3):
        rho0 = random_density(rng, 9)
        ref = propagate(gen.superoperator, rho0, 2000.0)
        assert trace_distance(steady.asymptotic_state(basis, rho0), ref) < 1e-6
        assert trace_distance(steady.long_time_state(gen, rho0), ref) < 1e-6


def test_sector_relations(gen, basis):
    j = {k: {q: currents.edge_current(gen, basis.state(k), q) for q in rotor.PARTICLES}
         for k in (1, 2, 3)}
    assert abs(j[1]["a"].tunneling + j[2]["a"].tunneling) < 1e-9
    assert abs(j[1]["a"].thermal - j[2]["a"].thermal) < 1e-9
    assert abs(j[3]["a"].total) < 1e-9
    for k in (1, 2, 3):
        assert abs(j[k]["a"].tunneling - j[k]["b"].tunneling) < 1e-9
        for q in rotor.PARTICLES:
            vals = [currents.edge_current(gen, basis.state(k), q, s).total for s in (1, 2, 3)]
            assert max(vals) - min(vals) < 1e-10
    assert abs(j[1]["a"].tunneling) > 1e-4


@pytest.mark.parametrize("k", range(6))
def test_thermal_current_vanishes_at_commensurate_phase(k):
    g = me.build_global(RotorParams(0.1, 2.0, k * math.pi / 3), BATHS)
    b = steady.solve_basis(g)
    for rho in b.states:
        assert abs(currents.edge_current(g, rho, "a").thermal) < 1e-9


def test_thermal_current_vanishes_at_equal_temperatures():
    g = me.build_global(REF, BathParams(0.6, 0.6))
    b = steady.solve_basis(g)
    rng = np.random.default_rng(7)
    for _ in range(5):
        rho = steady.asymptotic_state(b, random_density(rng, 9))
        for q in rotor.PARTICLES:
            assert abs(currents.edge_current(g, rho, q).thermal) < 1e-9


def test_current_periodicity_in_phase():
    rho0 = random_density(np.random.default_rng(8), 9)
    out = []
    for phi in (0.4, 0.4 + 2 * math.pi / 3):
        g = me.build_global(RotorParams(0.1, 2.0, phi), BATHS)
        out.append(currents.edge_current(g, steady.steady_state(g, rho0), "a"))
    assert np.max(np.abs(np.array(out[0]) - np.array(out[1]))) < 1e-9


def test_current_decomposition(gen, basis):
    rng = np.random.default_rng(9)
    for _ in range(5):
        rho0 = random_density(rng, 9)
        dec = steady.steady_current_decomposition(basis, rho0, gen)
        assert abs(dec.total - dec.predicted) < 1e-9
        assert dec.total == pytest.approx(dec.tunneling + dec.thermal, abs=1e-14)
    # real theta0 leaves only the thermal term
    rho0 = np.eye(9) / 9
    dec = steady.steady_current_decomposition(basis, rho0, gen)
    ref = currents.edge_current(gen, basis.rho1, "a").thermal
    assert dec.total == pytest.approx(2 / 3 * ref, abs=1e-12)
    R3 = rotor.global_rotation().projector(3)
    dec = steady.steady_current_decomposition(basis, R3 / 3, gen)
    assert abs(dec.total) < 1e-10


def test_current_turns_positive_for_negative_imaginary_theta():
    rho0 = rotor.global_rotation().projector(2) / 3  # Im theta0 < 0
    assert steady.theta0(rho0).imag < 0
    signs = []
    for tau in (0.001, 0.3):
        g = me.build_global(RotorParams(tau, 2.0, math.pi / 6), BATHS)
        signs.append(np.sign(currents.edge_current(g, steady.steady_state(g, rho0), "a").total))
    assert signs[0] != signs[1] and signs[1] > 0


def test_psd_repair_rejects_strongly_negative():
    with pytest.raises(steady.NumericalError):
        steady._repair_psd(np.diag([1.1, -0.1]))
    fixed = steady._repair_psd(np.diag([1.0, -1e-12]))
    assert np.min(np.linalg.eigvalsh(fixed)) >= 0
