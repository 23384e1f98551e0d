import math

import numpy as np
import pytest

from oracles import classical_current, random_density, random_hermitian, triangle_thermal_current
from qcurrent import currents, rotor, steady
from qcurrent import master_eq as me
from qcurrent.master_eq import BathParams, Generator, LindbladTerm
from qcurrent.observables import thermal_state
from qcurrent.rotor import RotorParams

REF = RotorParams(0.1, 2.0, math.pi / 6)
BATHS = BathParams(0.2, 1.0, 0.2, 0.2)
QUTRIT_X = [np.diag(np.eye(3)[j]).astype(complex) for j in range(3)]


def random_qutrit_model(rng, n_jumps=2):
    h = random_hermitian(rng, 3)
    terms = tuple(LindbladTerm(float(rng.uniform(0.1, 1.0)),
                               rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
                  for _ in range(n_jumps))
    return Generator(h, terms, "local")


def vertex_model(rng, diag_h=True):
    h = np.diag(rng.normal(size=3)).astype(complex) if diag_h else random_hermitian(rng, 3)
    terms = []
    for i in range(3):
        for f in range(3):
            if i != f:
                jump = np.zeros((3, 3), dtype=complex)
                jump[f, i] = 1.0
                terms.append(LindbladTerm(float(rng.uniform(0.1, 1.0)), jump))
    return Generator(h, tuple(terms), "classical")


def rate_matrix(gen):
    W = np.zeros((3, 3))
    for t in gen.terms:
        f, i = np.argwhere(np.abs(t.jump) > 0)[0]
        W[f, i] += t.rate
    return W


def test_operator_split_and_hermiticity():
    gen = me.build_global(REF, BATHS)
    x1, x2 = rotor.site_projector("a", 1), rotor.site_projector("a", 2)
    ops = currents.current_operators(gen, x1, x2)
    for m in (ops.tunneling, ops.thermal, ops.total):
        assert np.max(np.abs(m - m.conj().T)) < 1e-12
    assert np.array_equal(ops.total, ops.tunneling + ops.thermal)
    general = currents.current_op_general(gen, x1, x2)
    assert np.max(np.abs(general - ops.total)) < 1e-12
    assert ops.edge == (("a", 1), ("a", 2))


def test_zero_generator_gives_zero_current():
    gen = Generator(np.zeros((3, 3), dtype=complex))
    assert np.array_equal(currents.current_op_general(gen, QUTRIT_X[0], QUTRIT_X[1]),
                          np.zeros((3, 3)))
    assert np.array_equal(currents.thermal_current_op(gen, QUTRIT_X[0], QUTRIT_X[1]),
                          np.zeros((3, 3)))
    rho = random_density(np.random.default_rng(0), 3)
    assert currents.mh_rate(gen, rho, QUTRIT_X[0], QUTRIT_X[1]).value == 0
    assert currents.tsm_current(gen, rho, QUTRIT_X[0], QUTRIT_X[1]) == 0


def test_same_site_edge_rejected():
    gen = me.build_global(REF, BATHS)
    x = rotor.site_projector("a", 1)
    with pytest.raises(ValueError):
        currents.current_op_general(gen, x, x)
    with pytest.raises(ValueError):
        currents.tunneling_current_op(gen.hamiltonian, x, rotor.site_projector("b", 2))
    with pytest.raises(ValueError):
        currents.thermal_current_op(Generator(np.eye(3)), QUTRIT_X[1], QUTRIT_X[1])


@pytest.mark.parametrize("kind", me.KINDS)
def test_edge_antisymmetry(kind):
    if kind == "classical":
        gen = me.build_classical(REF, BATHS).to_generator()
    else:
        gen = {"local": me.build_local, "global": me.build_global}[kind](REF, BATHS)
    rho = random_density(np.random.default_rng(1), 9)
    x1, x2 = rotor.site_projector("b", 1), rotor.site_projector("b", 2)
    f = currents.current_operators(gen, x1, x2)
    r = currents.current_operators(gen, x2, x1)
    for a, b in ((f.tunneling, r.tunneling), (f.thermal, r.thermal), (f.total, r.total)):
        assert np.max(np.abs(a + b)) < 1e-12
    assert currents.tsm_current(gen, rho, x1, x2) == pytest.approx(
        -currents.tsm_current(gen, rho, x2, x1), abs=1e-14)


@pytest.mark.parametrize("kind", me.KINDS)
def test_operator_continuity(kind):
    if kind == "classical":
        gen = me.build_classical(REF, BATHS).to_generator()
    else:
        gen = {"local": me.build_local, "global": me.build_global}[kind](REF, BATHS)
    for q in rotor.PARTICLES:
        for s in (1, 2, 3):
            xj = rotor.site_projector(q, s)
            flow = sum(currents.current_op_general(gen, rotor.site_projector(q, s2), xj)
                       for s2 in (1, 2, 3) if s2 != s)
            assert np.max(np.abs(gen.apply_adjoint(xj.matrix) - flow)) < 1e-11


def test_tunneling_operator_examples():
    assert np.array_equal(
        currents.tunneling_current_op(np.diag([1.0, 2.0, 3.0]), QUTRIT_X[0], QUTRIT_X[1]),
        np.zeros((3, 3)))
    tau = REF.tau
    h = rotor.rotor_hamiltonian(REF)
    op = currents.tunneling_current_op(h, rotor.site_projector("a", 1),
                                       rotor.site_projector("a", 2))
    e = np.eye(3)
    expected = 1j * tau * np.kron(np.outer(e[0], e[1]) - np.outer(e[1], e[0]), np.eye(3))
    assert np.max(np.abs(op - expected)) < 1e-14
    assert abs(np.trace(op)) < 1e-15


def test_triangle_oracle_on_random_qutrit_models():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        gen = random_qutrit_model(rng)
        terms = [(t.rate, t.jump) for t in gen.terms]
        for j in range(3):
            a, b = QUTRIT_X[j], QUTRIT_X[(j + 1) % 3]
            th = currents.thermal_current_op(gen, a, b)
            assert np.max(np.abs(th - triangle_thermal_current(terms, QUTRIT_X, j))) < 1e-12
            ops = currents.current_operators(gen, a, b)
            assert np.max(np.abs(currents.current_op_general(gen, a, b) - ops.total)) < 1e-12


def test_rank_one_jumps_reproduce_classical_current():
    rng = np.random.default_rng(5)
    for _ in range(20):
        gen = vertex_model(rng)
        W = rate_matrix(gen)
        p = rng.dirichlet(np.ones(3))
        rho = np.diag(p).astype(complex)
        for i in range(3):
            for f in range(3):
                if i == f:
                    continue
                ops = currents.current_operators(gen, QUTRIT_X[i], QUTRIT_X[f])
                avg = currents.average_current(ops, rho)
                ref = classical_current(p, W, i, f)
                assert abs(avg.total - ref) < 1e-12
                assert abs(avg.tunneling) < 1e-15
                tsm = currents.tsm_current(gen, rho, QUTRIT_X[i], QUTRIT_X[f])
                assert abs(tsm - avg.thermal) < 1e-12
                mh = currents.mh_rate(gen, rho, QUTRIT_X[i], QUTRIT_X[f]).value
                assert mh == pytest.approx(p[i] * W[f, i], abs=1e-14)
                wv = currents.weak_value(gen, rho, QUTRIT_X[i], QUTRIT_X[f], 1e-3)
                assert 0 <= wv <= 1


def test_tsm_equals_thermal_for_vertex_jumps_with_any_state():
    rng = np.random.default_rng(6)
    for _ in range(20):
        gen = vertex_model(rng)
        rho = random_density(rng, 3)
        for i, f in ((0, 1), (1, 2), (2, 0)):
            th = currents.average_current(
                currents.current_operators(gen, QUTRIT_X[i], QUTRIT_X[f]), rho).thermal
            assert abs(currents.tsm_current(gen, rho, QUTRIT_X[i], QUTRIT_X[f]) - th) < 1e-12


def test_tsm_ignores_coherent_part():
    gen = Generator(random_hermitian(np.random.default_rng(7), 3))
    rho = random_density(np.random.default_rng(8), 3)
    assert currents.tsm_current(gen, rho, QUTRIT_X[0], QUTRIT_X[1]) == 0.0
    assert abs(currents.average_current(
        currents.current_operators(gen, QUTRIT_X[0], QUTRIT_X[1]), rho).tunneling) > 1e-3


def test_tsm_differs_from_total_for_rotor():
    gen = me.build_global(REF, BATHS)
    basis = steady.solve_basis(gen)
    x1, x2 = rotor.site_projector("a", 1), rotor.site_projector("a", 2)
    total = currents.edge_current(gen, basis.rho1, "a").total
    assert abs(currents.tsm_current(gen, basis.rho1, x1, x2) - total) > 1e-6


def test_averages_on_special_states():
    gen = me.build_global(REF, BATHS)
    avg = currents.edge_current(gen, np.eye(9) / 9, "a")
    assert abs(avg.tunneling) < 1e-15
    g_eq = me.build_global(REF, BathParams(0.7, 0.7))
    rho = thermal_state(g_eq.hamiltonian, 0.7)
    for q in rotor.PARTICLES:
        assert abs(currents.edge_current(g_eq, rho, q).total) < 1e-12


def test_average_current_rejects_non_hermitian_operator():
    ops = currents.CurrentOperators(1j * np.eye(2), np.zeros((2, 2)), 1j * np.eye(2))
    with pytest.raises(currents.NumericalError):
        currents.average_current(ops, np.eye(2) / 2)


def test_mh_identity_on_random_states():
    gen = me.build_global(REF, BATHS)
    rng = np.random.default_rng(9)
    for _ in range(10):
        rho = random_density(rng, 9)
        for q in rotor.PARTICLES:
            x1, x2 = rotor.site_projector(q, 2), rotor.site_projector(q, 3)
            avg = currents.edge_current(gen, rho, q, 2).total
            diff = currents.mh_rate(gen, rho, x1, x2).value - currents.mh_rate(gen, rho, x2, x1).value
            assert abs(avg - diff) < 1e-12


def test_weak_value_small_eps_consistency():
    gen = me.build_global(RotorParams(0.2, 2.0, math.pi / 6), BATHS)
    rho = steady.solve_basis(gen).rho1
    x1, x2 = rotor.site_projector("a", 1), rotor.site_projector("a", 2)
    mu = currents.mh_rate(gen, rho, x1, x2).value
    p2 = np.trace(x2.matrix @ rho).real
    for eps in (1e-6, 1e-7):
        wv = currents.weak_value(gen, rho, x1, x2, eps)
        assert wv * p2 / eps == pytest.approx(mu, rel=1e-4)
    with pytest.raises(ValueError):
        currents.weak_value(gen, rho, x1, x2, 0.0)
    with pytest.raises(currents.NumericalError):
        currents.weak_value(Generator(np.zeros((3, 3))), np.diag([1.0, 0, 0]),
                            QUTRIT_X[2], QUTRIT_X[1], 1e-3)


def test_weak_value_turns_negative():
    gen = me.build_global(RotorParams(0.2, 2.0, math.pi / 6), BATHS)
    rho = steady.solve_basis(gen).rho1
    wit = currents.contextuality_witness(gen, rho, "a")
    assert wit.is_contextual
    x1, x2 = (rotor.site_projector(*lbl) for lbl in wit.edge)
    assert currents.weak_value(gen, rho, x1, x2, 1e-4) < 0


def test_witness_non_contextual_cases():
    p0 = RotorParams(0.0, 2.0, math.pi / 6)
    gen = me.build_classical(p0, BATHS).to_generator()
    prob = np.random.default_rng(10).dirichlet(np.ones(9))
    assert not currents.contextuality_witness(gen, np.diag(prob), "a").is_contextual
    for phi in (0.0, 0.4, math.pi / 6):
        gen = me.build_global(RotorParams(0.3, 2.0, phi), BATHS)
        for q in rotor.PARTICLES:
            assert not currents.contextuality_witness(gen, np.eye(9) / 9, q).is_contextual


def test_witness_onset_precedes_thermal_sign_change():
    onset, flip, first = None, None, None
    for tau in np.linspace(0.01, 0.6, 60):
        gen = me.build_global(RotorParams(float(tau), 2.0, math.pi / 6), BATHS)
        rho = steady.solve_basis(gen).rho1
        if onset is None and currents.contextuality_witness(gen, rho, "a").is_contextual:
            onset = tau
        th = currents.edge_current(gen, rho, "a").thermal
        first = th if first is None else first
        if flip is None and np.sign(th) != np.sign(first):
            flip = tau
    assert onset is not None and flip is not None
    assert onset < flip
