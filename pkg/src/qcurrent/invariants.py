"""Seeded invariant suite: every structural property the package relies on,
each reported with its measured residual and tolerance.

``faults`` injects known defects so the suite itself can be tested; the
only one currently defined is ``"rate-sign"``, which evaluates every bath
rate at -omega instead of omega.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import continuum, currents, numerics, observables, rotor, steady
from .master_eq import (BathParams, Generator, bath_rate, build_classical, build_global,
                        build_local, vec)
from .rotor import RotorParams

FAULTS = ("rate-sign",)

REF = RotorParams(0.1, 2.0, math.pi / 6)
REF_BATHS = BathParams(0.2, 1.0, 0.2, 0.2)


@dataclass(frozen=True)
class InvariantResult:
    module: str
    name: str
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual < self.tol)


def random_density(rng: np.random.Generator, d: int = 9) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(rng: np.random.Generator, d: int) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return 0.5 * (g + g.conj().T)


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _m(x) -> float:
    return float(np.max(np.abs(x)))


class _Suite:
    def __init__(self, seed: int, faults: tuple[str, ...]):
        for f in faults:
            if f not in FAULTS:
                raise ValueError(f"unknown fault {f!r}")
        self.rng = np.random.default_rng(seed)
        self.faults = faults
        self.results: list[InvariantResult] = []

    def add(self, module: str, name: str, residual: float, tol: float):
        self.results.append(InvariantResult(module, name, float(residual), tol))

    # rates and generators, possibly corrupted
    def rate(self, omega: float, beta: float, g: float) -> float:
        if "rate-sign" in self.faults:
            return bath_rate(-omega, beta, g)
        return bath_rate(omega, beta, g)

    def global_gen(self, p: RotorParams, b: BathParams) -> Generator:
        gen = build_global(p, b)
        if not self.faults:
            return gen
        terms = tuple(replace(t, rate=self.rate(t.frequency, b.beta(t.bath), b.g(t.bath)))
                      for t in gen.terms)
        return Generator(gen.hamiltonian, terms, gen.kind)

    # ---------------------------------------------------------------- numerics
    def numerics(self):
        rng = self.rng
        A, B = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)), rng.normal(size=(3, 3))
        C, D = rng.normal(size=(2, 2)), rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        self.add("numerics", "kron mixed product",
                 _m(numerics.kron(A, B) @ numerics.kron(C, D) - numerics.kron(A @ C, B @ D)), 1e-12)
        self.add("numerics", "kron associativity",
                 _m(numerics.kron(numerics.kron(A, B), C) - numerics.kron(A, numerics.kron(B, C))),
                 1e-12)
        h = random_hermitian(rng, 9)
        w, v = numerics.hermitian_eig(h)
        self.add("numerics", "eigen reconstruction", _m(h - (v * w) @ v.conj().T), 1e-9)
        m = rng.normal(size=(9, 6)) @ rng.normal(size=(6, 9))
        basis = numerics.kernel_basis(m, 1e-9)
        smax = np.linalg.norm(m, 2)
        res = max(np.linalg.norm(m @ x) / smax for x in basis) if basis else np.inf
        self.add("numerics", "kernel vectors annihilate", res if len(basis) == 3 else np.inf, 1e-8)
        rho = random_density(rng)
        self.add("numerics", "partial transpose trace",
                 abs(np.trace(numerics.partial_transpose(rho)) - 1), 1e-12)
        self.add("numerics", "trace norm of a state", abs(numerics.trace_norm(rho) - 1), 1e-12)

    # ------------------------------------------------------------------ rotor
    def rotor(self):
        sym = rotor.global_rotation()
        R = sym.R
        res = max(_m(R @ R.conj().T - rotor.I9), _m(R @ R @ R - rotor.I9),
                  _m(sum(sym.projectors) - rotor.I9),
                  max(_m(P @ P - P) for P in sym.projectors),
                  max(_m(R @ P - lam * P) for P, lam in zip(sym.projectors, sym.eigenvalues)))
        self.add("rotor", "rotation eigenprojectors", res, 1e-12)
        tau, K, phi = self.rng.uniform(0, 1), self.rng.uniform(0.5, 3), self.rng.uniform(0, 2 * np.pi)
        h = rotor.rotor_hamiltonian(RotorParams(tau, K, phi))
        self.add("rotor", "[H, R] = 0", _m(h @ R - R @ h), 1e-12)
        res = 0.0
        for k in range(6):
            hk = rotor.rotor_hamiltonian(RotorParams(tau, K, k * np.pi / 3))
            xi = rotor.generalized_exchange(k)
            res = max(res, _m(hk @ xi - xi @ hk))
        self.add("rotor", "[H, Xi_k] = 0 at phi = k pi/3", res, 1e-12)
        res = 0.0
        for q in rotor.PARTICLES:
            ps = [rotor.site_projector(q, s).matrix for s in (1, 2, 3)]
            res = max(res, _m(sum(ps) - rotor.I9), *(_m(p @ p - p) for p in ps))
        self.add("rotor", "site projectors resolve identity", res, 1e-12)

    # -------------------------------------------------------------- master-eq
    def master_eq(self):
        rng = self.rng
        worst = 0.0
        for omega, beta in zip(rng.uniform(0.01, 5, 100), rng.uniform(0.1, 10, 100)):
            ratio = self.rate(-omega, beta, 0.3) / self.rate(omega, beta, 0.3)
            worst = max(worst, abs(ratio / math.exp(-beta * omega) - 1))
        self.add("master-eq", "detailed balance of bath rates", worst, 1e-12)

        gen = self.global_gen(REF, REF_BATHS)
        worst = 0.0
        by_key = {(t.bath, t.frequency): t.rate for t in gen.terms}
        for (bath, w), r in by_key.items():
            if w > 0 and (bath, -w) in by_key:
                expected = math.exp(-REF_BATHS.beta(bath) * w)
                worst = max(worst, abs(by_key[(bath, -w)] / r / expected - 1))
        self.add("master-eq", "term rates obey detailed balance", worst, 1e-12)

        rho = random_density(rng)
        x = random_hermitian(rng, 9)
        for kind, g in (("global", gen), ("local", build_local(REF, REF_BATHS)),
                        ("classical", build_classical(REF, REF_BATHS).to_generator())):
            out = g.apply(rho)
            self.add("master-eq", f"{kind}: trace preservation", abs(np.trace(out)), 1e-12)
            self.add("master-eq", f"{kind}: Hermiticity preservation", _m(out - out.conj().T), 1e-12)
            self.add("master-eq", f"{kind}: adjoint duality",
                     abs(np.trace(x @ out) - np.trace(g.apply_adjoint(x) @ rho)), 1e-12)
            self.add("master-eq", f"{kind}: superoperator matches apply",
                     _m(g.superoperator @ vec(rho) - vec(out)), 1e-12)
        self.add("master-eq", "each bath dissipator is trace-free",
                 max(abs(np.trace(gen.dissipator(rho, q))) for q in rotor.PARTICLES), 1e-12)
        R = rotor.global_rotation().R
        self.add("master-eq", "global: rotation covariance",
                 _m(R @ gen.apply(rho) @ R.conj().T - gen.apply(R @ rho @ R.conj().T)), 1e-11)

        worst = 0.0
        for T in (0.5, 1.0, 2.0):
            g = self.global_gen(REF, BathParams(T, T, 0.2, 0.2))
            worst = max(worst, _m(g.apply(observables.thermal_state(g.hamiltonian, T))))
        self.add("master-eq", "thermal state stationary at equal temperatures", worst, 1e-9)

        W = build_classical(REF, REF_BATHS).W
        off = W - np.diag(np.diag(W))
        self.add("master-eq", "classical rates: columns sum to zero, off-diagonal >= 0",
                 max(_m(W.sum(axis=0)), max(0.0, -off.min())), 1e-12)

        b1 = BathParams(1.0, 1.0, 0.2, 0.2)
        taus = np.array([0.01, 0.02, 0.04, 0.08])
        dev = []
        for tau in taus:
            p = replace(REF, tau=float(tau))
            g = build_local(p, b1)
            dev.append(numerics.trace_norm(steady.unique_steady_state(g)
                                           - observables.thermal_state(g.hamiltonian, 1.0)))
        slope = np.polyfit(np.log(taus), np.log(dev), 1)[0]
        self.add("master-eq", "local steady state departs from thermal linearly in tau",
                 abs(slope - 1), 0.1)

    # --------------------------------------------------------------- currents
    def currents(self):
        rho = random_density(self.rng)
        gens = {"global": self.global_gen(REF, REF_BATHS),
                "local": build_local(REF, REF_BATHS),
                "classical": build_classical(REF, REF_BATHS).to_generator()}
        for kind, gen in gens.items():
            worst = 0.0
            for q in rotor.PARTICLES:
                for j in (1, 2, 3):
                    xj = rotor.site_projector(q, j)
                    total = sum(currents.current_op_general(gen, rotor.site_projector(q, i), xj)
                                for i in (1, 2, 3) if i != j)
                    worst = max(worst, _m(gen.apply_adjoint(xj.matrix) - total))
            self.add("currents", f"{kind}: operator continuity", worst, 1e-11)
        gen = gens["global"]
        x1, x2 = rotor.site_projector("a", 1), rotor.site_projector("a", 2)
        f, r = currents.current_operators(gen, x1, x2), currents.current_operators(gen, x2, x1)
        res = max(_m(f.tunneling + r.tunneling), _m(f.thermal + r.thermal), _m(f.total + r.total),
                  abs(currents.tsm_current(gen, rho, x1, x2) + currents.tsm_current(gen, rho, x2, x1)))
        self.add("currents", "edge antisymmetry of every flavor", res, 1e-12)
        self.add("currents", "general current equals tunneling + thermal",
                 _m(currents.current_op_general(gen, x1, x2) - f.total), 1e-12)
        mu = currents.mh_rate(gen, rho, x1, x2).value - currents.mh_rate(gen, rho, x2, x1).value
        self.add("currents", "Margenau-Hill rates reproduce the average current",
                 abs(mu - currents.average_current(f, rho).total), 1e-12)

    # ----------------------------------------------------------------- steady
    def steady(self):
        phi = float(self.rng.uniform(0.1, np.pi / 3 - 0.1))
        p = replace(REF, phi=phi)
        gen = self.global_gen(p, REF_BATHS)
        basis = steady.solve_basis(gen)
        self.add("steady", "kernel dimension 3 at generic phi", abs(basis.kernel_dim - 3), 0.5)
        sym = rotor.global_rotation()
        res = max(_m(gen.apply(s)) for s in basis.states)
        self.add("steady", "basis states are stationary", res, 1e-9)
        res = max(_m(Rk @ s @ Rk - s) for Rk, s in zip(sym.projectors, basis.states))
        self.add("steady", "basis states live in their R-sector", res, 1e-9)
        res = max(abs(np.trace(a @ b)) for i, a in enumerate(basis.states)
                  for b in basis.states[i + 1:])
        self.add("steady", "basis states are Hilbert-Schmidt orthogonal", res, 1e-9)
        res = max(_m(numerics.partial_trace(s, "a") - numerics.partial_trace(s, "b"))
                  for s in basis.states)
        self.add("steady", "marginals coincide", res, 1e-9)

        cur = {(k, q, j): currents.edge_current(gen, basis.state(k), q, j)
               for k in (1, 2, 3) for q in rotor.PARTICLES for j in (1, 2, 3)}
        res = max(abs(cur[(k, q, j)].total - cur[(k, q, 1)].total)
                  for k in (1, 2, 3) for q in rotor.PARTICLES for j in (2, 3))
        self.add("steady", "site independence of currents", res, 1e-10)
        c1, c2, c3 = cur[(1, "a", 1)], cur[(2, "a", 1)], cur[(3, "a", 1)]
        res = max(abs(c1.tunneling + c2.tunneling), abs(c1.thermal - c2.thermal), abs(c3.total),
                  max(abs(cur[(k, "a", 1)].tunneling - cur[(k, "b", 1)].tunneling) for k in (1, 2, 3)))
        self.add("steady", "sector relations", res, 1e-9)

        rho0 = random_density(self.rng)
        w = steady.weights(rho0)
        self.add("steady", "weights equal sector traces",
                 max(abs(a - b) for a, b in zip(w.lambdas, steady.sector_weights(rho0))), 1e-12)

        worst = 0.0
        for k in range(6):
            g = self.global_gen(replace(REF, phi=k * np.pi / 3), REF_BATHS)
            b = steady.solve_basis(g)
            worst = max(worst, *(abs(currents.edge_current(g, s, "a").thermal) for s in b.states))
        self.add("steady", "thermal current vanishes at phi = k pi/3", worst, 1e-9)
        g = self.global_gen(p, BathParams(0.5, 0.5, 0.2, 0.2))
        final = steady.steady_state(g, rho0)
        self.add("steady", "thermal current vanishes at equal temperatures",
                 abs(currents.edge_current(g, final, "a").thermal), 1e-9)

        g2 = self.global_gen(replace(p, phi=phi + 2 * np.pi / 3), REF_BATHS)
        b2 = steady.solve_basis(g2)
        res = max(abs(np.array(currents.edge_current(gen, s, "a"))
                      - np.array(currents.edge_current(g2, s2, "a"))).max()
                  for s, s2 in zip(basis.states, b2.states))
        self.add("steady", "currents are 2 pi/3 periodic in phi", res, 1e-9)
        self._period = (gen, basis, g2, b2)

    # ------------------------------------------------------------ observables
    def observables(self):
        gen, basis, g2, b2 = self._period
        res = max(max(abs(observables.heat_flux(gen, s, "b") - observables.heat_flux(g2, s2, "b")),
                      abs(observables.negativity(s) - observables.negativity(s2)))
                  for s, s2 in zip(basis.states, b2.states))
        self.add("observables", "heat flux and negativity are 2 pi/3 periodic", res, 1e-9)
        self.add("observables", "steady heat fluxes balance",
                 max(abs(observables.heat_flux(gen, s, "a") + observables.heat_flux(gen, s, "b"))
                     for s in basis.states), 1e-10)
        rho = basis.rho1
        u = numerics.kron(random_unitary(self.rng, 3), random_unitary(self.rng, 3))
        self.add("observables", "negativity invariant under local unitaries",
                 abs(observables.negativity(u @ rho @ u.conj().T) - observables.negativity(rho)), 1e-10)
        h = gen.hamiltonian
        self.add("observables", "thermal states are passive",
                 max(abs(observables.ergotropy(observables.thermal_state(h, T), h))
                     for T in (0.1, 0.5, 2.0)), 1e-10)
        g = self.global_gen(REF, BathParams(0.5, 0.5, 0.2, 0.2))
        worst = 0.0
        for _ in range(5):
            rho0 = random_density(self.rng)
            gain = (observables.ergotropy(steady.steady_state(g, rho0), h)
                    - observables.ergotropy(rho0, h))
            worst = max(worst, gain)
        self.add("observables", "relaxation at equal temperatures cannot raise ergotropy",
                 max(worst, 0.0), 1e-10)

    # -------------------------------------------------------------- continuum
    def continuum(self):
        p = continuum.ContinuumParams(31)
        self.add("continuum", "discrete continuity", continuum.continuity_residual(p, 0), 1e-10)
        p = continuum.ContinuumParams(20)
        T = continuum.translation_op(p)
        res = max(_m(T[:, p.index(n)] - np.eye(p.dim)[:, p.index(n + 1)]) for n in range(-20, 21))
        self.add("continuum", "momentum generates translations", res, 1e-9)

    def run(self) -> list[InvariantResult]:
        for step in (self.numerics, self.rotor, self.master_eq, self.currents, self.steady,
                     self.observables, self.continuum):
            step()
        return self.results


def run_invariant_suite(seed: int = 0, faults: tuple[str, ...] = ()) -> list[InvariantResult]:
    """Evaluate all invariants with a deterministic random stream."""
    return _Suite(seed, tuple(faults)).run()


def report_rows(results: list[InvariantResult]) -> list[dict]:
    return [{"module": r.module, "invariant": r.name, "residual": r.residual, "tol": r.tol,
             "status": "pass" if r.passed else "FAIL"} for r in results]


__all__ = ["FAULTS", "InvariantResult", "report_rows", "run_invariant_suite"]
