"""Heat flux, negativity, ergotropy, coherence and the entanglement threshold
searches of the rotor."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import rotor, steady
from .master_eq import Generator
from .numerics import NumericalError, dagger, hermitian_eig, partial_transpose

ENTANGLED_TOL = 1e-10

KET_SIGMA_A = np.array([1, np.exp(-2j * np.pi / 3), np.exp(2j * np.pi / 3)]) / math.sqrt(3)
KET_SIGMA_B = np.ones(3, dtype=complex) / math.sqrt(3)


def heat_flux(gen: Generator, rho, bath: str) -> float:
    """Energy per unit time entering the system from ``bath``: tr(H D_bath[rho])."""
    if bath not in rotor.PARTICLES:
        raise ValueError(f"bath must be 'a' or 'b', got {bath!r}")
    return float(np.trace(gen.hamiltonian @ gen.dissipator(rho, bath)).real)


def negativity(rho) -> float:
    """Sum of |negative eigenvalues| of the partial transpose over b."""
    ev = np.linalg.eigvalsh(partial_transpose(rho, "b"))
    return float(np.sum(-ev[ev < 0]))


def is_entangled(rho, tol: float = ENTANGLED_TOL) -> bool:
    return negativity(rho) > tol


def ergotropy(rho, h) -> float:
    energies, _ = hermitian_eig(h)
    r = np.linalg.eigvalsh(np.asarray(rho))[::-1]
    return float(np.trace(np.asarray(h) @ rho).real - np.dot(energies, r))


def coherence(sigma) -> float:
    """l1-norm of coherence: sum of moduli of the off-diagonal entries."""
    s = np.abs(np.asarray(sigma))
    return float(s.sum() - np.trace(s))


def theta_sigma(sigma) -> complex:
    s = np.asarray(sigma)
    return complex(s[0, 1] + np.conj(s[0, 2]) + s[1, 2])


def thermal_state(h, T: float) -> np.ndarray:
    if T <= 0:
        raise ValueError("temperature must be positive")
    energies, v = hermitian_eig(h)
    p = np.exp(-(energies - energies[0]) / T)
    p /= p.sum()
    return (v * p) @ dagger(v)


@dataclass(frozen=True, eq=False)
class CoherentInputFamily:
    """Product inputs sigma_a(delta) (x) sigma_b(delta) with white noise delta."""

    delta: float
    sigma_a: np.ndarray
    sigma_b: np.ndarray

    @property
    def state(self) -> np.ndarray:
        return np.kron(self.sigma_a, self.sigma_b)


def noisy_pure(ket, delta: float) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex)
    return (1 - delta) * np.outer(ket, ket.conj()) + delta / len(ket) * np.eye(len(ket))


def coherent_input(delta: float) -> CoherentInputFamily:
    if not 0 <= delta <= 1:
        raise ValueError("delta must lie in [0, 1]")
    return CoherentInputFamily(delta, noisy_pure(KET_SIGMA_A, delta),
                               noisy_pure(KET_SIGMA_B, delta))


def _bisect(pred: Callable[[float], bool], lo: float, hi: float, tol: float) -> float:
    """Boundary between pred(lo) True and pred(hi) False."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def delta_max(make_generator: Callable[[float, float], Generator], T_a: float,
              T_b: float, tol: float = 1e-4) -> float:
    """Largest noise level delta for which the coherent product input still
    relaxes to an entangled (NPT) steady state."""
    gen = make_generator(T_a, T_b)
    basis = steady.solve_basis(gen)
    if basis.kernel_dim == 3:
        def final(rho0):
            return steady.asymptotic_state(basis, rho0)
    else:
        P = steady.asymptotic_projector(gen)

        def final(rho0):
            return steady.long_time_state(gen, rho0, P)

    def pred(delta: float) -> bool:
        return is_entangled(final(coherent_input(delta).state))

    if not pred(0.0):
        return 0.0
    if not pred(1.0):
        return _bisect(pred, 0.0, 1.0, tol)
    grid = np.linspace(0.0, 1.0, 21)
    flags = [pred(d) for d in grid]
    if all(flags):
        return 1.0
    i = flags.index(False)
    return _bisect(pred, grid[i - 1], grid[i], tol)


def entanglement_temperature(h, tol: float = 1e-6) -> float:
    """Temperature above which thermal states of ``h`` are PPT."""
    energies, _ = hermitian_eig(h)
    spread = max(energies[-1] - energies[0], 1e-12)

    def pred(T: float) -> bool:
        return is_entangled(thermal_state(h, T))

    lo = 1e-3 * spread
    if not pred(lo):
        return 0.0
    hi = spread
    while pred(hi):
        lo, hi = hi, 2 * hi
        if hi > 1e6 * spread:
            raise NumericalError("thermal states stay entangled at all probed temperatures")
    return _bisect(pred, lo, hi, tol)
