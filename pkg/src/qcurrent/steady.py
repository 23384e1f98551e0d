"""Steady states of the rotor generators and their decomposition into the
eigensectors of the global rotation R."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import rotor
from .master_eq import Generator, unvec, vec
from .numerics import KERNEL_TOL, NumericalError, dagger, hermitize, kernel_basis


class DegenerateSteadyStateError(NumericalError):
    """The steady manifold is larger than the three R-sectors can describe."""


@lru_cache(maxsize=1)
def _symmetry() -> rotor.SymmetryDecomposition:
    return rotor.global_rotation()


@dataclass(frozen=True, eq=False)
class SteadyStateBasis:
    rho1: np.ndarray
    rho2: np.ndarray
    rho3: np.ndarray
    kernel_dim: int

    @property
    def states(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.rho1, self.rho2, self.rho3

    def state(self, k: int) -> np.ndarray:
        return self.states[(k - 1) % 3]


@dataclass(frozen=True)
class WeightDecomposition:
    theta0: complex
    lambda1: float
    lambda2: float
    lambda3: float

    @property
    def lambdas(self) -> tuple[float, float, float]:
        return self.lambda1, self.lambda2, self.lambda3


def _repair_psd(rho: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    rho = hermitize(rho)
    w, v = np.linalg.eigh(rho)
    if w[0] < -tol:
        raise NumericalError(f"steady state has eigenvalue {w[0]:.3e} < -{tol:g}")
    if w[0] < 0:
        w = np.clip(w, 0, None)
        rho = (v * w) @ dagger(v)
    return rho / np.trace(rho).real


def _hermitian_kernel(gen: Generator, tol: float) -> list[np.ndarray]:
    mats = []
    for v in kernel_basis(gen.superoperator, tol):
        m = unvec(v, gen.dim)
        mats.append(hermitize(m))
        mats.append(hermitize(-1j * m))
    return mats


def asymptotic_projector(gen: Generator, tol: float = KERNEL_TOL) -> np.ndarray:
    """Superoperator P0 = lim_{t->oo} exp(L t), built from left/right kernels.

    Requires every non-zero eigenvalue of L to have a strictly negative real
    part; purely oscillating modes raise ``NumericalError``.
    """
    L = gen.superoperator
    right = np.array(kernel_basis(L, tol)).T
    left = np.array(kernel_basis(dagger(L), tol)).T
    if right.shape[1] != left.shape[1]:
        raise NumericalError("left and right kernels differ in dimension")
    ev = np.linalg.eigvals(L)
    scale = np.max(np.abs(ev))
    live = ev[np.abs(ev) > 1e-7 * scale]
    if live.size and np.max(live.real) > -1e-9 * scale:
        raise NumericalError("generator has non-decaying oscillating modes")
    return right @ np.linalg.solve(dagger(left) @ right, dagger(left))


def long_time_state(gen: Generator, rho0, projector: np.ndarray | None = None) -> np.ndarray:
    """Infinite-time limit of exp(L t) rho0, via the kernel projector."""
    P = asymptotic_projector(gen) if projector is None else projector
    return hermitize(unvec(P @ vec(rho0), gen.dim))


def unique_steady_state(gen: Generator, tol: float = KERNEL_TOL) -> np.ndarray:
    mats = _hermitian_kernel(gen, tol)
    if len(mats) != 2:
        raise NumericalError(f"steady state is not unique (kernel dimension {len(mats) // 2})")
    m = max(mats, key=lambda a: abs(np.trace(a)))
    return _repair_psd(m / np.trace(m))


def solve_basis(gen: Generator, tol: float = KERNEL_TOL) -> SteadyStateBasis:
    """Symmetry-resolved steady states rho_k = R_k rho R_k / tr(R_k rho).

    With a 3-dimensional kernel each R-sector holds exactly one steady state.
    With a larger kernel the k-th state is the long-time limit of R_k / 3.
    With a 1-dimensional kernel (local, classical) the unique steady state
    is returned three times.
    """
    mats = _hermitian_kernel(gen, tol)
    kdim = len(mats) // 2
    if kdim == 0:
        raise NumericalError("generator has no steady state")
    if kdim == 1:
        rho = unique_steady_state(gen, tol)
        return SteadyStateBasis(rho, rho, rho, 1)
    sym = _symmetry()
    if kdim > 3:
        P = asymptotic_projector(gen, tol)
        states = []
        for Rk in sym.projectors:
            s = long_time_state(gen, Rk / 3, P)
            s = Rk @ s @ Rk
            states.append(_repair_psd(s / np.trace(s).real))
        return SteadyStateBasis(*states, kdim)
    states = []
    for k, Rk in enumerate(sym.projectors, start=1):
        # try kernel candidates in order of overlap with the sector
        best = max(mats, key=lambda m: abs(np.trace(Rk @ m)))
        tr = np.trace(Rk @ best)
        if abs(tr) < 1e-12:
            raise NumericalError(f"no steady state found in R-sector {k}")
        states.append(_repair_psd(Rk @ best @ Rk / tr))
    return SteadyStateBasis(*states, kdim)


def theta0(rho0) -> complex:
    """Sum of <j_a, j_b| rho0 |j_a+1, j_b+1> = tr(R rho0)."""
    return complex(np.trace(_symmetry().R @ np.asarray(rho0)))


def weights(rho0) -> WeightDecomposition:
    th = theta0(rho0)
    l1 = 1 / 3 - 2 / 3 * (np.exp(1j * math.pi / 3) * th).real
    l2 = 1 / 3 - 2 / 3 * (np.exp(-1j * math.pi / 3) * th).real
    return WeightDecomposition(th, float(l1), float(l2), float(1 - l1 - l2))


def sector_weights(rho0) -> tuple[float, float, float]:
    """tr(R_k rho0) for k = 1, 2, 3."""
    return tuple(float(np.trace(Rk @ rho0).real) for Rk in _symmetry().projectors)


def asymptotic_state(basis: SteadyStateBasis, rho0) -> np.ndarray:
    if basis.kernel_dim != 3:
        raise DegenerateSteadyStateError(
            f"kernel dimension {basis.kernel_dim}: sector weights do not fix the "
            "asymptotic state; use long_time_state")
    lam = weights(rho0).lambdas
    return sum(l * s for l, s in zip(lam, basis.states))


def steady_state(gen: Generator, rho0, basis: SteadyStateBasis | None = None) -> np.ndarray:
    """State reached from ``rho0``, by sector weights when possible."""
    basis = basis or solve_basis(gen)
    if basis.kernel_dim == 3:
        return asymptotic_state(basis, rho0)
    if basis.kernel_dim == 1:
        return basis.rho1
    return long_time_state(gen, rho0)


@dataclass(frozen=True)
class CurrentDecomposition:
    total: float
    tunneling: float
    thermal: float
    predicted: float


def steady_current_decomposition(basis: SteadyStateBasis, rho0, gen: Generator,
                                 particle: str = "a", site: int = 1,
                                 tol: float = 1e-8) -> CurrentDecomposition:
    """Steady current on the edge site -> site+1, checked against the
    two-term sector formula in Im(theta0) and Re(theta0)."""
    from .currents import average_current, current_operators

    x1 = rotor.site_projector(particle, site)
    x2 = rotor.site_projector(particle, site + 1)
    ops = current_operators(gen, x1, x2)
    direct = average_current(ops, asymptotic_state(basis, rho0))
    ref = average_current(ops, basis.rho1)
    th = theta0(rho0)
    predicted = 2 * th.imag / math.sqrt(3) * ref.tunneling + (2 - 2 * th.real) / 3 * ref.thermal
    if abs(predicted - direct.total) > tol:
        raise NumericalError(
            f"sector decomposition mismatch {abs(predicted - direct.total):.3e}")
    return CurrentDecomposition(direct.total, direct.tunneling, direct.thermal, predicted)

