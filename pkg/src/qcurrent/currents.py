"""Probability-current operators of a GKLS generator and the quantities that
derive from them: averages, two-strong-measurement currents, Margenau-Hill
rates, weak values and the contextuality witness.

Site arguments are ``SiteProjector`` objects or plain projector matrices
(the latter is convenient for single-particle models).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from . import rotor
from .master_eq import Generator
from .numerics import NumericalError, dagger
from .rotor import SiteProjector

Site = Union[SiteProjector, np.ndarray]

WITNESS_THRESHOLD = -1e-12


def _mat(x: Site) -> np.ndarray:
    return x.matrix if isinstance(x, SiteProjector) else np.asarray(x, dtype=complex)


def _label(x: Site):
    if isinstance(x, SiteProjector):
        return (x.particle, x.site)
    return None


def _check_edge(xj: Site, xj2: Site) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(xj, SiteProjector) and isinstance(xj2, SiteProjector):
        if xj.particle != xj2.particle:
            raise ValueError("sites belong to different particles")
        if xj.index == xj2.index:
            raise ValueError("edge endpoints must be different sites")
    a, b = _mat(xj), _mat(xj2)
    if np.array_equal(a, b):
        raise ValueError("edge endpoints must be different sites")
    return a, b


def _anti(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


@dataclass(frozen=True, eq=False)
class CurrentOperators:
    tunneling: np.ndarray
    thermal: np.ndarray
    total: np.ndarray
    edge: tuple = None


class AverageCurrent(NamedTuple):
    tunneling: float
    thermal: float
    total: float


@dataclass(frozen=True)
class MHRate:
    value: float
    edge: tuple = None


@dataclass(frozen=True)
class Witness:
    is_contextual: bool
    min_mh: float
    edge: tuple


def current_op_general(gen: Generator, xj: Site, xj2: Site) -> np.ndarray:
    """J = {x_j, dx_j'/dt}/2 - {x_j', dx_j/dt}/2 with Heisenberg derivatives."""
    a, b = _check_edge(xj, xj2)
    return 0.5 * (_anti(a, gen.apply_adjoint(b)) - _anti(b, gen.apply_adjoint(a)))


def tunneling_current_op(h, xj: Site, xj2: Site) -> np.ndarray:
    a, b = _check_edge(xj, xj2)
    h = np.asarray(h, dtype=complex)
    return 1j * (a @ h @ b - b @ h @ a)


def thermal_current_op(gen: Generator, xj: Site, xj2: Site) -> np.ndarray:
    a, b = _check_edge(xj, xj2)
    out = np.zeros_like(a)
    for t in gen.terms:
        lam, lamd = t.jump, dagger(t.jump)
        out += 0.5 * t.rate * (_anti(a, lamd @ b @ lam) - _anti(b, lamd @ a @ lam))
    return out


def current_operators(gen: Generator, xj: Site, xj2: Site) -> CurrentOperators:
    tun = tunneling_current_op(gen.hamiltonian, xj, xj2)
    th = thermal_current_op(gen, xj, xj2)
    return CurrentOperators(tun, th, tun + th, (_label(xj), _label(xj2)))


def _real_expectation(op: np.ndarray, rho) -> float:
    v = np.trace(np.asarray(rho) @ op)
    if abs(v.imag) > 1e-9:
        raise NumericalError(f"expectation has imaginary part {v.imag:.3e}; "
                             "operator is not Hermitian")
    return float(v.real)


def average_current(ops: CurrentOperators, rho) -> AverageCurrent:
    return AverageCurrent(_real_expectation(ops.tunneling, rho),
                          _real_expectation(ops.thermal, rho),
                          _real_expectation(ops.total, rho))


def tsm_current(gen: Generator, rho, xj: Site, xj2: Site) -> float:
    """Current inferred from two projective position measurements."""
    a, b = _check_edge(xj, xj2)
    rho = np.asarray(rho, dtype=complex)
    out = 0.0
    for t in gen.terms:
        lam, lamd = t.jump, dagger(t.jump)
        out += t.rate * (np.trace(lam @ a @ rho @ a @ lamd @ b)
                         - np.trace(lam @ b @ rho @ b @ lamd @ a))
    return float(np.real(out))


def mh_rate(gen: Generator, rho, xj: Site, xj2: Site) -> MHRate:
    """Time derivative of the Margenau-Hill distribution Re tr[x_j x_j'(t) rho]."""
    a, b = _check_edge(xj, xj2)
    value = np.trace(a @ gen.apply_adjoint(b) @ np.asarray(rho)).real
    return MHRate(float(value), (_label(xj), _label(xj2)))


def weak_value(gen: Generator, rho, xj: Site, xj2: Site, eps: float) -> float:
    """Real weak value of x_j postselected on x_j' evolved for time eps
    (first order in eps)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    a, b = _check_edge(xj, xj2)
    rho = np.asarray(rho, dtype=complex)
    b_eps = b + eps * gen.apply_adjoint(b)
    den = np.trace(b_eps @ rho).real
    if den <= 1e-14:
        raise NumericalError("postselection probability vanishes; weak value undefined")
    return float(np.trace(a @ _anti(rho, b_eps)).real / (2 * den))


def contextuality_witness(gen: Generator, rho, particle: str) -> Witness:
    """Smallest Margenau-Hill rate over all ordered site pairs of one particle."""
    best = None
    for s in range(1, 4):
        for s2 in range(1, 4):
            if s == s2:
                continue
            r = mh_rate(gen, rho, rotor.site_projector(particle, s),
                        rotor.site_projector(particle, s2))
            if best is None or r.value < best.value:
                best = r
    return Witness(best.value < WITNESS_THRESHOLD, best.value, best.edge)


def edge_current(gen: Generator, rho, particle: str, site: int = 1) -> AverageCurrent:
    """Average current of ``particle`` on the edge site -> site+1."""
    ops = current_operators(gen, rotor.site_projector(particle, site),
                            rotor.site_projector(particle, site + 1))
    return average_current(ops, rho)
