"""Operators of the two-qutrit dissipative rotor.

Sites are labelled 1, 2, 3 in the public API and are cyclic (site 4 is site
1). Arrays indexed by site (e.g. the potential) use 0-based positions, so
``U[j_a - 1, j_b - 1]`` is the energy of configuration ``(j_a, j_b)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .numerics import kron

D = 3
I3 = np.eye(D, dtype=complex)
I9 = np.eye(D * D, dtype=complex)
PARTICLES = ("a", "b")


@dataclass(frozen=True)
class RotorParams:
    """Tunneling rate ``tau``, Potts coupling ``K`` and phase ``phi`` (radians)."""

    tau: float = 0.1
    K: float = 2.0
    phi: float = math.pi / 6

    def __post_init__(self):
        for name in ("tau", "K", "phi"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")


@dataclass(frozen=True)
class SiteProjector:
    particle: str
    site: int
    matrix: np.ndarray

    @property
    def index(self) -> int:
        """0-based site position."""
        return (self.site - 1) % D


@dataclass(frozen=True)
class SymmetryDecomposition:
    R: np.ndarray
    projectors: tuple[np.ndarray, np.ndarray, np.ndarray]
    eigenvalues: tuple[complex, complex, complex]

    def projector(self, k: int) -> np.ndarray:
        """Eigenprojector for eigenvalue exp(2 pi i k / 3), k = 1, 2, 3."""
        return self.projectors[(k - 1) % 3]


def _check_particle(particle: str) -> str:
    if particle not in PARTICLES:
        raise ValueError(f"particle must be 'a' or 'b', got {particle!r}")
    return particle


def ket(site: int) -> np.ndarray:
    v = np.zeros(D, dtype=complex)
    v[(site - 1) % D] = 1.0
    return v


def dyad(i: int, j: int) -> np.ndarray:
    """|i><j| on a single qutrit (1-based cyclic sites)."""
    return np.outer(ket(i), ket(j).conj())


def shift() -> np.ndarray:
    """Single-qutrit cyclic shift |k> -> |k+1>."""
    return sum(dyad(k + 1, k) for k in range(1, D + 1))


def x_op() -> np.ndarray:
    s = shift()
    return s + s.conj().T


def potts_potential(p: RotorParams) -> np.ndarray:
    j = np.arange(D)
    return 0.5 * p.K * np.cos(2 * np.pi * (j[:, None] - j[None, :]) / 3 + p.phi)


def interaction_hamiltonian(p: RotorParams) -> np.ndarray:
    return np.diag(potts_potential(p).reshape(-1)).astype(complex)


def rotor_hamiltonian(p: RotorParams) -> np.ndarray:
    x = x_op()
    return p.tau * (kron(x, I3) + kron(I3, x)) + interaction_hamiltonian(p)


def local_rotation(particle: str) -> np.ndarray:
    if _check_particle(particle) == "a":
        return kron(shift(), I3)
    return kron(I3, shift())


def global_rotation() -> SymmetryDecomposition:
    R = local_rotation("a") @ local_rotation("b")
    powers = [I9, R, R @ R]
    eigenvalues = tuple(np.exp(2j * np.pi * k / 3) for k in (1, 2, 3))
    projectors = tuple(
        sum(np.exp(-2j * np.pi * k * m / 3) * powers[m] for m in range(3)) / 3
        for k in (1, 2, 3)
    )
    return SymmetryDecomposition(R=R, projectors=projectors, eigenvalues=eigenvalues)


def swap() -> np.ndarray:
    s = np.zeros((D * D, D * D), dtype=complex)
    for i in range(D):
        for j in range(D):
            s[D * j + i, D * i + j] = 1.0
    return s


def generalized_exchange(k: int) -> np.ndarray:
    """Particle exchange followed by k rotations of particle b,
    |j_a, j_b> -> |j_b, j_a + k>.

    This is the ordering for which U[j_a, j_b] = U[j_b, j_a + k] turns into
    [H, Xi_k] = 0 at phi = k pi/3.
    """
    return np.linalg.matrix_power(local_rotation("b"), k % D) @ swap()


def coupling_ops() -> tuple[np.ndarray, np.ndarray]:
    x = x_op()
    return kron(x, I3) / 3, kron(I3, x) / 3


def site_projector(particle: str, site: int) -> SiteProjector:
    p = dyad(site, site)
    m = kron(p, I3) if _check_particle(particle) == "a" else kron(I3, p)
    return SiteProjector(particle=particle, site=(site - 1) % D + 1, matrix=m)


def site_projectors() -> list[SiteProjector]:
    return [site_projector(q, s) for q in PARTICLES for s in range(1, D + 1)]


def edges(particle: str) -> Iterator[tuple[SiteProjector, SiteProjector]]:
    """Forward edges j -> j+1 of one particle."""
    for s in range(1, D + 1):
        yield site_projector(particle, s), site_projector(particle, s + 1)
