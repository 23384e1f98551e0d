"""Discretized particle on a ring of 2N+1 sites and the continuum limit of
the assembled tunneling current.

Position kets |q_n>, n = -N..N, sit at q_n = n * ell_N with
ell_N = ell * eps_N and eps_N = 1 / sqrt(2N+1). Momentum kets are the
discrete Fourier modes <q_k|p_n> = eps_N exp(2 pi i eps_N^2 k n). Every
operator is exactly circulant (periodic boundary). hbar = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import dagger


@dataclass(frozen=True)
class ContinuumParams:
    N: int
    ell: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if not (self.ell > 0 and self.mass > 0):
            raise ValueError("ell and mass must be positive")

    @property
    def dim(self) -> int:
        return 2 * self.N + 1

    @property
    def eps(self) -> float:
        return 1.0 / math.sqrt(self.dim)

    @property
    def ell_N(self) -> float:
        return self.ell * self.eps

    @property
    def labels(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    @property
    def momenta(self) -> np.ndarray:
        """Eigenvalues 2 pi eps_N n / ell of P_N, n = -N..N."""
        return 2 * np.pi * self.eps * self.labels / self.ell

    def index(self, n: int) -> int:
        """Array position of site label n (cyclic)."""
        return (n + self.N) % self.dim


def fourier_matrix(p: ContinuumParams) -> np.ndarray:
    """Unitary F[k, n] = <q_k|p_n>; columns are momentum eigenvectors."""
    n = p.labels
    return p.eps * np.exp(2j * np.pi * p.eps ** 2 * np.outer(n, n))


def _from_momentum(p: ContinuumParams, diag) -> np.ndarray:
    F = fourier_matrix(p)
    return (F * np.asarray(diag)) @ dagger(F)


def momentum_op(p: ContinuumParams) -> np.ndarray:
    return _from_momentum(p, p.momenta)


def translation_op(p: ContinuumParams) -> np.ndarray:
    """exp(-i P_N ell_N), which maps |q_n> to |q_{n+1}>."""
    return _from_momentum(p, np.exp(-1j * p.momenta * p.ell_N))


def kinetic_hamiltonian(p: ContinuumParams) -> np.ndarray:
    return _from_momentum(p, p.momenta ** 2 / (2 * p.mass))


def position_projector(p: ContinuumParams, n: int) -> np.ndarray:
    x = np.zeros((p.dim, p.dim), dtype=complex)
    i = p.index(n)
    x[i, i] = 1.0
    return x


def riemann_sum(N: int, k: int) -> float:
    """sum_m eps^2 (eps^2 m)^2 exp(-2 pi i eps^2 m k) over m = -N..N.

    Tends to (-1)^k / (2 pi^2 k^2) as N grows. Uses O(N) memory only.
    """
    eps2 = 1.0 / (2 * N + 1)
    x = eps2 * np.arange(-N, N + 1)
    # the sum is symmetric in m, so only the cosine survives
    return float(eps2 * np.sum(x ** 2 * np.cos(2 * np.pi * x * k)))


def riemann_limit(k: int) -> float:
    return (-1) ** k / (2 * np.pi ** 2 * k ** 2)


def p_squared_offdiag(p: ContinuumParams, k: int) -> complex:
    """<q_n|P_N^2|q_{n+k}>, independent of n; approaches 2(-1)^k / (ell_N k)^2."""
    if not 1 <= k <= p.N:
        raise ValueError(f"k must lie in [1, {p.N}]")
    return complex((2 * np.pi / p.ell) ** 2 / p.eps ** 2 * riemann_sum(p.N, k))


def tunneling_current(h: np.ndarray, p: ContinuumParams, n: int, m: int) -> np.ndarray:
    """Tunneling current operator from site n to site m."""
    if p.index(n) == p.index(m):
        raise ValueError("edge endpoints must be different sites")
    i, j = p.index(n), p.index(m)
    out = np.zeros_like(h, dtype=complex)
    out[i, j] += 1j * h[i, j]
    out[j, i] -= 1j * h[j, i]
    return out


def assembled_current(p: ContinuumParams, n: int = 0, k_max: int | None = None,
                      h: np.ndarray | None = None) -> np.ndarray:
    """J(q_n) = sum_{k=1}^{k_max} k ell_N J_{n -> n+k}, with k_max = N by default."""
    k_max = p.N if k_max is None else k_max
    if not 1 <= k_max <= p.N:
        raise ValueError(f"k_max must lie in [1, {p.N}]")
    h = kinetic_hamiltonian(p) if h is None else h
    out = np.zeros((p.dim, p.dim), dtype=complex)
    for k in range(1, k_max + 1):
        out += k * p.ell_N * tunneling_current(h, p, n, n + k)
    return out


def anticommutator_current(p: ContinuumParams, n: int = 0) -> np.ndarray:
    """{P_N, |q_n><q_n|} / 2m."""
    P = momentum_op(p)
    x = position_projector(p, n)
    return (P @ x + x @ P) / (2 * p.mass)


def current_error(p: ContinuumParams, n: int = 0, band: float | None = 2 * np.pi) -> float:
    """Distance between the assembled current and {P, |q_n><q_n|}/2m.

    With ``band`` set, the difference is taken between momentum eigenstates
    with |p| <= band, in continuum normalization (divided by ell_N), and the
    largest modulus is returned. With ``band=None`` the plain entrywise
    maximum in the position basis is returned; that quantity does not
    shrink with N, because the assembled sum only fills forward entries.
    """
    diff = assembled_current(p, n) - anticommutator_current(p, n)
    if band is None:
        return float(np.max(np.abs(diff)))
    F = fourier_matrix(p)[:, np.abs(p.momenta) <= band]
    if F.shape[1] == 0:
        raise ValueError("momentum band contains no states")
    return float(np.max(np.abs(dagger(F) @ diff @ F)) / p.ell_N)


def convergence_ladder(Ns=(11, 31, 101, 301), ell: float = 1.0, mass: float = 1.0,
                       band: float = 2 * np.pi) -> list[tuple[int, float, float]]:
    """(N, band-limited error, entrywise error) for each N."""
    rows = []
    for N in Ns:
        p = ContinuumParams(N, ell, mass)
        rows.append((N, current_error(p, 0, band), current_error(p, 0, None)))
    return rows


def log_operator(p: ContinuumParams) -> np.ndarray:
    """zeta = ln(I + exp(-i P_N ell_N)) on the principal branch."""
    return _from_momentum(p, np.log1p(np.exp(-1j * p.momenta * p.ell_N)))


def log_series(p: ContinuumParams, k_max: int) -> np.ndarray:
    """Partial sum sum_{k=1}^{k_max} (-1)^(k-1) T^k / k with T = exp(-i P_N ell_N)."""
    t = np.exp(-1j * p.momenta * p.ell_N)
    k = np.arange(1, k_max + 1)[:, None]
    coeff = ((-1.0) ** (k - 1) / k * t[None, :] ** k).sum(axis=0)
    return _from_momentum(p, coeff)


def continuity_residual(p: ContinuumParams, n: int = 0) -> float:
    """max |i[H, x_n] - sum_k (J_{n-k -> n} - J_{n -> n+k})| for H = P^2/2m."""
    h = kinetic_hamiltonian(p)
    x = position_projector(p, n)
    lhs = 1j * (h @ x - x @ h)
    rhs = np.zeros_like(lhs)
    for k in range(1, p.N + 1):
        rhs += tunneling_current(h, p, n - k, n) - tunneling_current(h, p, n, n + k)
    return float(np.max(np.abs(lhs - rhs)))
