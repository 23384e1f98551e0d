"""Evolution generators for the rotor: classical Markov chain, local GKLS and
microscopically derived global GKLS master equations.

Superoperators act on column-major vectorized operators,
``vec(A X B) = (B^T kron A) vec(X)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import rotor
from .numerics import NumericalError, as_matrix, dagger, hermitian_eig
from .rotor import RotorParams

KINDS = ("classical", "local", "global")


class DegeneracyError(NumericalError):
    """Near-degenerate Bohr frequencies could not be grouped unambiguously."""


@dataclass(frozen=True)
class BathParams:
    """Temperatures and spectral prefactors of the baths of particles a and b."""

    T_a: float = 0.2
    T_b: float = 1.0
    g_a: float = 0.2
    g_b: float = 0.2

    def __post_init__(self):
        for name in ("T_a", "T_b", "g_a", "g_b"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    @property
    def beta_a(self) -> float:
        return 1.0 / self.T_a

    @property
    def beta_b(self) -> float:
        return 1.0 / self.T_b

    def beta(self, bath: str) -> float:
        return {"a": self.beta_a, "b": self.beta_b}[bath]

    def g(self, bath: str) -> float:
        return {"a": self.g_a, "b": self.g_b}[bath]


@dataclass(frozen=True, eq=False)
class LindbladTerm:
    rate: float
    jump: np.ndarray
    bath: str = ""
    frequency: float = 0.0

    def __post_init__(self):
        if not self.rate >= 0:
            raise ValueError(f"rate must be non-negative, got {self.rate}")


@dataclass(frozen=True, eq=False)
class Generator:
    """Hamiltonian plus Lindblad terms; immutable once built."""

    hamiltonian: np.ndarray
    terms: tuple[LindbladTerm, ...] = ()
    kind: str = "global"

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def _terms(self, bath: str | None):
        return [t for t in self.terms if bath is None or t.bath == bath]

    def _decay(self, bath: str | None) -> np.ndarray:
        out = np.zeros_like(self.hamiltonian, dtype=complex)
        for t in self._terms(bath):
            out += t.rate * dagger(t.jump) @ t.jump
        return out

    @cached_property
    def _decay_all(self) -> np.ndarray:
        return self._decay(None)

    def dissipator(self, rho, bath: str | None = None) -> np.ndarray:
        """Dissipative part of the generator, optionally restricted to one bath."""
        rho = np.asarray(rho, dtype=complex)
        decay = self._decay_all if bath is None else self._decay(bath)
        out = -0.5 * (decay @ rho + rho @ decay)
        for t in self._terms(bath):
            out += t.rate * t.jump @ rho @ dagger(t.jump)
        return out

    def apply(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        h = self.hamiltonian
        return -1j * (h @ rho - rho @ h) + self.dissipator(rho)

    def __call__(self, rho) -> np.ndarray:
        return self.apply(rho)

    def apply_adjoint(self, x) -> np.ndarray:
        """Heisenberg-picture generator acting on the observable ``x``."""
        x = np.asarray(x, dtype=complex)
        h = self.hamiltonian
        decay = self._decay_all
        out = 1j * (h @ x - x @ h) - 0.5 * (decay @ x + x @ decay)
        for t in self.terms:
            out += t.rate * dagger(t.jump) @ x @ t.jump
        return out

    @cached_property
    def superoperator(self) -> np.ndarray:
        n = self.dim
        eye = np.eye(n)
        h = self.hamiltonian
        decay = self._decay_all
        out = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
        out -= 0.5 * (np.kron(eye, decay) + np.kron(decay.T, eye))
        for t in self.terms:
            out += t.rate * np.kron(t.jump.conj(), t.jump)
        out.setflags(write=False)
        return out


def superoperator_matrix(gen: Generator) -> np.ndarray:
    return gen.superoperator


def apply(gen: Generator, rho) -> np.ndarray:
    return gen.apply(rho)


def apply_adjoint(gen: Generator, x) -> np.ndarray:
    return gen.apply_adjoint(x)


def vec(m) -> np.ndarray:
    return np.asarray(m, dtype=complex).reshape(-1, order="F")


def unvec(v, dim: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    dim = dim or math.isqrt(v.size)
    return v.reshape(dim, dim, order="F")


def bath_rate(omega: float, beta: float, g: float) -> float:
    """Bosonic bath rate g|w| / (1 - exp(-beta|w|)), times exp(beta w) for w < 0.

    Satisfies gamma(-w) = exp(-beta w) gamma(w); gamma(0) = g / beta.
    """
    if beta <= 0 or g <= 0:
        raise ValueError("beta and g must be positive")
    x = beta * abs(omega)
    if x == 0.0:
        return g / beta
    # written with exp(-x) only, so beta -> infinity cannot overflow
    up = g * abs(omega) / -math.expm1(-x)
    return up if omega > 0 else up * math.exp(-x)


def _cluster(values: np.ndarray, tol: float) -> list[list[int]]:
    """Sorted single-linkage clustering; returns index groups in ascending order."""
    order = np.argsort(values, kind="stable")
    groups: list[list[int]] = []
    prev = None
    for i in order:
        if prev is None or values[i] - values[prev] > tol:
            if prev is not None and values[i] - values[prev] <= 2 * tol:
                raise DegeneracyError(
                    f"values {values[prev]:.3e} and {values[i]:.3e} lie within "
                    f"2*gap_tol of each other but form separate clusters; adjust gap_tol")
            groups.append([int(i)])
        else:
            groups[-1].append(int(i))
        prev = i
    return groups


def default_gap_tol(h) -> float:
    scale = np.max(np.abs(np.linalg.eigvalsh(h))) if np.size(h) else 0.0
    return 1e-8 * max(scale, 1e-4)


def global_jump_ops(h, a_op, gap_tol: float | None = None) -> list[tuple[float, np.ndarray]]:
    """Jump operators Lambda(w) = sum_{E_k - E_m = w} P_m A P_k, one per Bohr gap.

    Energies and gaps are grouped by sorted single-linkage clustering with
    tolerance ``gap_tol``. Gaps whose operator vanishes are omitted; the
    remaining operators sum to ``a_op``. Results are sorted by frequency.
    """
    h = as_matrix(h, "h")
    a_op = as_matrix(a_op, "a_op")
    if gap_tol is None:
        gap_tol = default_gap_tol(h)
    energies, vecs = hermitian_eig(h)
    levels = _cluster(energies, gap_tol)
    level_e = np.array([energies[g].mean() for g in levels])
    proj = [vecs[:, g] @ dagger(vecs[:, g]) for g in levels]
    sandwiched = {(m, k): proj[m] @ a_op @ proj[k]
                  for m in range(len(levels)) for k in range(len(levels))}

    pairs = list(sandwiched)
    gaps = np.array([level_e[k] - level_e[m] for m, k in pairs])
    # cluster |gap| so that +w and -w receive exactly opposite frequencies
    groups = _cluster(np.abs(gaps), gap_tol)
    out: dict[float, np.ndarray] = {}
    for g in groups:
        center = float(np.abs(gaps[g]).mean())
        if np.abs(gaps[g]).min() <= gap_tol:
            center = 0.0
        for i in g:
            w = 0.0 if center == 0.0 else math.copysign(center, gaps[i])
            out[w] = out.get(w, 0) + sandwiched[pairs[i]]
    floor = 1e-13 * max(1.0, float(np.max(np.abs(a_op))))
    return [(w, op) for w, op in sorted(out.items()) if np.max(np.abs(op)) > floor]


def build_global(p: RotorParams, b: BathParams, gap_tol: float | None = None) -> Generator:
    """Global GKLS generator (no Lamb shift).

    Without an explicit ``gap_tol`` the default tolerance is tried first and
    widened by decades (up to 1e-4 of the spectral radius) while Bohr
    frequencies cannot be grouped unambiguously.
    """
    h = rotor.rotor_hamiltonian(p)
    if gap_tol is None:
        base = default_gap_tol(h)
        for scale in (1, 10, 100, 1e3, 1e4):
            try:
                return _build_global(h, b, base * scale)
            except DegeneracyError:
                if scale == 1e4:
                    raise
    return _build_global(h, b, gap_tol)


def _build_global(h: np.ndarray, b: BathParams, gap_tol: float) -> Generator:
    terms = []
    for bath, a_op in zip(rotor.PARTICLES, rotor.coupling_ops()):
        beta, g = b.beta(bath), b.g(bath)
        for w, op in global_jump_ops(h, a_op, gap_tol):
            terms.append(LindbladTerm(bath_rate(w, beta, g), op, bath, w))
    return Generator(h, tuple(terms), "global")


@dataclass(frozen=True, eq=False)
class ClassicalGenerator:
    """Rate matrix of the classical two-particle chain, dp/dt = W p.

    ``W[f, i]`` is the rate from configuration ``i`` to ``f`` with configuration
    index ``3 * j_a + j_b`` (0-based sites).
    """

    W: np.ndarray
    params: RotorParams
    baths: BathParams

    def hops(self):
        """Yield (initial, final, bath) for every allowed single-particle hop."""
        for ja in range(3):
            for jb in range(3):
                i = 3 * ja + jb
                for step in (1, -1):
                    yield i, 3 * ((ja + step) % 3) + jb, "a"
                    yield i, 3 * ja + (jb + step) % 3, "b"

    def stationary(self) -> np.ndarray:
        w, v = np.linalg.eig(self.W)
        p = np.real(v[:, np.argmin(np.abs(w))])
        return p / p.sum()

    def to_generator(self) -> Generator:
        """GKLS embedding: diagonal Hamiltonian and vertex-dyad jumps."""
        h = rotor.interaction_hamiltonian(self.params)
        u = np.real(np.diag(h))
        terms = []
        for i, f, bath in self.hops():
            jump = np.zeros((9, 9), dtype=complex)
            jump[f, i] = 1.0
            terms.append(LindbladTerm(float(self.W[f, i]), jump, bath, float(u[i] - u[f])))
        return Generator(h, tuple(terms), "classical")


def build_classical(p: RotorParams, b: BathParams) -> ClassicalGenerator:
    u = rotor.potts_potential(p).reshape(-1)
    W = np.zeros((9, 9))
    proto = ClassicalGenerator(W, p, b)
    for i, f, bath in proto.hops():
        W[f, i] = bath_rate(u[i] - u[f], b.beta(bath), b.g(bath))
    W[np.diag_indices(9)] = -W.sum(axis=0)
    W.setflags(write=False)
    return proto


def build_local(p: RotorParams, b: BathParams) -> Generator:
    classical = build_classical(p, b)
    terms = classical.to_generator().terms
    return Generator(rotor.rotor_hamiltonian(p), terms, "local")
