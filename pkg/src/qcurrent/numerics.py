"""Dense linear-algebra kernel shared by the rest of the package.

Matrices are plain ``numpy`` arrays throughout. Two-qutrit operators act on
C^3 (x) C^3 with the basis index ``3 * j_a + j_b`` (0-based sites), which is the
ordering produced by ``numpy.kron``.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
KERNEL_TOL = 1e-9
DEFAULT_DT = 1e-3


class NumericalError(RuntimeError):
    """A numerical procedure failed (step size, degeneracy, missing sector...)."""


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + dagger(m))


def max_abs(m) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m))) if m.size else 0.0


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return max_abs(m - dagger(m)) <= tol


def check_density_matrix(rho, dim: int | None = None, tol: float = TRACE_TOL,
                         psd_tol: float = PSD_TOL) -> np.ndarray:
    """Validate ``rho`` as a density matrix and return it as a complex array.

    Raises ``ValueError`` if ``rho`` is not square (of dimension ``dim`` when
    given), not Hermitian, not unit trace, or has an eigenvalue below
    ``-psd_tol``.
    """
    rho = as_matrix(rho, "density matrix")
    n, m = rho.shape
    if n != m:
        raise ValueError(f"density matrix must be square, got {rho.shape}")
    if dim is not None and n != dim:
        raise ValueError(f"expected a {dim}x{dim} density matrix, got {n}x{n}")
    if not is_hermitian(rho, tol):
        raise ValueError("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise ValueError(f"density matrix has trace {tr}, expected 1")
    lmin = np.linalg.eigvalsh(rho)[0]
    if lmin < -psd_tol:
        raise ValueError(f"density matrix has negative eigenvalue {lmin:.3e}")
    return rho


def kron(*ops) -> np.ndarray:
    """Kronecker product of one or more matrices (left factor is slowest)."""
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def hermitian_eig(h, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    Returns
    -------
    eigenvalues : ndarray
        Real eigenvalues in ascending order.
    eigenvectors : ndarray
        Orthonormal eigenvectors as columns.
    """
    h = as_matrix(h, "h")
    if h.shape[0] != h.shape[1]:
        raise ValueError("h must be square")
    if not is_hermitian(h, tol):
        raise ValueError("h is not Hermitian")
    return np.linalg.eigh(hermitize(h))


def kernel_basis(m, tol: float = KERNEL_TOL) -> list[np.ndarray]:
    """Orthonormal basis of the numerical null space of a square matrix.

    Right-singular vectors whose singular value is below ``tol * sigma_max``
    are returned. A zero matrix has the full space as kernel.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError("m must be square")
    _, s, vh = np.linalg.svd(m)
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return [np.eye(m.shape[1], dtype=complex)[:, i] for i in range(m.shape[1])]
    return [np.conj(vh[i]) for i in range(len(s)) if s[i] < tol * smax]


def _split9(rho) -> np.ndarray:
    rho = as_matrix(rho, "rho")
    if rho.shape != (9, 9):
        raise ValueError(f"expected a 9x9 two-qutrit operator, got {rho.shape}")
    return rho.reshape(3, 3, 3, 3)


def partial_trace(rho, keep: str) -> np.ndarray:
    """Reduced 3x3 operator of subsystem ``keep`` ('a' or 'b') of a 3x3 system."""
    t = _split9(rho)
    if keep == "a":
        return np.einsum("ikjk->ij", t)
    if keep == "b":
        return np.einsum("kikj->ij", t)
    raise ValueError(f"keep must be 'a' or 'b', got {keep!r}")


def partial_transpose(rho, sub: str = "b") -> np.ndarray:
    """Partial transpose of a two-qutrit operator with respect to ``sub``."""
    t = _split9(rho)
    if sub == "b":
        return t.transpose(0, 3, 2, 1).reshape(9, 9)
    if sub == "a":
        return t.transpose(2, 1, 0, 3).reshape(9, 9)
    raise ValueError(f"sub must be 'a' or 'b', got {sub!r}")


def trace_norm(m) -> float:
    return float(np.sum(np.linalg.svd(as_matrix(m), compute_uv=False)))


def trace_distance(a, b) -> float:
    return 0.5 * trace_norm(np.asarray(a) - np.asarray(b))


def ode_step(rho, generator: Callable[[np.ndarray], np.ndarray],
             dt: float = DEFAULT_DT) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step of d(rho)/dt = generator(rho).

    The result is re-Hermitized. A trace change above 1e-6 in a single step
    raises ``NumericalError`` (step too large or generator not trace-free).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    rho = np.asarray(rho, dtype=complex)
    k1 = generator(rho)
    k2 = generator(rho + 0.5 * dt * k1)
    k3 = generator(rho + 0.5 * dt * k2)
    k4 = generator(rho + dt * k3)
    out = hermitize(rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4))
    drift = abs(np.trace(out) - np.trace(rho))
    if drift > 1e-6:
        raise NumericalError(f"trace drift {drift:.3e} in one step; reduce dt")
    return out


def evolve(rho, generator: Callable[[np.ndarray], np.ndarray], t: float,
           dt: float = DEFAULT_DT) -> np.ndarray:
    """Integrate up to time ``t`` with fixed RK4 steps (last step shortened)."""
    n = int(np.floor(t / dt + 1e-9))
    out = np.asarray(rho, dtype=complex)
    for _ in range(n):
        out = ode_step(out, generator, dt)
    rest = t - n * dt
    if rest > 1e-12:
        out = ode_step(out, generator, rest)
    return out


def expm_hermitian(h, scale: complex) -> np.ndarray:
    """exp(scale * h) for Hermitian h via its eigenbasis."""
    w, v = hermitian_eig(h)
    return (v * np.exp(scale * w)) @ dagger(v)
