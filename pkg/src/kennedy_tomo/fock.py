"""Truncated Fock-space linear algebra.

Vectors and operators are plain numpy arrays in the photon-number basis
|0>, ..., |d-1>. Everything here is a pure function of its arguments.
"""

from __future__ import annotations

from math import factorial
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from .errors import ContractViolation, InvalidInputError, NotPSDError

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-9


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray  # ascending, real
    eigenvectors: np.ndarray  # columns orthonormal


def _check_dim(dim: int, minimum: int = 1) -> int:
    if int(dim) != dim or dim < minimum:
        raise InvalidInputError(f"dimension must be an integer >= {minimum}, got {dim!r}")
    return int(dim)


def annihilation(dim: int) -> np.ndarray:
    """Truncated lowering operator a with a|n> = sqrt(n)|n-1>."""
    dim = _check_dim(dim)
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def number_state(n: int, dim: int) -> np.ndarray:
    dim = _check_dim(dim)
    if not 0 <= n < dim:
        raise InvalidInputError(f"|{n}> does not fit in dimension {dim}")
    v = np.zeros(dim, dtype=complex)
    v[n] = 1.0
    return v


def coherent_vector(alpha: complex, dim: int, renormalize: bool = True) -> tuple[np.ndarray, float]:
    """Truncated coherent state |alpha>.

    Returns ``(vector, captured)`` where ``captured`` is the squared norm of
    the truncated expansion before any renormalization, i.e. the Poisson
    probability of finding fewer than ``dim`` photons.
    """
    dim = _check_dim(dim)
    alpha = complex(alpha)
    if not np.isfinite(alpha):
        raise InvalidInputError(f"coherent amplitude must be finite, got {alpha!r}")
    n = np.arange(dim)
    sqrt_fact = np.sqrt(np.array([float(factorial(k)) for k in n]))
    vec = np.exp(-abs(alpha) ** 2 / 2) * np.power(alpha, n) / sqrt_fact
    vec = vec.astype(complex)
    captured = float(np.vdot(vec, vec).real)
    if renormalize:
        vec = vec / np.sqrt(captured)
    return vec, captured


def coherent_density(alpha: complex, dim: int) -> np.ndarray:
    """Renormalized truncated projector |alpha><alpha| (unit trace)."""
    vec, _ = coherent_vector(alpha, dim, renormalize=True)
    return np.outer(vec, vec.conj())


def plus_minus_states(dim: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """The single-rail qubit states (|0> + |1>)/sqrt(2) and (|0> - |1>)/sqrt(2)."""
    dim = _check_dim(dim, minimum=2)
    plus = np.zeros(dim, dtype=complex)
    minus = np.zeros(dim, dtype=complex)
    plus[:2] = (1.0, 1.0)
    minus[:2] = (1.0, -1.0)
    return plus / np.sqrt(2), minus / np.sqrt(2)


def guard_dim(dim: int) -> int:
    """Working size used before cropping displacement-type operators to ``dim``."""
    return max(dim + 12, 20)


def _displacement_exact(beta: complex, dim: int) -> np.ndarray:
    a = annihilation(dim)
    gen = beta * a.conj().T - np.conj(beta) * a
    return sla.expm(gen)


def displacement_matrix(beta: complex, dim: int, guard: bool = True) -> np.ndarray:
    """Matrix of D(beta) = exp(beta a^dag - beta^* a) on the first ``dim`` levels.

    With ``guard`` (default) the exponential is taken at :func:`guard_dim`
    and cropped, which reproduces the untruncated matrix elements closely.
    Without it the truncated generator is exponentiated at ``dim`` directly;
    that matrix is exactly unitary but its elements are off for small ``dim``.
    """
    dim = _check_dim(dim)
    beta = complex(beta)
    if not np.isfinite(beta):
        raise InvalidInputError(f"displacement must be finite, got {beta!r}")
    if not guard:
        return _displacement_exact(beta, dim)
    big = max(guard_dim(dim), int(np.ceil(abs(beta) ** 2)) + dim + 15)
    return _displacement_exact(beta, big)[:dim, :dim]


def displaced_vacuum_projector(beta: complex, dim: int) -> np.ndarray:
    """D(beta)^dag |0><0| D(beta) cropped to ``dim``; rank one before cropping."""
    dim = _check_dim(dim)
    big = max(guard_dim(dim), int(np.ceil(abs(beta) ** 2)) + dim + 15)
    row = _displacement_exact(complex(beta), big)[0]
    proj = np.outer(row.conj(), row)
    return proj[:dim, :dim]


def is_hermitian(op: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    op = np.asarray(op)
    return op.ndim == 2 and op.shape[0] == op.shape[1] and np.max(np.abs(op - op.conj().T), initial=0.0) < tol


def hermitian_eig(op: np.ndarray) -> EigenDecomposition:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues ascending."""
    op = np.asarray(op, dtype=complex)
    if not is_hermitian(op):
        raise ContractViolation("hermitian_eig requires a Hermitian matrix")
    w, v = np.linalg.eigh((op + op.conj().T) / 2)
    return EigenDecomposition(w, v)


def _psd_eig(op: np.ndarray) -> EigenDecomposition:
    eig = hermitian_eig(op)
    if eig.eigenvalues.size and eig.eigenvalues[0] < -PSD_TOL:
        raise NotPSDError(f"minimum eigenvalue {eig.eigenvalues[0]:.3e} is below -{PSD_TOL}")
    return EigenDecomposition(np.clip(eig.eigenvalues, 0.0, None), eig.eigenvectors)


def psd_sqrt(op: np.ndarray) -> np.ndarray:
    """Unique PSD square root V sqrt(L) V^dag."""
    w, v = _psd_eig(op)
    return (v * np.sqrt(w)) @ v.conj().T


def psd_pinv(op: np.ndarray, floor: float = 1e-12) -> np.ndarray:
    """Pseudo-inverse; eigenvalues below ``floor`` map to zero."""
    w, v = _psd_eig(op)
    inv = np.zeros_like(w)
    keep = w >= floor
    inv[keep] = 1.0 / w[keep]
    return (v * inv) @ v.conj().T


def psd_inv_sqrt(op: np.ndarray, floor: float = 1e-12) -> tuple[np.ndarray, int]:
    """Pseudo-inverse square root and the rank that survived ``floor``."""
    w, v = _psd_eig(op)
    inv = np.zeros_like(w)
    keep = w >= floor
    inv[keep] = 1.0 / np.sqrt(w[keep])
    return (v * inv) @ v.conj().T, int(keep.sum())
