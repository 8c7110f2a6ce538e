"""Dense complex matrix primitives used by every analysis stage.

All functions are pure and operate on (or coerce to) 2-D complex numpy
arrays; matrices in this package are tiny (n rarely above 8), so singular
values are obtained from a Hermitian eigen-decomposition of ``M* M``
rather than a full SVD.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Default relative tolerance, matched to the integrator target downstream.
DEFAULT_TOL = 1e-10


class NonSquareError(ValueError):
    """Raised when an operation defined for square matrices gets a rectangle."""


def as_cmatrix(m) -> np.ndarray:
    """Coerce ``m`` to a 2-D complex ndarray."""
    a = np.asarray(m, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got array with ndim={a.ndim}")
    return a


def adjoint(m) -> np.ndarray:
    return as_cmatrix(m).conj().T


def singular_values(m) -> np.ndarray:
    """All singular values of ``m``, descending."""
    a = as_cmatrix(m)
    if a.size == 0:
        return np.zeros(0)
    ev = np.linalg.eigvalsh(a.conj().T @ a)
    return np.sqrt(np.clip(ev, 0.0, None))[::-1]


def operator_norm(m) -> float:
    """Spectral norm (largest singular value); 0 for an empty matrix."""
    sv = singular_values(m)
    return float(sv[0]) if sv.size else 0.0


def min_singular_value(m) -> float:
    """Smallest singular value of a square matrix; 0 iff singular up to round-off."""
    a = as_cmatrix(m)
    if a.shape[0] != a.shape[1]:
        raise NonSquareError(f"matrix is {a.shape[0]}x{a.shape[1]}, need square")
    if a.size == 0:
        return 0.0
    return float(singular_values(a)[-1])


@dataclass(frozen=True)
class HermitianCheck:
    hermitian: bool
    psd: bool
    min_eig: float


def hermitian_psd_check(m, tol: float = DEFAULT_TOL) -> HermitianCheck:
    """Test Hermitian-ness and positive semidefiniteness of a square matrix.

    ``hermitian`` holds iff ``|M - M*| <= tol * (1 + |M|)`` in operator norm;
    ``psd`` additionally requires the smallest eigenvalue of the Hermitian
    part ``(M + M*)/2`` to be at least ``-tol``.
    """
    a = as_cmatrix(m)
    if a.shape[0] != a.shape[1]:
        raise NonSquareError(f"matrix is {a.shape[0]}x{a.shape[1]}, need square")
    if a.size == 0:
        return HermitianCheck(True, True, 0.0)
    herm = operator_norm(a - a.conj().T) <= tol * (1.0 + operator_norm(a))
    min_eig = float(np.linalg.eigvalsh(0.5 * (a + a.conj().T))[0])
    return HermitianCheck(herm, herm and min_eig >= -tol, min_eig)


def hermitian_part(m) -> np.ndarray:
    a = as_cmatrix(m)
    return 0.5 * (a + a.conj().T)


def herm_eigh(m):
    """Eigen-decomposition of the Hermitian part of ``m`` (ascending)."""
    return np.linalg.eigh(hermitian_part(m))


def herm_sqrt(m, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Hermitian square root of a PSD matrix (tiny negative eigenvalues clipped)."""
    w, v = herm_eigh(m)
    scale = max(1.0, float(w[-1]) if w.size else 0.0)
    if w.size and w[0] < -tol * scale:
        raise ValueError(f"matrix is not PSD (min eigenvalue {w[0]:.3e})")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def herm_inv_sqrt(m, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Inverse Hermitian square root of a positive definite matrix.

    Raises ``np.linalg.LinAlgError`` when the smallest eigenvalue is below
    ``tol`` times the largest (the matrix counts as singular).
    """
    w, v = herm_eigh(m)
    if w.size == 0:
        return as_cmatrix(m)
    scale = max(float(w[-1]), 0.0)
    if scale <= 0.0 or w[0] <= tol * scale:
        raise np.linalg.LinAlgError("matrix is singular or indefinite within tolerance")
    return (v / np.sqrt(w)) @ v.conj().T


def pinv_psd(m, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Pseudo-inverse of a PSD matrix; eigenvalues below ``tol * |M|`` become 0."""
    w, v = herm_eigh(m)
    if w.size == 0:
        return as_cmatrix(m)
    cutoff = tol * max(float(w[-1]), 0.0)
    inv = np.where(w > cutoff, 1.0 / np.where(w > cutoff, w, 1.0), 0.0)
    return (v * inv) @ v.conj().T

