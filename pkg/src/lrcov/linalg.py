"""Dense symmetric linear algebra: eigendecomposition, norms, PD repair, solves."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy import linalg as sla

from lrcov.errors import ConfigError, NumericalError

__all__ = [
    "EigenDecomposition",
    "symmetrize",
    "check_symmetric",
    "eigh",
    "spectral_norm",
    "floor_eigenvalues",
    "solve_spd",
]


class EigenDecomposition(NamedTuple):
    """Eigenvalues sorted in descending order with matching eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Return ``(a + a') / 2``, which is exactly symmetric in floating point."""
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + a.T)


def check_symmetric(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ConfigError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ConfigError(f"{name} has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if a.size and np.max(np.abs(a - a.T)) > 1e-8 * scale:
        raise ConfigError(f"{name} is not symmetric")
    return a


def eigh(a: np.ndarray) -> EigenDecomposition:
    """Symmetric eigendecomposition, eigenvalues in descending order."""
    a = check_symmetric(a)
    try:
        w, v = np.linalg.eigh(symmetrize(a))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"symmetric eigensolver did not converge for a {a.shape[0]}x{a.shape[0]} matrix"
        ) from exc
    order = np.argsort(w)[::-1]
    return EigenDecomposition(w[order], v[:, order])


def spectral_norm(a: np.ndarray) -> float:
    """Operator 2-norm of a symmetric matrix, i.e. its largest absolute eigenvalue."""
    a = check_symmetric(a)
    if a.size == 0:
        return 0.0
    try:
        w = np.linalg.eigvalsh(symmetrize(a))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"symmetric eigensolver did not converge for a {a.shape[0]}x{a.shape[0]} matrix"
        ) from exc
    return float(np.max(np.abs(w)))


def floor_eigenvalues(a: np.ndarray, floor: float = 1e-6) -> np.ndarray:
    """Replace eigenvalues below ``floor`` by ``floor``, keeping the eigenvectors.

    A matrix whose smallest eigenvalue already reaches ``floor`` is returned
    unchanged.
    """
    if not floor > 0:
        raise ConfigError(f"eigenvalue floor must be positive, got {floor}")
    values, vectors = eigh(a)
    if values[-1] >= floor:
        return np.array(a, dtype=float, copy=True)
    out = (vectors * np.maximum(values, floor)) @ vectors.T
    return symmetrize(out)


def solve_spd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``a x = b`` for symmetric positive definite ``a`` by Cholesky."""
    a = check_symmetric(a)
    try:
        factor = sla.cho_factor(symmetrize(a), lower=True, check_finite=False)
    except sla.LinAlgError as exc:
        raise NumericalError(
            "matrix is not positive definite; floor its eigenvalues before solving"
        ) from exc
    return sla.cho_solve(factor, np.asarray(b, dtype=float), check_finite=False)
