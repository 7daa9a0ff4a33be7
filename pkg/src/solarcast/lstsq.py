"""Minimum-norm least squares for output-layer weights.

The canonical route is an SVD pseudoinverse, which stays well defined when
the hidden matrix is rank deficient. A positive ``ridge_lambda`` switches to
regularised normal equations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonFiniteEntries, NumericalFailure


def _as_2d(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    return a[:, None] if a.ndim == 1 else a


@dataclass(frozen=True, eq=False)
class LinearSystem:
    H: np.ndarray
    D: np.ndarray
    ridge_lambda: float = 0.0

    def __post_init__(self):
        H, D = _as_2d(self.H), _as_2d(self.D)
        if H.ndim != 2 or D.ndim != 2:
            raise DimensionMismatch("H and D must be matrices")
        if H.shape[0] != D.shape[0]:
            raise DimensionMismatch(f"H has {H.shape[0]} rows but D has {D.shape[0]}")
        if self.ridge_lambda < 0 or not np.isfinite(self.ridge_lambda):
            raise ValueError(f"ridge_lambda must be finite and >= 0, got {self.ridge_lambda}")
        if not (np.all(np.isfinite(H)) and np.all(np.isfinite(D))):
            raise NonFiniteEntries("system contains non-finite entries")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "D", D)


def rank_tolerance(s: np.ndarray, shape: tuple) -> float:
    """eps * sigma_max * max(rows, cols)."""
    if s.size == 0:
        return 0.0
    return float(np.finfo(np.float64).eps * s[0] * max(shape))


def _svd(H: np.ndarray):
    try:
        return np.linalg.svd(H, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc


def pinv(H) -> np.ndarray:
    """Moore-Penrose pseudoinverse via thin SVD."""
    H = _as_2d(H)
    if not np.all(np.isfinite(H)):
        raise NonFiniteEntries("matrix contains non-finite entries")
    U, s, Vt = _svd(H)
    keep = s > rank_tolerance(s, H.shape)
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


def solve_min_norm(sys: LinearSystem) -> np.ndarray:
    """Output weights beta (L x m) for ``H beta ~= D``."""
    H, D = sys.H, sys.D
    if sys.ridge_lambda > 0:
        A = H.T @ H + sys.ridge_lambda * np.eye(H.shape[1])
        try:
            return np.linalg.solve(A, H.T @ D)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(f"ridge normal equations are singular: {exc}") from exc
    U, s, Vt = _svd(H)
    keep = s > rank_tolerance(s, H.shape)
    # beta = V S^-1 U^T D restricted to the numerical range
    return Vt[keep].T @ ((U[:, keep].T @ D) / s[keep, None])


def residual_norm(sys: LinearSystem, beta) -> float:
    beta = _as_2d(beta)
    if beta.shape != (sys.H.shape[1], sys.D.shape[1]):
        raise DimensionMismatch(
            f"beta has shape {beta.shape}, expected {(sys.H.shape[1], sys.D.shape[1])}"
        )
    return float(np.linalg.norm(sys.H @ beta - sys.D))
