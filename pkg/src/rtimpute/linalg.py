"""Small dense linear-algebra helpers shared by imputation and estimation."""

from __future__ import annotations

import numpy as np

from .errors import SingularGivenBlock

#: Relative pivot threshold below which a covariance block is treated as singular.
SINGULAR_PIVOT_RTOL = 1e-10


def checked_cholesky(a: np.ndarray, rtol: float = SINGULAR_PIVOT_RTOL) -> np.ndarray:
    """Lower Cholesky factor of `a`, raising SingularGivenBlock on tiny pivots.

    The pivot at step j equals L[j, j]^2; a pivot below rtol * max(diag(a))
    signals a numerically singular observed-block covariance.
    """
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return np.empty((0, 0))
    tol = rtol * float(np.max(np.diag(a)))
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise SingularGivenBlock(
            "observed-block covariance is not positive definite"
        ) from None
    if float(np.min(np.diag(chol)) ** 2) < tol:
        raise SingularGivenBlock(
            f"observed-block covariance pivot below {rtol:g} * max diagonal"
        )
    return chol


def cho_solve(chol: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve (L L^T) x = b given the lower factor L."""
    from scipy.linalg import solve_triangular

    y = solve_triangular(chol, b, lower=True)
    return solve_triangular(chol.T, y, lower=False)


def min_semidefinite_pivot(a: np.ndarray) -> float:
    """Smallest pivot of an unpivoted outer-product sweep of symmetric `a`.

    Runs the LDL-style elimination used to certify positive semidefiniteness:
    a non-positive pivot is skipped (its column is treated as exactly zero, as
    PSD structure requires) so later pivots stay meaningful. The returned
    minimum is >= 0 for a PSD matrix up to rounding.
    """
    a = np.array(a, dtype=float, copy=True)
    p = a.shape[0]
    smallest = np.inf
    for j in range(p):
        d = a[j, j]
        smallest = min(smallest, d)
        if d <= 0.0:
            continue
        col = a[j + 1 :, j]
        a[j + 1 :, j + 1 :] -= np.outer(col, col) / d
    return float(smallest) if p else 0.0
