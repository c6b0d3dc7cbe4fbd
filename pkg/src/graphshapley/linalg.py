"""Dense weighted least squares and finite-difference utilities.

Everything operates on float64 numpy arrays. Matrices are small (a few
hundred columns at most), so a normal-equation solve with a Cholesky-style
factorization is both fast and accurate enough.
"""

from collections.abc import Callable

import numpy as np

from .errors import SingularSystem

# Condition estimate above which the regularized normal matrix is treated
# as rank-deficient.
_COND_LIMIT = 1e12

# One-shot ridge added before giving up on a rank-deficient system.
_FALLBACK_RIDGE = 1e-8


def wls_solve(
    design: np.ndarray,
    targets: np.ndarray,
    weights: np.ndarray,
    ridge: float = 0.0,
) -> np.ndarray:
    """Solve the weighted ridge least-squares problem.

    Minimizes ``sum_i w_i (design_i . x - targets_i)^2 + ridge * ||x||^2``
    via the normal equations. If the normal matrix is numerically singular,
    a single fallback ridge of 1e-8 is added; if that still fails,
    SingularSystem is raised.
    """
    design = np.asarray(design, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if design.ndim != 2:
        raise ValueError("design must be a 2-D matrix")
    p, m = design.shape
    if p < 1 or m < 1:
        raise ValueError("design must have at least one row and one column")
    if targets.shape != (p,):
        raise ValueError("targets length must match design rows")
    if weights.shape != (p,):
        raise ValueError("weights length must match design rows")
    if not np.all(np.isfinite(weights)) or np.any(weights < 0):
        raise ValueError("weights must be finite and nonnegative")
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")

    wd = design * weights[:, None]
    normal = wd.T @ design
    rhs = wd.T @ targets

    for extra in (0.0, _FALLBACK_RIDGE):
        a = normal + (ridge + extra) * np.eye(m)
        if _condition_estimate(a) <= _COND_LIMIT:
            coef = np.linalg.solve(a, rhs)
            if np.all(np.isfinite(coef)):
                return coef
    raise SingularSystem(
        f"normal matrix condition estimate exceeds {_COND_LIMIT:g}"
    )


def _condition_estimate(a: np.ndarray) -> float:
    """2-norm condition estimate of a symmetric matrix via eigenvalues."""
    eig = np.linalg.eigvalsh(a)
    smallest = np.min(np.abs(eig))
    if smallest == 0.0:
        return np.inf
    return float(np.max(np.abs(eig)) / smallest)


def finite_diff_grad(
    f: Callable[[np.ndarray], float],
    x: np.ndarray,
    h: float = 1e-5,
) -> np.ndarray:
    """Central-difference gradient of a scalar function, one call pair per coordinate."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=np.float64)
    grad = np.empty_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step.flat[i] = h
        grad.flat[i] = (f(x + step) - f(x - step)) / (2.0 * h)
    return grad
