# sov6v/numerics.py
"""Small dense linear-algebra and root-finding helpers."""

import logging
from collections.abc import Callable, Iterable, Sequence

import numpy as np
import scipy.linalg as sla
from joblib import Parallel, delayed

from sov6v.config import thread_count

logger = logging.getLogger(__name__)


def max_norm(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def scaled_residual(lhs, rhs) -> float:
    """max|lhs - rhs| relative to the larger of the two operands."""
    scale = max(max_norm(lhs), max_norm(rhs), 1e-300)
    return max_norm(np.asarray(lhs) - np.asarray(rhs)) / scale


def lu_det(mat: np.ndarray, label: str = "") -> complex:
    """Determinant through LU with partial pivoting; logs the condition number."""
    mat = np.asarray(mat, dtype=complex)
    if mat.shape == (0, 0):
        return 1.0 + 0j
    lu, piv = sla.lu_factor(mat, check_finite=False)
    swaps = int(np.sum(piv != np.arange(len(piv))))
    det = complex(np.prod(np.diag(lu)) * (-1) ** swaps)
    if logger.isEnabledFor(logging.DEBUG):
        logger.debug("det%s cond=%.3e", f"[{label}]" if label else "", np.linalg.cond(mat))
    return det


def null_vector(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Right singular vector of the smallest singular value, plus all singular values."""
    _, s, vh = sla.svd(np.asarray(mat, dtype=complex))
    return vh[-1].conj(), s


def numerical_rank(mat: np.ndarray, rtol: float = 1e-10) -> int:
    s = sla.svdvals(np.asarray(mat, dtype=complex))
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def collinearity(u: np.ndarray, v: np.ndarray) -> float:
    """1 - |<u, v>| / (|u| |v|); zero for parallel vectors."""
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 1.0
    return float(abs(1.0 - abs(np.vdot(u, v)) / (nu * nv)))


def damped_newton(
    func: Callable[[np.ndarray], np.ndarray],
    jac: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    tol: float = 1e-13,
    max_iter: int = 60,
) -> tuple[np.ndarray, bool, int]:
    """Newton with backtracking on |f|. Returns (x, converged, iterations)."""
    x = np.array(x0, dtype=complex)
    fx = func(x)
    norm = np.linalg.norm(fx)
    for it in range(1, max_iter + 1):
        try:
            step = np.linalg.solve(jac(x), fx)
        except np.linalg.LinAlgError:
            return x, False, it
        lam = 1.0
        while lam > 1e-6:
            trial = x - lam * step
            ft = func(trial)
            nt = np.linalg.norm(ft)
            if np.isfinite(nt) and nt < norm:
                break
            lam *= 0.5
        else:
            return x, norm < tol, it
        x, fx, norm = trial, ft, nt
        if norm < tol or np.linalg.norm(lam * step) < tol * (1 + np.linalg.norm(x)):
            return x, True, it
    return x, norm < tol, max_iter


def newton_scalar(
    func: Callable[[complex], complex],
    deriv: Callable[[complex], complex],
    z0: complex,
    tol: float = 1e-14,
    max_iter: int = 50,
) -> tuple[complex, bool]:
    z = complex(z0)
    for _ in range(max_iter):
        d = deriv(z)
        if d == 0:
            return z, False
        step = func(z) / d
        z -= step
        if abs(step) < tol * (1 + abs(z)):
            return z, True
    return z, False


def complex_derivative(func: Callable[[complex], complex], z: complex, h: float = 1e-6) -> complex:
    """Central difference along the real axis (func holomorphic)."""
    return (func(z + h) - func(z - h)) / (2 * h)


def dedupe(points: Sequence[np.ndarray], threshold: float) -> list[np.ndarray]:
    kept: list[np.ndarray] = []
    for p in points:
        if all(np.max(np.abs(p - q)) > threshold for q in kept):
            kept.append(p)
    return kept


def parallel_map(fn: Callable, items: Iterable, threads: int | None = None) -> list:
    """Ordered map over items with joblib threads."""
    items = list(items)
    n_jobs = thread_count() if threads is None else threads
    if n_jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    return Parallel(n_jobs=n_jobs, prefer="threads")(delayed(fn)(item) for item in items)
