"""Dense linear-algebra kernels: products, SVD, pseudoinverse, least squares.

Matrices are 2-d float64 numpy arrays in row-major order, vectors are 1-d.
All functions are pure and never alias their inputs. SVD, pseudoinverse and
the unconstrained solver are backed by LAPACK through numpy; the bounded
solver is a hand-written active-set method (Lawson-Hanson style) because we
need optional per-coordinate lower bounds and a checkable KKT certificate.
"""
from __future__ import annotations

import numpy as np

from .errors import NumericalError, ShapeError

DEFAULT_RCOND = 1e-10


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-d matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ShapeError("matrix entries must be finite")
    return m


def as_vector(v) -> np.ndarray:
    w = np.asarray(v, dtype=np.float64)
    if w.ndim != 1:
        raise ShapeError(f"expected a 1-d vector, got ndim={w.ndim}")
    if not np.all(np.isfinite(w)):
        raise ShapeError("vector entries must be finite")
    return w


def matmul(a, b) -> np.ndarray:
    """Exact dense product a @ b with explicit dimension checking."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dimensions differ ({a.shape} @ {b.shape})")
    return a @ b


def transpose(a) -> np.ndarray:
    return as_matrix(a).T.copy()


def svd(m) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD: m = U @ diag(S) @ Vt with S nonincreasing and nonnegative."""
    m = as_matrix(m)
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    return u, s, vt


def pinv(m, rcond: float = DEFAULT_RCOND) -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD.

    Singular values below rcond * S[0] are treated as exactly zero.
    """
    if rcond <= 0:
        raise ShapeError("rcond must be positive")
    m = as_matrix(m)
    u, s, vt = svd(m)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((m.shape[1], m.shape[0]))
    cutoff = rcond * s[0]
    inv_s = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
    return (vt.T * inv_s) @ u.T


def lstsq_min_norm(a, b, rcond: float = DEFAULT_RCOND) -> np.ndarray:
    """Minimum-norm minimizer of ||a x - b||_2, computed as pinv(a) @ b."""
    a = as_matrix(a)
    b = as_vector(b)
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"lstsq: a has {a.shape[0]} rows but b has {b.shape[0]}")
    return pinv(a, rcond) @ b


def kkt_residual(a, b, x, lower) -> float:
    """Max violation of the KKT conditions for min ||ax-b|| s.t. x_i >= lower_i.

    w = a^T (b - a x) is the negated gradient; stationarity requires w_i = 0
    for coordinates strictly above their bound (or unbounded) and w_i <= 0 at
    active bounds. Bound feasibility is included in the residual.
    """
    a = as_matrix(a)
    b = as_vector(b)
    x = as_vector(x)
    w = a.T @ (b - a @ x)
    res = 0.0
    for i in range(x.size):
        lo = lower[i]
        if lo is None:
            res = max(res, abs(w[i]))
        else:
            res = max(res, lo - x[i])
            if x[i] > lo + 1e-11:
                res = max(res, abs(w[i]))
            else:
                res = max(res, w[i])
    return float(res)


def lstsq_bounded(a, b, lower, rcond: float = DEFAULT_RCOND) -> np.ndarray:
    """Solve min ||a x - b||_2 subject to x_i >= lower_i where bounds exist.

    `lower` is a sequence of length a.cols whose entries are either None
    (unconstrained coordinate) or a finite lower limit. Active-set iteration:
    bounded coordinates start pinned at their bound, unbounded coordinates are
    always free. Raises NumericalError if the active set cycles beyond
    cols**2 iterations.
    """
    a = as_matrix(a)
    b = as_vector(b)
    n = a.shape[1]
    if len(lower) != n:
        raise ShapeError(f"bound vector has length {len(lower)}, expected {n}")
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"lstsq_bounded: a has {a.shape[0]} rows but b has {b.shape[0]}")
    bounded = np.array([lo is not None for lo in lower])
    if not bounded.any():
        return lstsq_min_norm(a, b, rcond)

    # Exactly-zero columns cannot affect the objective; give them the
    # minimum-norm feasible value instead of parking them at a bound.
    zero_cols = ~np.any(a != 0.0, axis=0)
    if zero_cols.any():
        x = np.zeros(n)
        for i in np.nonzero(zero_cols)[0]:
            lo = lower[i]
            if lo is not None and lo > 0.0:
                x[i] = lo
        keep = ~zero_cols
        if keep.any():
            x[keep] = lstsq_bounded(
                a[:, keep], b, [lower[i] for i in range(n) if keep[i]], rcond
            )
        return x

    lo_vec = np.array([0.0 if lo is None else float(lo) for lo in lower])
    for lo in lower:
        if lo is not None and not np.isfinite(lo):
            raise ShapeError("lower bounds must be finite where present")

    # Shift bounded coordinates so their bound sits at zero: x = u + l0.
    l0 = np.where(bounded, lo_vec, 0.0)
    b_shift = b - a @ l0

    free = ~bounded
    passive = free.copy()  # free coords live in the passive set permanently
    u = np.zeros(n)
    scale = max(1.0, float(np.abs(a.T @ b_shift).max(initial=0.0)))
    tol = 1e-12 * scale
    max_outer = max(8, n * n)

    def solve_passive(p_mask):
        z = np.zeros(n)
        if p_mask.any():
            z[p_mask] = lstsq_min_norm(a[:, p_mask], b_shift, rcond)
        return z

    # Passive set holds only free coordinates at the start, so the first
    # solve cannot violate any bound.
    u = solve_passive(passive)
    for _ in range(max_outer):
        w = a.T @ (b_shift - a @ u)
        w_active = np.where(bounded & ~passive, w, -np.inf)
        if w_active.max(initial=-np.inf) <= tol:
            break
        passive[int(np.argmax(w_active))] = True
        for _ in range(max_outer):
            z = solve_passive(passive)
            viol = passive & bounded & (z < -tol)
            if not viol.any():
                u = z
                break
            # Step back toward feasibility along u -> z, dropping a blocker.
            denom = u - z
            with np.errstate(divide="ignore", invalid="ignore"):
                alphas = np.where(viol & (denom > 0), u / denom, np.inf)
            alpha = alphas.min()
            if not np.isfinite(alpha):
                raise NumericalError("bounded least squares: degenerate step")
            u = u + alpha * (z - u)
            drop = passive & bounded & (u <= tol)
            u[drop] = 0.0
            passive[drop] = False
        else:
            raise NumericalError("bounded least squares: inner active-set cycle")
    else:
        raise NumericalError(
            f"bounded least squares: no convergence in {max_outer} active-set iterations"
        )

    x = u + l0
    np.maximum(x, np.where(bounded, lo_vec, -np.inf), out=x)
    return x
