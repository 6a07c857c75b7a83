"""Small dense linear-algebra kernel.

Everything downstream (filters, reduction, decoders) runs through the four
operations here: upper Cholesky, Householder QR, 2-norm condition number,
and triangular solves.  The factorizations are written out directly on
float64 numpy arrays rather than calling into numpy.linalg: problem sizes
are tiny (n <= ~32) and the test suite checks each routine against an
independent library oracle.

Conventions: a "matrix" is a 2-D float64 ndarray, a "vector" is 1-D.
NaN/Inf entries are rejected at every public entry point.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import (
    NotPositiveDefinite,
    NotSymmetric,
    RankDeficient,
    SingularTriangular,
)

__all__ = [
    "as_matrix",
    "as_vector",
    "cholesky_upper",
    "qr_decompose",
    "qr_decompose_full",
    "condition_number_2norm",
    "singular_values",
    "solve_upper_triangular",
    "solve_lower_triangular",
]


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float64 array (copy only if needed)."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if m.size and not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains NaN or Inf")
    return m


def as_vector(a, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-D float64 array."""
    v = np.asarray(a, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {v.shape}")
    if v.size and not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains NaN or Inf")
    return v


def cholesky_upper(a) -> np.ndarray:
    """Factor a symmetric positive definite A as U^T U with U upper
    triangular and positive diagonal.

    Raises NotSymmetric if A is asymmetric beyond 1e-10 relative, and
    NotPositiveDefinite if any pivot falls below 1e-14 * trace(A)/n.
    """
    a = as_matrix(a, "A")
    n, m = a.shape
    if n != m:
        raise ValueError(f"A must be square, got {a.shape}")
    if n == 0:
        return np.zeros((0, 0))
    fro = math.sqrt(float(np.sum(a * a)))
    if float(np.max(np.abs(a - a.T))) > 1e-10 * (1.0 + fro):
        raise NotSymmetric("A is not symmetric within 1e-10 relative")
    # Pivot floor guards against nearly semidefinite inputs.
    floor = 1e-14 * float(np.trace(a)) / n
    u = np.zeros((n, n))
    for i in range(n):
        pivot = a[i, i] - u[:i, i] @ u[:i, i]
        if pivot <= 0.0 or pivot < floor:
            raise NotPositiveDefinite(
                f"pivot {pivot:.3e} at row {i} below floor {floor:.3e}"
            )
        d = math.sqrt(pivot)
        u[i, i] = d
        if i + 1 < n:
            u[i, i + 1:] = (a[i, i + 1:] - u[:i, i] @ u[:i, i + 1:]) / d
    return u


def _householder(m: np.ndarray):
    """Householder QR returning full Q (rows x rows) and R (rows x cols)."""
    rows, cols = m.shape
    r = m.copy()
    q = np.eye(rows)
    for k in range(min(rows, cols)):
        x = r[k:, k]
        normx = math.sqrt(float(x @ x))
        if normx == 0.0:
            continue
        v = x.copy()
        # Sign choice avoids cancellation in the leading entry.
        v[0] += math.copysign(normx, x[0]) if x[0] != 0.0 else normx
        vnorm2 = float(v @ v)
        if vnorm2 == 0.0:
            continue
        w = (2.0 / vnorm2) * v
        r[k:, k:] -= np.outer(v, w @ r[k:, k:])
        q[:, k:] -= np.outer(q[:, k:] @ v, w)
    return q, r


def qr_decompose(m) -> tuple[np.ndarray, np.ndarray]:
    """Thin QR of M (rows >= cols, full column rank): M = Q R with
    orthonormal columns in Q and a positive diagonal on upper-triangular R.

    Raises RankDeficient when the smallest |R_ii| is below 1e-12 * ||M||_F.
    """
    m = as_matrix(m, "M")
    rows, cols = m.shape
    if rows < cols:
        raise ValueError(f"M must have rows >= cols, got {m.shape}")
    if cols == 0:
        return np.zeros((rows, 0)), np.zeros((0, 0))
    q_full, r_full = _householder(m)
    q = q_full[:, :cols].copy()
    r = np.triu(r_full[:cols, :])
    # Fix signs so every diagonal entry of R is positive.
    fro = math.sqrt(float(np.sum(m * m)))
    for i in range(cols):
        if r[i, i] < 0.0:
            r[i, :] = -r[i, :]
            q[:, i] = -q[:, i]
    if float(np.min(np.abs(np.diag(r)))) < 1e-12 * fro:
        raise RankDeficient("smallest |R_ii| below 1e-12 * ||M||_F")
    return q, r


def qr_decompose_full(m) -> tuple[np.ndarray, np.ndarray]:
    """Full QR of M: Q is square orthogonal, R is rows x cols upper
    trapezoidal.  No rank check; used for null-space construction."""
    m = as_matrix(m, "M")
    q, r = _householder(m)
    return q, np.triu(r)


def singular_values(m) -> np.ndarray:
    """All singular values of a square M, descending, via one-sided Jacobi.

    Column rotations drive M^T M to diagonal form; the column norms of the
    rotated matrix are the singular values.  Self-contained on purpose so
    the reduction gate does not depend on an external solver.
    """
    m = as_matrix(m, "M")
    n, cols = m.shape
    if n != cols:
        raise ValueError(f"M must be square, got {m.shape}")
    if n == 0:
        return np.zeros(0)
    a = m.copy()
    if n == 1:
        return np.array([abs(a[0, 0])])
    for _ in range(60):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                app = float(a[:, p] @ a[:, p])
                aqq = float(a[:, q] @ a[:, q])
                apq = float(a[:, p] @ a[:, q])
                if abs(apq) <= 1e-15 * math.sqrt(app * aqq) or apq == 0.0:
                    continue
                rotated = True
                tau = (aqq - app) / (2.0 * apq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                col_p = a[:, p].copy()
                a[:, p] = c * col_p - s * a[:, q]
                a[:, q] = s * col_p + c * a[:, q]
        if not rotated:
            break
    sv = np.sqrt(np.sum(a * a, axis=0))
    sv.sort()
    return sv[::-1]


def condition_number_2norm(m) -> float:
    """2-norm condition number sigma_max / sigma_min of a square M.

    Returns +inf when sigma_min underflows (below 1e-300)."""
    sv = singular_values(m)
    if sv.size == 0:
        return 1.0
    smin = float(sv[-1])
    smax = float(sv[0])
    if smin < 1e-300:
        return math.inf
    return smax / smin


def solve_upper_triangular(u, b) -> np.ndarray:
    """Back substitution for U x = b with U upper triangular.

    Raises SingularTriangular when any |U_ii| < 1e-14."""
    u = as_matrix(u, "U")
    b = as_vector(b, "b")
    n = u.shape[0]
    if u.shape[1] != n or b.shape[0] != n:
        raise ValueError("shape mismatch in triangular solve")
    if n and float(np.min(np.abs(np.diag(u)))) < 1e-14:
        raise SingularTriangular("|U_ii| below 1e-14")
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - u[i, i + 1:] @ x[i + 1:]) / u[i, i]
    return x


def solve_lower_triangular(l, b) -> np.ndarray:
    """Forward substitution for L x = b with L lower triangular."""
    l = as_matrix(l, "L")
    b = as_vector(b, "b")
    n = l.shape[0]
    if l.shape[1] != n or b.shape[0] != n:
        raise ValueError("shape mismatch in triangular solve")
    if n and float(np.min(np.abs(np.diag(l)))) < 1e-14:
        raise SingularTriangular("|L_ii| below 1e-14")
    x = np.zeros(n)
    for i in range(n):
        x[i] = (b[i] - l[i, :i] @ x[:i]) / l[i, i]
    return x
