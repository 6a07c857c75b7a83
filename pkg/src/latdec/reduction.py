"""Lattice basis reduction with an iteration bound and a condition gate.

The reducer is floating-point LLL over basis columns with the unimodular
transform tracked exactly in arbitrary-precision integers, so
reduced = input @ Z holds with |det Z| = 1 checkable over the integers.
A closed-form bound on the number of swap steps (quadratic in dimension,
logarithmic in the condition number) backs both the pathology guard and
the run-time gate: bases whose condition number exceeds rho^alpha are
refused outright, which is what keeps worst-case decode complexity
polynomially bounded in the signal level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import IterationOverflow
from .lattice import round_half_away_from_zero
from .numkernel import as_matrix, condition_number_2norm, qr_decompose

__all__ = [
    "ReducedBasis",
    "GateOutcome",
    "lll_reduce",
    "is_lll_reduced",
    "iteration_bound",
    "iteration_bound_for_kappa",
    "gated_reduce",
    "gate_exponent_default",
    "integer_det",
    "orthogonality_defect",
]

#: Base of the swap-count bound: each swap shrinks a Gram-Schmidt potential
#: by at least 2/sqrt(3) when delta = 3/4.
_BOUND_BASE = 2.0 / math.sqrt(3.0)

#: Absolute slack on the swap test; prevents cycling on exact ties.
_SWAP_SLACK = 1e-12

#: Slack accepted by the reducedness checker.
_CHECK_SLACK = 1e-9


@dataclass
class ReducedBasis:
    """LLL output: reduced = original @ unimodular (exact integer Z)."""

    reduced: np.ndarray        # (n, n) float64 columns
    unimodular: np.ndarray     # (n, n) object array of Python ints
    iterations: int            # swap steps performed
    size_reductions: int       # nonzero size-reduction steps
    delta: float


@dataclass
class GateOutcome:
    """Result of a gated reduction: a basis, or a refusal (timeout)."""

    basis: ReducedBasis | None
    timed_out: bool
    kappa: float
    threshold: float


def _gso(b: np.ndarray):
    """Modified Gram-Schmidt coefficients mu and squared norms of the
    orthogonalized columns."""
    n = b.shape[1]
    mu = np.zeros((n, n))
    bstar = np.zeros_like(b)
    bsq = np.zeros(n)
    for i in range(n):
        v = b[:, i].copy()
        for j in range(i):
            mu[i, j] = (v @ bstar[:, j]) / bsq[j]
            v -= mu[i, j] * bstar[:, j]
        bstar[:, i] = v
        bsq[i] = float(v @ v)
    return mu, bsq


def lll_reduce(m, delta: float = 0.75, effective: bool = False,
               max_swaps: int | None = None) -> ReducedBasis:
    """LLL-reduce the columns of a full-rank matrix.

    delta must sit in (1/4, 1).  `effective` skips size reduction against
    non-adjacent columns (cheaper, weaker output).  `max_swaps` caps the
    swap count; when omitted the cap is ten times the closed-form bound,
    and exceeding the cap raises IterationOverflow.
    """
    m = as_matrix(m, "M")
    n = m.shape[1]
    if m.shape[0] != n:
        raise ValueError(f"basis matrix must be square, got {m.shape}")
    if not (0.25 < delta < 1.0):
        raise ValueError("delta must lie in (1/4, 1)")
    qr_decompose(m)  # full-rank check
    if max_swaps is None:
        max_swaps = 10 * iteration_bound(m)

    b = m.copy()
    z = np.empty((n, n), dtype=object)
    z[:] = 0
    for i in range(n):
        z[i, i] = 1
    mu, bsq = _gso(b)
    swaps = 0
    size_reds = 0

    def size_reduce(k: int, j: int):
        nonlocal size_reds
        r = float(round_half_away_from_zero(mu[k, j]))
        if r == 0.0:
            return
        ri = int(r)
        b[:, k] -= r * b[:, j]
        z[:, k] = z[:, k] - ri * z[:, j]
        mu[k, :j] -= r * mu[j, :j]
        mu[k, j] -= r
        size_reds += 1

    k = 1
    while k < n:
        size_reduce(k, k - 1)
        mukk = mu[k, k - 1]
        if delta * bsq[k - 1] > bsq[k] + mukk * mukk * bsq[k - 1] + _SWAP_SLACK:
            swaps += 1
            if swaps > max_swaps:
                raise IterationOverflow(
                    f"swap count exceeded budget {max_swaps}"
                )
            # Exchange columns k-1, k and patch the Gram-Schmidt data in
            # place (standard O(n) update).
            b[:, [k - 1, k]] = b[:, [k, k - 1]]
            z[:, [k - 1, k]] = z[:, [k, k - 1]]
            bnew = bsq[k] + mukk * mukk * bsq[k - 1]
            mu_new = mukk * bsq[k - 1] / bnew
            bsq[k] = bsq[k - 1] * bsq[k] / bnew
            bsq[k - 1] = bnew
            if k >= 2:
                row = mu[k - 1, :k - 1].copy()
                mu[k - 1, :k - 1] = mu[k, :k - 1]
                mu[k, :k - 1] = row
            mu[k, k - 1] = mu_new
            for i in range(k + 1, n):
                t = mu[i, k]
                mu[i, k] = mu[i, k - 1] - mukk * t
                mu[i, k - 1] = t + mu_new * mu[i, k]
            k = max(k - 1, 1)
        else:
            if not effective:
                for j in range(k - 2, -1, -1):
                    size_reduce(k, j)
            k += 1
    return ReducedBasis(reduced=b, unimodular=z, iterations=swaps,
                        size_reductions=size_reds, delta=delta)


def is_lll_reduced(m, delta: float = 0.75) -> tuple[bool, str | None]:
    """Check size reduction and the exchange condition on the columns of M.

    Returns (True, None) or (False, description of the first violation)."""
    m = as_matrix(m, "M")
    n = m.shape[1]
    if not (0.25 < delta < 1.0):
        raise ValueError("delta must lie in (1/4, 1)")
    mu, bsq = _gso(m)
    for i in range(n):
        for j in range(i):
            if abs(mu[i, j]) > 0.5 + _CHECK_SLACK:
                return False, f"size reduction violated at (i={i}, j={j}): |mu|={abs(mu[i, j]):.6g}"
    for k in range(1, n):
        lhs = delta * bsq[k - 1]
        rhs = bsq[k] + mu[k, k - 1] ** 2 * bsq[k - 1]
        if lhs > rhs + _CHECK_SLACK * bsq[k - 1] + _SWAP_SLACK:
            return False, f"exchange condition violated at k={k}"
    return True, None


def iteration_bound_for_kappa(kappa: float, n: int) -> int:
    """Closed-form swap-count cap for an n-dim basis with condition number
    kappa: ceil(n^2 log_{2/sqrt(3)} kappa + n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (kappa >= 1.0):
        raise ValueError("kappa must be >= 1")
    if math.isinf(kappa):
        raise ValueError("kappa must be finite")
    return math.ceil(n * n * math.log(kappa) / math.log(_BOUND_BASE) + n)


def iteration_bound(m) -> int:
    """Swap-count cap evaluated at the actual condition number of M."""
    m = as_matrix(m, "M")
    return iteration_bound_for_kappa(condition_number_2norm(m), m.shape[1])


def gate_exponent_default(d_target: float) -> float:
    """Default gate exponent for a target diversity slope: the smallest
    exponent that keeps the gate harmless, (d_target + 1)/2, plus a 0.5
    safety margin."""
    if d_target < 0.0:
        raise ValueError("d_target must be nonnegative")
    return (d_target + 1.0) / 2.0 + 0.5


def gated_reduce(m, rho: float, alpha: float, delta: float = 0.75) -> GateOutcome:
    """Reduce M unless its condition number exceeds rho^alpha.

    Over-threshold bases are refused without touching the swap loop; under
    the threshold the swap budget is the closed-form cap evaluated at the
    threshold itself, so run time stays polynomial in log rho regardless
    of the instance.
    """
    m = as_matrix(m, "M")
    if not (rho > 0.0):
        raise ValueError("rho must be positive")
    kappa = condition_number_2norm(m)
    threshold = float(rho**alpha)
    if kappa > threshold:
        return GateOutcome(basis=None, timed_out=True, kappa=kappa,
                           threshold=threshold)
    cap = iteration_bound_for_kappa(max(threshold, 1.0), m.shape[1])
    try:
        basis = lll_reduce(m, delta=delta, max_swaps=cap)
    except IterationOverflow:
        return GateOutcome(basis=None, timed_out=True, kappa=kappa,
                           threshold=threshold)
    return GateOutcome(basis=basis, timed_out=False, kappa=kappa,
                       threshold=threshold)


def integer_det(z) -> int:
    """Exact determinant of an integer matrix (fraction-free elimination)."""
    a = [[int(x) for x in row] for row in np.asarray(z)]
    n = len(a)
    if n == 0:
        return 1
    if any(len(row) != n for row in a):
        raise ValueError("matrix must be square")
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def orthogonality_defect(m) -> float:
    """Product of column norms over |det|; 1 iff the columns are
    orthogonal, larger as they grow more skewed."""
    m = as_matrix(m, "M")
    _, r = qr_decompose(m)
    absdet = float(np.prod(np.diag(r)))
    norms = np.sqrt(np.sum(m * m, axis=0))
    return float(np.prod(norms)) / absdet
