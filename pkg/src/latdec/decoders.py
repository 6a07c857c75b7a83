"""Decoders for lattice codes over a linear Gaussian channel.

All decoders minimize (exactly or approximately) the regularized objective

    xi(x) = ||y - H x||^2 + (x - u)^T T (x - u)

over the dithered scaled lattice {phi G z + u}.  Completing the square
turns xi into ||F y_eff - B x_lat||^2 + Gamma with B upper triangular
(B^T B = H^T H + T), F = B^-T H^T, y_eff = y - H u, x_lat = x - u, and a
nonnegative constant Gamma; every decoder works on that triangular form.
The penalty term makes the objective well posed even when H is singular,
which is what separates the regularized decoders from the naive one.

Methods: exhaustive ML over the finite codebook, the exact regularized
sphere search, naive (epsilon-regularized) lattice decoding, and the two
reduction-aided approximations (nearest-plane / successive cancellation,
and componentwise rounding) whose metric blow-up is bounded by constants
depending only on the dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EnumerationOverflow, NearSingularChannel
from .lattice import (
    Codebook,
    LatticeDesign,
    ShapingRegion,
    enumerate_codebook,
    round_half_away_from_zero,
)
from .numkernel import (
    as_matrix,
    as_vector,
    cholesky_upper,
    qr_decompose,
    qr_decompose_full,
    singular_values,
    solve_lower_triangular,
    solve_upper_triangular,
)
from .reduction import GateOutcome, ReducedBasis, gated_reduce

__all__ = [
    "METHOD_ML",
    "METHOD_NAIVE",
    "METHOD_REG_EXACT",
    "METHOD_LR_SIC",
    "METHOD_LR_LINEAR",
    "METHODS",
    "GdfeFilters",
    "RegularizedProblem",
    "DecodeGate",
    "DecodeOutcome",
    "LatticeDecodeResult",
    "mmse_gdfe_filters",
    "gram_inverse_regularizer",
    "regularized_metric",
    "ml_decode",
    "sphere_decode_regularized",
    "naive_lattice_decode",
    "babai_nearest_plane",
    "lr_aided_linear",
    "approximation_ratio",
    "decode",
]

METHOD_ML = "ml"
METHOD_NAIVE = "naive"
METHOD_REG_EXACT = "reg_exact"
METHOD_LR_SIC = "lr_sic"
METHOD_LR_LINEAR = "lr_linear"
METHODS = (METHOD_ML, METHOD_NAIVE, METHOD_REG_EXACT, METHOD_LR_SIC,
           METHOD_LR_LINEAR)

#: Metric ties below this absolute gap are broken lexicographically.
TIE_TOLERANCE = 1e-12

DEFAULT_NODE_BUDGET = 10**8


@dataclass
class GdfeFilters:
    """Feedback matrix B (upper triangular, B^T B = H^T H + T) and the
    forward filter F = B^-T H^T."""

    b: np.ndarray
    f: np.ndarray


@dataclass
class DecodeGate:
    """Reduction-gate settings for the reduction-aided decoders."""

    alpha: float
    delta: float = 0.75


@dataclass(eq=False)
class _Prepared:
    filters: GdfeFilters
    y_eff: np.ndarray       # y - H u
    yprime: np.ndarray      # F y_eff
    gamma: float            # ||y_eff||^2 - ||F y_eff||^2 >= 0
    basis: np.ndarray       # B @ (phi G): lattice basis seen by the search


@dataclass(eq=False)
class RegularizedProblem:
    """One decode instance: received vector, channel, penalty matrix, and
    the scaled lattice generator (phi G) with optional dither."""

    y: np.ndarray
    h: np.ndarray
    t_reg: np.ndarray
    scaled_generator: np.ndarray
    dither: np.ndarray | None = None
    _prep: _Prepared | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.y = as_vector(self.y, "y")
        self.h = as_matrix(self.h, "H")
        self.t_reg = as_matrix(self.t_reg, "T")
        self.scaled_generator = as_matrix(self.scaled_generator, "scaled_generator")
        m, n = self.h.shape
        if self.y.shape[0] != m:
            raise ValueError("y length does not match H rows")
        if self.t_reg.shape != (n, n):
            raise ValueError("T must be n x n")
        if self.scaled_generator.shape != (n, n):
            raise ValueError("scaled generator must be n x n")
        if self.dither is not None:
            self.dither = as_vector(self.dither, "dither")
            if self.dither.shape[0] != n:
                raise ValueError("dither length does not match")

    @property
    def n(self) -> int:
        return self.h.shape[1]

    def dither_or_zero(self) -> np.ndarray:
        if self.dither is None:
            return np.zeros(self.n)
        return self.dither

    def prepared(self) -> _Prepared:
        if self._prep is None:
            filt = mmse_gdfe_filters(self.h, self.t_reg)
            y_eff = self.y - self.h @ self.dither_or_zero()
            yprime = filt.f @ y_eff
            gamma = float(y_eff @ y_eff) - float(yprime @ yprime)
            # Gamma is nonnegative in exact arithmetic; clamp roundoff.
            if gamma < 0.0:
                gamma = 0.0
            self._prep = _Prepared(filters=filt, y_eff=y_eff, yprime=yprime,
                                   gamma=gamma,
                                   basis=filt.b @ self.scaled_generator)
        return self._prep


@dataclass
class LatticeDecodeResult:
    """A decoded lattice point with its integer coordinates and metric."""

    coords: np.ndarray   # int64 coordinates z (point = phi G z + u)
    point: np.ndarray
    metric: float


@dataclass
class DecodeOutcome:
    """Pipeline verdict: a codeword, a lattice point outside the codebook,
    or a refusal (gate timeout)."""

    kind: str            # "codeword" | "out_of_codebook" | "timeout"
    point: np.ndarray | None
    coords: np.ndarray | None
    metric: float

    @classmethod
    def codeword(cls, point, coords, metric) -> "DecodeOutcome":
        return cls("codeword", point, coords, float(metric))

    @classmethod
    def out_of_codebook(cls, point, coords, metric) -> "DecodeOutcome":
        return cls("out_of_codebook", point, coords, float(metric))

    @classmethod
    def timeout(cls) -> "DecodeOutcome":
        return cls("timeout", None, None, math.inf)

    @property
    def is_codeword(self) -> bool:
        return self.kind == "codeword"


def mmse_gdfe_filters(h, t_reg) -> GdfeFilters:
    """Factor H^T H + T = B^T B and form the forward filter F = B^-T H^T.

    T must be symmetric positive definite; B's diagonal is positive."""
    h = as_matrix(h, "H")
    t_reg = as_matrix(t_reg, "T")
    n = h.shape[1]
    if t_reg.shape != (n, n):
        raise ValueError("T must match H columns")
    gram = h.T @ h + t_reg
    # Symmetrize against roundoff before factoring.
    gram = 0.5 * (gram + gram.T)
    b = cholesky_upper(gram)
    ht = h.T
    f = np.zeros((n, h.shape[0]))
    bt = b.T
    for j in range(h.shape[0]):
        f[:, j] = solve_lower_triangular(bt, ht[:, j])
    return GdfeFilters(b=b, f=f)


def gram_inverse_regularizer(g) -> np.ndarray:
    """Penalty matrix (G^T G)^-1, an alternative to the identity that
    penalizes integer coordinates instead of signal-space norm."""
    g = as_matrix(g, "G")
    q, r = qr_decompose(g)
    n = g.shape[0]
    ginv = np.zeros((n, n))
    qt = q.T
    for j in range(n):
        ginv[:, j] = solve_upper_triangular(r, qt[:, j])
    return ginv @ ginv.T


def regularized_metric(problem: RegularizedProblem, xhat) -> float:
    """Evaluate xi(xhat) both directly and through the triangular form and
    check they agree to 1e-8 relative (they are algebraically identical)."""
    xhat = as_vector(xhat, "xhat")
    u = problem.dither_or_zero()
    resid = problem.y - problem.h @ xhat
    xlat = xhat - u
    direct = float(resid @ resid) + float(xlat @ problem.t_reg @ xlat)
    prep = problem.prepared()
    alt_resid = prep.yprime - prep.filters.b @ xlat
    alt = float(alt_resid @ alt_resid) + prep.gamma
    if abs(direct - alt) > 1e-8 * (1.0 + abs(direct)):
        raise AssertionError(
            f"metric forms disagree: direct={direct!r} triangular={alt!r}"
        )
    return direct


def ml_decode(y, h, codebook: Codebook) -> DecodeOutcome:
    """Exhaustive maximum-likelihood decode over a finite codebook.

    Ties within 1e-12 in squared distance go to the lexicographically
    smallest codeword (the codebook is stored in that order)."""
    y = as_vector(y, "y")
    h = as_matrix(h, "H")
    resid = y[None, :] - codebook.points @ h.T
    dists = np.sum(resid * resid, axis=1)
    best = float(np.min(dists))
    idx = int(np.flatnonzero(dists <= best + TIE_TOLERANCE)[0])
    return DecodeOutcome.codeword(codebook.points[idx].copy(),
                                  codebook.coords[idx].copy(),
                                  float(dists[idx]))


def _babai_backsub(r: np.ndarray, ytil: np.ndarray) -> np.ndarray:
    """Nearest-plane integer coordinates by rounded back-substitution."""
    n = r.shape[0]
    z = np.zeros(n)
    for i in range(n - 1, -1, -1):
        c = (ytil[i] - r[i, i + 1:] @ z[i + 1:]) / r[i, i]
        z[i] = round_half_away_from_zero(c)
    return z


def _sign(x: float) -> float:
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


def _sphere_search(r: np.ndarray, ytil: np.ndarray, node_budget: int):
    """Exact closest-vector search on an upper-triangular system.

    Depth-first with zig-zag child ordering around the rounded center;
    children are visited in nondecreasing cost, so the first over-radius
    child prunes the whole level.  The search radius starts at the
    nearest-plane metric, which keeps the tree nonempty."""
    n = r.shape[0]
    zb = _babai_backsub(r, ytil)
    resid = ytil - r @ zb
    best_metric = float(resid @ resid)
    best_z = zb.copy()

    z = np.zeros(n)
    step = np.zeros(n)
    partial = np.zeros(n)      # ytil[i] - sum_{j>i} R[i,j] z[j]
    dist_above = np.zeros(n)   # cost contributed by levels above i
    nodes = 0

    i = n - 1
    partial[i] = ytil[i]
    dist_above[i] = 0.0
    center = partial[i] / r[i, i]
    z[i] = round_half_away_from_zero(center)
    step[i] = _sign(center - z[i]) or 1.0

    while True:
        nodes += 1
        if nodes > node_budget:
            raise EnumerationOverflow(f"sphere search exceeded {node_budget} nodes")
        diff = partial[i] - r[i, i] * z[i]
        cost = dist_above[i] + diff * diff
        if cost < best_metric:
            if i == 0:
                best_metric = cost
                best_z = z.copy()
                z[i] += step[i]
                step[i] = -step[i] - _sign(step[i])
            else:
                i -= 1
                dist_above[i] = cost
                partial[i] = ytil[i] - r[i, i + 1:] @ z[i + 1:]
                center = partial[i] / r[i, i]
                z[i] = round_half_away_from_zero(center)
                step[i] = _sign(center - z[i]) or 1.0
        else:
            # Every further sibling at this level costs at least as much.
            i += 1
            if i == n:
                break
            z[i] += step[i]
            step[i] = -step[i] - _sign(step[i])
    return best_z.astype(np.int64), best_metric


def sphere_decode_regularized(problem: RegularizedProblem,
                              node_budget: int = DEFAULT_NODE_BUDGET) -> LatticeDecodeResult:
    """Exact minimizer of the regularized objective over the full (infinite)
    dithered lattice, via sphere search on the triangular form."""
    prep = problem.prepared()
    q, r = qr_decompose(prep.basis)
    ytil = q.T @ prep.yprime
    z, dist = _sphere_search(r, ytil, node_budget)
    point = problem.scaled_generator @ z.astype(np.float64) + problem.dither_or_zero()
    return LatticeDecodeResult(coords=z, point=point,
                               metric=dist + prep.gamma)


def naive_lattice_decode(y, h, scaled_generator, region: ShapingRegion,
                         dither=None,
                         node_budget: int = DEFAULT_NODE_BUDGET) -> DecodeOutcome:
    """Unregularized closest-lattice-point decode.

    Internally a vanishing penalty epsilon * I (epsilon = 1e-12 ||H||_F^2)
    keeps the search well posed; the reported metric is the plain distance
    ||y - H x||^2.  Raises NearSingularChannel when the effective basis
    H (phi G) is numerically singular.  The decoded point is flagged
    out-of-codebook when it falls outside the shaping region: with no
    penalty term, deep fades regularly push the minimizer far outside."""
    y = as_vector(y, "y")
    h = as_matrix(h, "H")
    a = as_matrix(scaled_generator, "scaled_generator")
    if _min_singular_value(h @ a) < 1e-10:
        raise NearSingularChannel("sigma_min(H phi G) below 1e-10")
    eps = 1e-12 * float(np.sum(h * h))
    problem = RegularizedProblem(y=y, h=h, t_reg=eps * np.eye(h.shape[1]),
                                 scaled_generator=a, dither=dither)
    res = sphere_decode_regularized(problem, node_budget=node_budget)
    resid = y - h @ res.point
    metric = float(resid @ resid)
    if region.contains(res.point):
        return DecodeOutcome.codeword(res.point, res.coords, metric)
    return DecodeOutcome.out_of_codebook(res.point, res.coords, metric)


def _min_singular_value(a: np.ndarray) -> float:
    """Smallest singular value of a possibly rectangular map on R^n."""
    m, n = a.shape
    if m < n:
        return 0.0  # genuine null space: fewer observations than unknowns
    if m > n:
        # sigma(A) = sigma(R) for the full QR of a tall A.
        _, r = qr_decompose_full(a)
        a = r[:n, :]
    return float(singular_values(a)[-1])


def babai_nearest_plane(problem: RegularizedProblem,
                        reduced: ReducedBasis) -> LatticeDecodeResult:
    """Successive-cancellation decode on a reduced basis: QR, then one
    rounding per layer during back-substitution.  The metric is within a
    factor 2^(n/2) of the exact regularized minimum."""
    prep = problem.prepared()
    q, r = qr_decompose(reduced.reduced)
    ytil = q.T @ prep.yprime
    c = _babai_backsub(r, ytil)
    return _map_back(problem, prep, reduced, c)


def lr_aided_linear(problem: RegularizedProblem,
                    reduced: ReducedBasis) -> LatticeDecodeResult:
    """Linear decode on a reduced basis: solve the real system, round each
    coordinate (ties away from zero), map back through the unimodular
    transform.  The metric is within a factor 1 + 2n (9/2)^(n/2) of the
    exact regularized minimum."""
    prep = problem.prepared()
    q, r = qr_decompose(reduced.reduced)
    c_real = solve_upper_triangular(r, q.T @ prep.yprime)
    c = round_half_away_from_zero(c_real)
    return _map_back(problem, prep, reduced, c)


def _map_back(problem: RegularizedProblem, prep: _Prepared,
              reduced: ReducedBasis, c: np.ndarray) -> LatticeDecodeResult:
    resid = prep.yprime - reduced.reduced @ c
    metric = float(resid @ resid) + prep.gamma
    # Exact integer map through the unimodular transform.
    c_int = [int(v) for v in c]
    z = np.array(
        [sum(int(reduced.unimodular[i, j]) * c_int[j] for j in range(len(c_int)))
         for i in range(reduced.unimodular.shape[0])],
        dtype=np.int64,
    )
    point = problem.scaled_generator @ z.astype(np.float64) + problem.dither_or_zero()
    return LatticeDecodeResult(coords=z, point=point, metric=metric)


def approximation_ratio(problem: RegularizedProblem, candidate,
                        exact) -> float:
    """xi(candidate) / xi(exact), with 0/0 -> 1 and x/0 -> +inf."""
    xc = regularized_metric(problem, candidate)
    xe = regularized_metric(problem, exact)
    if xc < 1e-15 and xe < 1e-15:
        return 1.0
    if xe == 0.0:
        return math.inf
    return xc / xe


def decode(y, h, design: LatticeDesign, phi: float, method: str,
           rho: float | None = None, gate: DecodeGate | None = None,
           codebook: Codebook | None = None,
           t_reg: np.ndarray | None = None,
           node_budget: int = DEFAULT_NODE_BUDGET) -> DecodeOutcome:
    """One-shot decode pipeline for a design at scale phi.

    Builds the penalty (identity unless t_reg is given), the GDFE filters,
    and dispatches on `method`.  The reduction-aided methods require `rho`
    and `gate`; their basis is reduced through the condition gate and a
    refusal surfaces as a timeout outcome.  Lattice-decoder outputs are
    classified against the shaping region."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    y = as_vector(y, "y")
    h = as_matrix(h, "H")
    n = design.dimension
    if h.shape[1] != n:
        raise ValueError("H columns must match design dimension")
    scaled = phi * design.generator
    u = design.dither

    if method == METHOD_ML:
        if codebook is None:
            codebook = enumerate_codebook(design, phi)
        return ml_decode(y, h, codebook)

    if method == METHOD_NAIVE:
        return naive_lattice_decode(y, h, scaled, design.region, dither=u,
                                    node_budget=node_budget)

    if t_reg is None:
        t_reg = np.eye(n)
    problem = RegularizedProblem(y=y, h=h, t_reg=t_reg,
                                 scaled_generator=scaled, dither=u)

    if method == METHOD_REG_EXACT:
        res = sphere_decode_regularized(problem, node_budget=node_budget)
        return _classify(design, res)

    # Reduction-aided methods.
    if gate is None:
        raise ValueError("reduction-aided methods require gate settings")
    if rho is None:
        raise ValueError("reduction-aided methods require rho for the gate")
    outcome: GateOutcome = gated_reduce(problem.prepared().basis, rho,
                                        gate.alpha, delta=gate.delta)
    if outcome.timed_out:
        return DecodeOutcome.timeout()
    if method == METHOD_LR_SIC:
        res = babai_nearest_plane(problem, outcome.basis)
    else:
        res = lr_aided_linear(problem, outcome.basis)
    return _classify(design, res)


def _classify(design: LatticeDesign, res: LatticeDecodeResult) -> DecodeOutcome:
    if design.region.contains(res.point):
        return DecodeOutcome.codeword(res.point, res.coords, res.metric)
    return DecodeOutcome.out_of_codebook(res.point, res.coords, res.metric)
