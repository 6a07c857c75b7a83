"""Lattice code designs: shaping regions, codebook enumeration, scaling.

A design is a full-rank generator G (columns generate the lattice), a
bounded shaping region R centered at the origin, a coding duration T, and
an optional dither offset u.  The finite codebook at signal level rho and
multiplexing rate r is {phi G z + u : z integer} intersected with R, where
phi = rho^(-rT/n) shrinks the lattice as the rate grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceeded, RankDeficient
from .numkernel import (
    as_matrix,
    as_vector,
    qr_decompose,
    qr_decompose_full,
    solve_upper_triangular,
)

__all__ = [
    "ShapingRegion",
    "LatticeDesign",
    "Codebook",
    "round_half_away_from_zero",
    "scaling_factor",
    "enumerate_codebook",
    "codebook_size_estimate",
    "squarify_generator",
    "min_lattice_distance_nu",
    "pep_lower_bound",
    "random_dither",
]

#: Closed-set membership slack for region tests.
MEMBERSHIP_SLACK = 1e-12

#: Default cap on candidate lattice points per enumeration.
DEFAULT_ENUM_BUDGET = 10**7


def round_half_away_from_zero(x):
    """Round to nearest integer, ties away from zero (1.5 -> 2, -1.5 -> -2).

    This is the single rounding rule used everywhere a real coordinate is
    quantized to the integer grid, so replays are bit-deterministic.
    """
    x = np.asarray(x, dtype=np.float64)
    return np.copysign(np.floor(np.abs(x) + 0.5), x)


@dataclass(frozen=True)
class ShapingRegion:
    """Bounded region R cut out of R^n, centered at the origin.

    Either an axis-aligned box (per-axis half-widths) or a Euclidean ball
    (radius).  Membership is closed-set with a small slack so points that
    land exactly on the boundary are kept.
    """

    kind: str
    half_widths: np.ndarray | None = None
    radius: float | None = None

    def __post_init__(self):
        if self.kind == "box":
            hw = as_vector(self.half_widths, "half_widths")
            if hw.size == 0 or np.any(hw <= 0.0):
                raise ValueError("box half-widths must be positive")
            object.__setattr__(self, "half_widths", hw)
        elif self.kind == "ball":
            if self.radius is None or not (self.radius > 0.0) or not math.isfinite(self.radius):
                raise ValueError("ball radius must be positive and finite")
        else:
            raise ValueError(f"unknown region kind {self.kind!r}")

    @classmethod
    def box(cls, half_widths) -> "ShapingRegion":
        return cls(kind="box", half_widths=np.asarray(half_widths, dtype=np.float64))

    @classmethod
    def ball(cls, radius: float) -> "ShapingRegion":
        return cls(kind="ball", radius=float(radius))

    def contains(self, x, slack: float = MEMBERSHIP_SLACK) -> bool:
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "box":
            if x.shape[-1] != self.half_widths.shape[0]:
                raise ValueError("point dimension does not match box")
            return bool(np.all(np.abs(x) <= self.half_widths + slack))
        return bool(math.sqrt(float(x @ x)) <= self.radius + slack)

    def contains_many(self, pts: np.ndarray, slack: float = MEMBERSHIP_SLACK) -> np.ndarray:
        """Vectorized membership for an (N, n) array of points."""
        if self.kind == "box":
            return np.all(np.abs(pts) <= self.half_widths + slack, axis=1)
        return np.sqrt(np.sum(pts * pts, axis=1)) <= self.radius + slack

    def bounding_half_widths(self, n: int) -> np.ndarray:
        """Half-widths of the smallest axis-aligned box containing R."""
        if self.kind == "box":
            return self.half_widths
        return np.full(n, self.radius)

    def inradius(self) -> float:
        """Radius of the largest origin-centered ball inside R."""
        if self.kind == "box":
            return float(np.min(self.half_widths))
        return float(self.radius)

    def volume(self, n: int) -> float:
        if self.kind == "box":
            if self.half_widths.shape[0] != n:
                raise ValueError("box dimension mismatch")
            return float(np.prod(2.0 * self.half_widths))
        # Unit-ball volume pi^(n/2) / Gamma(n/2 + 1), scaled by radius^n.
        return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0) * self.radius**n


@dataclass
class LatticeDesign:
    """Full-rank generator + shaping region + coding duration + dither."""

    generator: np.ndarray
    region: ShapingRegion
    coding_duration: int = 1
    dither: np.ndarray | None = None

    def __post_init__(self):
        g = as_matrix(self.generator, "generator")
        n, k = g.shape
        if n != k:
            raise ValueError(f"generator must be square, got {g.shape}")
        qr_decompose(g)  # raises RankDeficient when singular
        self.generator = g
        if not isinstance(self.coding_duration, (int, np.integer)) or self.coding_duration < 1:
            raise ValueError("coding_duration must be an integer >= 1")
        self.coding_duration = int(self.coding_duration)
        if self.dither is not None:
            u = as_vector(self.dither, "dither")
            if u.shape[0] != n:
                raise ValueError("dither dimension does not match generator")
            self.dither = u
        if self.region.kind == "box" and self.region.half_widths.shape[0] != n:
            raise ValueError("region dimension does not match generator")

    @property
    def dimension(self) -> int:
        return self.generator.shape[0]

    def dither_or_zero(self) -> np.ndarray:
        if self.dither is None:
            return np.zeros(self.dimension)
        return self.dither


@dataclass
class Codebook:
    """Finite codebook: points[i] = scale * G @ coords[i] + dither."""

    points: np.ndarray  # (N, n) float64, lexicographically sorted
    coords: np.ndarray  # (N, n) int64 lattice coordinates
    scale: float

    def __post_init__(self):
        if self.points.shape[0] == 0:
            raise ValueError("codebook is empty")
        if self.points.shape != self.coords.shape:
            raise ValueError("points/coords shape mismatch")

    @property
    def size(self) -> int:
        return self.points.shape[0]


def scaling_factor(rho: float, r: float, t: int, n: int, integer_nesting: bool = False) -> float:
    """Lattice shrink factor phi = rho^(-r T / n).

    With integer_nesting=True the inverse scale is snapped to the nearest
    integer >= 1 (so the scaled lattice nests inside the base one).
    """
    if not (rho > 0.0):
        raise ValueError("rho must be positive")
    if r < 0.0:
        raise ValueError("r must be nonnegative")
    if t < 1 or n < 1:
        raise ValueError("t and n must be >= 1")
    if integer_nesting:
        inv = float(round_half_away_from_zero(rho ** (r * t / n)))
        return 1.0 / max(inv, 1.0)
    return float(rho ** (-r * t / n))


def _inverse_from_qr(m: np.ndarray) -> np.ndarray:
    """Inverse of a square full-rank matrix via its QR factors."""
    q, r = qr_decompose(m)
    n = m.shape[0]
    inv = np.zeros((n, n))
    qt = q.T
    for j in range(n):
        inv[:, j] = solve_upper_triangular(r, qt[:, j])
    return inv


def _iter_integer_box(lo: np.ndarray, hi: np.ndarray, budget: int):
    """Yield (chunk of integer vectors) covering the box [lo, hi], in
    odometer order, without materializing more than ~2^18 rows at once."""
    sizes = (hi - lo + 1).astype(np.int64)
    if np.any(sizes <= 0):
        return
    total = int(np.prod(sizes.astype(object)))
    if total > budget:
        raise BudgetExceeded(f"{total} candidate points exceed budget {budget}")
    n = lo.shape[0]
    strides = np.ones(n, dtype=np.int64)
    for i in range(n - 2, -1, -1):
        strides[i] = strides[i + 1] * sizes[i + 1]
    chunk = 1 << 18
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        z = lo[None, :] + (idx[:, None] // strides[None, :]) % sizes[None, :]
        yield z


def enumerate_codebook(design: LatticeDesign, phi: float,
                       budget: int = DEFAULT_ENUM_BUDGET) -> Codebook:
    """Exact finite codebook {phi G z + u} intersect R.

    Candidates come from the integer preimage of R's bounding box under
    phi G; membership is the closed-set region test.  Raises BudgetExceeded
    when the candidate count passes `budget`.
    """
    if not (phi > 0.0) or not math.isfinite(phi):
        raise ValueError("phi must be positive and finite")
    g = design.generator
    n = design.dimension
    u = design.dither_or_zero()
    a = phi * g
    ainv = _inverse_from_qr(a)
    hw = design.region.bounding_half_widths(n)
    center = -ainv @ u
    spread = np.abs(ainv) @ hw
    lo = np.ceil(center - spread - 1e-9).astype(np.int64)
    hi = np.floor(center + spread + 1e-9).astype(np.int64)
    kept_pts = []
    kept_z = []
    for z in _iter_integer_box(lo, hi, budget):
        pts = z.astype(np.float64) @ a.T + u
        mask = design.region.contains_many(pts)
        if np.any(mask):
            kept_pts.append(pts[mask])
            kept_z.append(z[mask])
    if not kept_pts:
        raise ValueError("codebook is empty for this design and scale")
    pts = np.concatenate(kept_pts, axis=0)
    zs = np.concatenate(kept_z, axis=0)
    # Canonical order: lexicographic by point coordinates.
    order = np.lexsort(pts.T[::-1])
    return Codebook(points=pts[order], coords=zs[order], scale=float(phi))


def codebook_size_estimate(design: LatticeDesign, phi: float) -> float:
    """Volume estimate of the codebook size: phi^-n vol(R) / |det G|."""
    if not (phi > 0.0):
        raise ValueError("phi must be positive")
    n = design.dimension
    _, r = qr_decompose(design.generator)
    absdet = float(np.prod(np.diag(r)))
    return phi ** (-n) * design.region.volume(n) / absdet


def squarify_generator(g, h) -> tuple[np.ndarray, np.ndarray]:
    """Rewrite a non-square generator as a square one, preserving the
    channel-times-codeword map: H G z = H' G' z for all integer z.

    Tall G (n x k, k < n): G = U G' by thin QR, H' = H U.
    Wide G (k > n): append an orthonormal basis of the null space as extra
    rows and zero-pad H with matching columns.
    """
    g = as_matrix(g, "G")
    h = as_matrix(h, "H")
    n, k = g.shape
    if h.shape[1] != n:
        raise ValueError("H columns must match G rows")
    if k == n:
        qr_decompose(g)  # full-rank check
        return g, h
    if k < n:
        u, gp = qr_decompose(g)
        return gp, h @ u
    # k > n: G is wide; require full row rank.
    q_full, r_full = qr_decompose_full(g.T)
    diag = np.abs(np.diag(r_full[:n, :n]))
    fro = math.sqrt(float(np.sum(g * g)))
    if diag.size < n or float(np.min(diag)) < 1e-12 * fro:
        raise RankDeficient("wide generator does not have full row rank")
    extra_rows = q_full[:, n:].T  # orthonormal basis of null(G)
    g_ext = np.vstack([g, extra_rows])
    h_ext = np.hstack([h, np.zeros((h.shape[0], k - n))])
    return g_ext, h_ext


def min_lattice_distance_nu(h, design: LatticeDesign, phi: float,
                            gamma: float | None = None,
                            budget: int = DEFAULT_ENUM_BUDGET) -> float:
    """Minimum of ||H d||^2 / 4 over nonzero scaled-lattice points d with
    ||d|| <= gamma.  Returns +inf when the ball holds no nonzero point.

    gamma defaults to half the in-radius of the shaping region, the largest
    radius for which any two codeword difference vectors captured by the
    ball stay inside the region.
    """
    h = as_matrix(h, "H")
    n = design.dimension
    if h.shape[1] != n:
        raise ValueError("H columns must match design dimension")
    if gamma is None:
        gamma = 0.5 * design.region.inradius()
    if not (gamma > 0.0):
        raise ValueError("gamma must be positive")
    a = phi * design.generator
    ainv = _inverse_from_qr(a)
    # |z_i| <= gamma * ||row_i of (phi G)^-1|| over the gamma-ball.
    row_norms = np.sqrt(np.sum(ainv * ainv, axis=1))
    bound = np.floor(gamma * row_norms + 1e-9).astype(np.int64)
    lo, hi = -bound, bound
    best = math.inf
    gamma_sq = gamma * gamma * (1.0 + 1e-12)
    for z in _iter_integer_box(lo, hi, budget):
        nz = np.any(z != 0, axis=1)
        if not np.any(nz):
            continue
        d = z[nz].astype(np.float64) @ a.T
        inside = np.sum(d * d, axis=1) <= gamma_sq
        if not np.any(inside):
            continue
        hd = d[inside] @ h.T
        cand = 0.25 * float(np.min(np.sum(hd * hd, axis=1)))
        best = min(best, cand)
    return best


def pep_lower_bound(v: float) -> float:
    """Gaussian tail Q(sqrt(v)) for a squared half-distance v >= 0.

    v is ||H d||^2 / 4 for a codeword difference d; the returned value is
    the exact pairwise error probability floor for that difference.
    """
    if v < 0.0 or math.isnan(v):
        raise ValueError("v must be nonnegative")
    if math.isinf(v):
        return 0.0
    return 0.5 * math.erfc(math.sqrt(v) / math.sqrt(2.0))


def random_dither(generator, phi: float, rng) -> np.ndarray:
    """Dither drawn uniformly over the fundamental cell of the scaled
    lattice (draw once per experiment, never per trial)."""
    g = as_matrix(generator, "generator")
    frac = rng.random(g.shape[0])
    return phi * (g @ frac)
