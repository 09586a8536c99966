"""Spaces, reference measures, grids and quadrature.

Two kinds of spaces are supported:

* the sphere ``P^1`` carrying a weighted divisor (a list of marked points
  with rational weights ``0 < c < 1``), and
* a full-dimensional lattice polytope with the origin in its interior,
  standing for a toric variety via its moment polytope.

All radial work on the sphere uses the moment coordinate

    t = |z|^2 / (1 + |z|^2)  in  [0, 1],

in which the round (Fubini-Study) probability measure is exactly
``dt dtheta / 2pi``.  A pair with weights ``c0`` at ``z = 0`` and ``c1`` at
``z = infinity`` has reference probability measure

    dV = t^(-c0) (1 - t)^(-c1) dt dtheta / (2pi B(1-c0, 1-c1)),

a Beta profile in ``t``.  Grid-level integrals against dV are driven by
exact per-cell masses (regularized incomplete Beta differences), so the
singular pole factors never have to be evaluated at the pole nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as _cartesian
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import betainc, betaln

__all__ = [
    "SpherePoint",
    "LogSphere",
    "ToricFano",
    "RadialGrid",
    "ReferenceData",
    "RadialGeometry",
    "quadrature",
    "integrate_function",
    "lattice_points",
    "reference_density",
    "build_radial_geometry",
]


class NonKltError(ValueError):
    """Raised when a marked-point weight falls outside (0, 1)."""


# ---------------------------------------------------------------------------
# Points on the sphere


@dataclass(frozen=True)
class SpherePoint:
    """A point of the sphere in moment coordinates (t, theta).

    t = 0 is the origin of the affine chart (z = 0), t = 1 the point at
    infinity.  theta is only meaningful for 0 < t < 1.
    """

    t: float
    theta: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.t <= 1.0) or not math.isfinite(self.theta):
            raise ValueError(f"invalid sphere point (t={self.t}, theta={self.theta})")

    @staticmethod
    def from_complex(z: complex) -> "SpherePoint":
        r2 = abs(z) ** 2
        if math.isinf(r2):
            return SpherePoint(1.0, 0.0)
        return SpherePoint(r2 / (1.0 + r2), math.atan2(z.imag, z.real))

    @staticmethod
    def infinity() -> "SpherePoint":
        return SpherePoint(1.0, 0.0)

    def xyz(self) -> np.ndarray:
        """Unit vector in R^3; t = 0 maps to the north pole (0,0,1)."""
        cosphi = 1.0 - 2.0 * self.t
        sinphi = 2.0 * math.sqrt(max(self.t * (1.0 - self.t), 0.0))
        return np.array(
            [sinphi * math.cos(self.theta), sinphi * math.sin(self.theta), cosphi]
        )

    @property
    def is_origin_pole(self) -> bool:
        return self.t == 0.0

    @property
    def is_infinity_pole(self) -> bool:
        return self.t == 1.0


def chordal_sq_quarter(p: SpherePoint, q: SpherePoint) -> float:
    """(chordal distance / 2)^2 between two sphere points, in [0, 1].

    Equals the Fubini-Study norm squared of the degree-one section pinned
    at q, evaluated at p.
    """
    d = p.xyz() - q.xyz()
    return float(np.dot(d, d)) / 4.0


# ---------------------------------------------------------------------------
# The sphere with a weighted divisor


@dataclass(frozen=True)
class LogSphere:
    """The sphere with marked points and rational weights in (0, 1).

    ``anticanonical_degree`` is 2 - sum(weights); it is positive for the
    attractive-regime experiments and may be negative when the weights
    exceed 2 (the repulsive pluricanonical regime).
    """

    log_points: tuple[tuple[SpherePoint, Fraction], ...] = ()

    def __post_init__(self):
        pts = []
        for p, c in self.log_points:
            c = Fraction(c)
            if not (0 < c < 1):
                raise NonKltError(f"non-klt pair: weight {c} outside (0, 1)")
            pts.append(p)
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if chordal_sq_quarter(pts[i], pts[j]) == 0.0:
                    raise ValueError("marked points must be pairwise distinct")
        object.__setattr__(
            self,
            "log_points",
            tuple((p, Fraction(c)) for p, c in self.log_points),
        )

    @property
    def weights(self) -> tuple[Fraction, ...]:
        return tuple(c for _, c in self.log_points)

    @property
    def anticanonical_degree(self) -> Fraction:
        return Fraction(2) - sum(self.weights, Fraction(0))

    @property
    def is_polar(self) -> bool:
        """True when every marked point sits at t = 0 or t = 1."""
        return all(p.is_origin_pole or p.is_infinity_pole for p, _ in self.log_points)

    def pole_weights(self) -> tuple[Fraction, Fraction]:
        """Weights at t = 0 and t = 1 (zero if unmarked); requires is_polar."""
        if not self.is_polar:
            raise ValueError("space has marked points away from the poles")
        c0 = c1 = Fraction(0)
        for p, c in self.log_points:
            if p.is_origin_pole:
                c0 = c
            else:
                c1 = c
        return c0, c1

    def level_is_admissible(self, k: int) -> bool:
        """Whether k clears every weight denominator (k * c integral)."""
        return all((k * c).denominator == 1 for c in self.weights)

    def log_density_uniform(self, points_t: np.ndarray, points_theta: np.ndarray) -> np.ndarray:
        """log of dV/dsigma (sigma = uniform) up to an additive constant.

        Vectorized over sphere points given as (t, theta) arrays; the
        normalizing constant is configuration-independent and cancels in
        Metropolis ratios.
        """
        out = np.zeros_like(points_t, dtype=float)
        for p, c in self.log_points:
            if p.is_origin_pole:
                h = points_t
            elif p.is_infinity_pole:
                h = 1.0 - points_t
            else:
                # (chord/2)^2 to the marked point, in moment coordinates
                tt, th = points_t, points_theta
                s = p.t
                h = (
                    tt * (1.0 - s)
                    + s * (1.0 - tt)
                    - 2.0 * np.sqrt(tt * (1.0 - tt) * s * (1.0 - s))
                    * np.cos(th - p.theta)
                )
            with np.errstate(divide="ignore"):
                out = out - float(c) * np.log(h)
        return out


def football(c0, c1=None) -> LogSphere:
    """Pair with weights at the two poles (equal weights if c1 is omitted)."""
    c0 = Fraction(c0)
    c1 = c0 if c1 is None else Fraction(c1)
    return LogSphere(
        ((SpherePoint(0.0), c0), (SpherePoint.infinity(), c1))
    )


def round_sphere() -> LogSphere:
    return LogSphere(())


# ---------------------------------------------------------------------------
# Lattice polytopes


def _primitive(v: tuple[int, ...]) -> tuple[int, ...]:
    g = 0
    for x in v:
        g = math.gcd(g, abs(x))
    if g == 0:
        raise ValueError("zero vector has no primitive representative")
    return tuple(x // g for x in v)


def _exact_facet_normal(verts: list[tuple[int, ...]]) -> tuple[int, ...]:
    """Primitive integer normal of the affine span of n points in Z^n."""
    n = len(verts[0])
    rows = [
        [Fraction(verts[i + 1][j] - verts[0][j]) for j in range(n)]
        for i in range(len(verts) - 1)
    ]
    # kernel of the (n-1) x n difference matrix by Gaussian elimination
    mat = [row[:] for row in rows]
    piv_cols = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, len(mat)) if mat[i][c] != 0), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        lead = mat[r][c]
        mat[r] = [x / lead for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        piv_cols.append(c)
        r += 1
    free = [c for c in range(n) if c not in piv_cols]
    if len(free) != 1:
        raise ValueError("facet vertex set is degenerate")
    fc = free[0]
    sol = [Fraction(0)] * n
    sol[fc] = Fraction(1)
    for i, pc in enumerate(piv_cols):
        sol[pc] = -mat[i][fc]
    den = math.lcm(*(x.denominator for x in sol))
    ints = tuple(int(x * den) for x in sol)
    return _primitive(ints)


@dataclass(frozen=True)
class ToricFano:
    """Full-dimensional lattice polytope with 0 in its interior.

    ``facet_normals`` lists (primitive inward normal u, offset b) with the
    polytope cut out by <x, u> >= -b; the polytope is reflexive when every
    offset equals 1.
    """

    dimension: int
    vertices: tuple[tuple[int, ...], ...]
    facet_normals: tuple[tuple[tuple[int, ...], int], ...] = field(init=False)

    def __post_init__(self):
        verts = tuple(tuple(int(x) for x in v) for v in self.vertices)
        if any(len(v) != self.dimension for v in verts):
            raise ValueError("vertex dimension mismatch")
        object.__setattr__(self, "vertices", verts)
        facets = self._compute_facets()
        object.__setattr__(self, "facet_normals", facets)
        if any(b <= 0 for _, b in facets):
            raise ValueError("origin must lie in the interior of the polytope")

    def _compute_facets(self):
        n = self.dimension
        verts = self.vertices
        if n == 1:
            lo = min(v[0] for v in verts)
            hi = max(v[0] for v in verts)
            if lo >= hi:
                raise ValueError("polytope is not full-dimensional")
            return (((1,), -lo), ((-1,), hi))
        from scipy.spatial import ConvexHull

        hull = ConvexHull(np.array(verts, dtype=float))
        facets: dict[tuple[tuple[int, ...], int], None] = {}
        for simplex in hull.simplices:
            pts = [verts[i] for i in simplex]
            u = _exact_facet_normal(pts)
            b = -sum(a * x for a, x in zip(u, pts[0]))
            if b < 0:
                u = tuple(-a for a in u)
                b = -b
            elif b == 0:
                raise ValueError("origin must lie in the interior of the polytope")
            # orient inward and verify every vertex satisfies the inequality
            if any(sum(a * x for a, x in zip(u, v)) < -b for v in verts):
                u = tuple(-a for a in u)
                b = -sum(a * x for a, x in zip(u, verts[int(simplex[0])]))
            if any(sum(a * x for a, x in zip(u, v)) < -b for v in verts):
                raise ValueError("inconsistent facet data (input not convex?)")
            facets[(u, b)] = None
        return tuple(facets.keys())

    @property
    def is_reflexive(self) -> bool:
        return all(b == 1 for _, b in self.facet_normals)

    def contains(self, x: Sequence[Fraction], dilate: int = 1) -> bool:
        return all(
            sum(Fraction(a) * Fraction(xi) for a, xi in zip(u, x)) >= -b * dilate
            for u, b in self.facet_normals
        )

    def bounding_box(self, dilate: int = 1) -> list[tuple[int, int]]:
        box = []
        for j in range(self.dimension):
            lo = min(v[j] for v in self.vertices) * dilate
            hi = max(v[j] for v in self.vertices) * dilate
            box.append((lo, hi))
        return box

    # -- exact volume and first moments via a simplicial decomposition

    def _simplices(self) -> list[list[tuple[int, ...]]]:
        if self.dimension == 1:
            lo, hi = self.bounding_box()[0][0], self.bounding_box()[0][1]
            return [[(lo,), (hi,)]]
        from scipy.spatial import Delaunay

        tri = Delaunay(np.array(self.vertices, dtype=float))
        out = []
        for s in tri.simplices:
            pts = [self.vertices[i] for i in s]
            out.append(pts)
        return out

    def volume(self) -> Fraction:
        n = self.dimension
        vol = Fraction(0)
        for pts in self._simplices():
            mat = [
                [Fraction(pts[i + 1][j] - pts[0][j]) for j in range(n)]
                for i in range(n)
            ]
            vol += abs(_det_fraction(mat)) / math.factorial(n)
        return vol

    def mean_of_linear(self, a: Sequence[int]) -> Fraction:
        """Average of x -> <x, a> over the polytope, exactly."""
        n = self.dimension
        total = Fraction(0)
        vol = Fraction(0)
        for pts in self._simplices():
            mat = [
                [Fraction(pts[i + 1][j] - pts[0][j]) for j in range(n)]
                for i in range(n)
            ]
            v = abs(_det_fraction(mat)) / math.factorial(n)
            centroid_val = sum(
                sum(Fraction(ai) * Fraction(x) for ai, x in zip(a, p)) for p in pts
            ) / (n + 1)
            total += v * centroid_val
            vol += v
        return total / vol

    def support_min(self, a: Sequence[int]) -> Fraction:
        return min(
            sum(Fraction(ai) * Fraction(x) for ai, x in zip(a, v)) for v in self.vertices
        )

    def gorenstein_vertex_duals(self) -> dict[tuple[int, ...], tuple[Fraction, ...]]:
        """For each vertex v, the rational point m with <m, u_F> = 1 on all
        facets through v.  Raises if some vertex cone admits none."""
        out = {}
        for v in self.vertices:
            rows = []
            for u, b in self.facet_normals:
                if sum(a * x for a, x in zip(u, v)) == -b:
                    rows.append(u)
            m = _solve_all_ones(rows, self.dimension)
            if m is None:
                raise ValueError(f"vertex cone at {v} is not Q-Gorenstein")
            out[v] = m
        return out


def _det_fraction(mat: list[list[Fraction]]) -> Fraction:
    m = [row[:] for row in mat]
    n = len(m)
    det = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        inv = 1 / m[c][c]
        for i in range(c + 1, n):
            if m[i][c] != 0:
                f = m[i][c] * inv
                m[i] = [a - f * b for a, b in zip(m[i], m[c])]
    return det


def _solve_all_ones(rows: list[tuple[int, ...]], n: int):
    """Solve <m, u> = 1 for all u in rows; None if inconsistent."""
    aug = [[Fraction(x) for x in u] + [Fraction(1)] for u in rows]
    r = 0
    piv_cols = []
    for c in range(n):
        piv = next((i for i in range(r, len(aug)) if aug[i][c] != 0), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        lead = aug[r][c]
        aug[r] = [x / lead for x in aug[r]]
        for i in range(len(aug)):
            if i != r and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[r])]
        piv_cols.append(c)
        r += 1
    for i in range(r, len(aug)):
        if aug[i][n] != 0:
            return None
    m = [Fraction(0)] * n
    for i, c in enumerate(piv_cols):
        m[c] = aug[i][n]
    # verify (the system may be underdetermined; any solution works)
    if any(sum(mi * ui for mi, ui in zip(m, u)) != 1 for u in rows):
        return None
    return tuple(m)


def lattice_points(polytope: ToricFano, k: int) -> list[tuple[int, ...]]:
    """All integer vectors in the dilate k*P, in lexicographic order."""
    if k < 1:
        raise ValueError("dilation level must be >= 1")
    box = polytope.bounding_box(k)
    ranges = [range(lo, hi + 1) for lo, hi in box]
    pts = []
    for x in _cartesian(*ranges):
        if polytope.contains(x, dilate=k):
            pts.append(x)
    return pts


# ---------------------------------------------------------------------------
# Radial grids and quadrature


@dataclass(frozen=True)
class RadialGrid:
    """Strictly increasing nodes t_0 = 0 < ... < t_M = 1."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 3:
            raise ValueError("grid needs at least three nodes")
        if nodes[0] != 0.0 or nodes[-1] != 1.0 or np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must increase strictly from 0 to 1")
        object.__setattr__(self, "nodes", nodes)

    def __len__(self) -> int:
        return self.nodes.size

    @property
    def cell_edges(self) -> np.ndarray:
        mids = 0.5 * (self.nodes[:-1] + self.nodes[1:])
        return np.concatenate([[0.0], mids, [1.0]])


@dataclass(frozen=True)
class GradingMap:
    """The mesh map t = s^q0 / (s^q0 + (1-s)^q1) on the unit interval.

    q0, q1 >= 1 cluster points at t = 0 and t = 1 respectively; equal
    exponents give a map with exact t <-> 1-t symmetry.  `values` returns
    (t, 1-t) computed without cancellation, which matters in the clustered
    tails.
    """

    q0: float
    q1: float

    def values(self, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        s = np.asarray(s, dtype=float)
        a = s**self.q0
        b = (1.0 - s) ** self.q1
        return a / (a + b), b / (a + b)

    def derivative(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        a = s**self.q0
        b = (1.0 - s) ** self.q1
        da = self.q0 * s ** (self.q0 - 1.0)
        db = self.q1 * (1.0 - s) ** (self.q1 - 1.0)
        return (da * b + a * db) / (a + b) ** 2


def capped_grading(size: int, q: float) -> float:
    """Largest usable exponent: keeps 1 - (1/size)^q resolvable."""
    return min(q, max(1.0, 34.0 / math.log(max(size - 1, 4))))


def graded_grid(size: int, q0: float = 1.0, q1: float = 1.0) -> RadialGrid:
    """Grid of mapped uniform nodes; see GradingMap."""
    q0 = capped_grading(size, q0)
    q1 = capped_grading(size, q1)
    s = np.linspace(0.0, 1.0, size)
    gmap = GradingMap(q0, q1)
    if q0 == q1:
        half = size // 2
        tl, _ = gmap.values(s[:half])
        mid = np.array([0.5]) if size % 2 else np.empty(0)
        t = np.concatenate([tl, mid, 1.0 - tl[::-1]])
    else:
        t, _ = gmap.values(s)
    t[0], t[-1] = 0.0, 1.0
    return RadialGrid(t)


def quadrature(grid: RadialGrid, values: np.ndarray) -> float:
    """Integrate nodal values over [0, 1] by composite cubic interpolation.

    Each panel [t_i, t_{i+1}] integrates the Lagrange cubic through four
    neighbouring nodes (one-sided at the ends), so the rule is exact on
    polynomials of degree <= 3.
    """
    v = np.asarray(values, dtype=float)
    t = grid.nodes
    if v.shape != t.shape:
        raise ValueError("values must match the grid nodes")
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite nodal value")
    total = 0.0
    M = t.size - 1
    for i in range(M):
        j0 = min(max(i - 1, 0), M - 3)
        idx = np.arange(j0, j0 + 4)
        total += _integrate_lagrange(t[idx], v[idx], t[i], t[i + 1])
    return total


def _integrate_lagrange(xs: np.ndarray, ys: np.ndarray, a: float, b: float) -> float:
    # integral over [a, b] of the interpolating polynomial through (xs, ys)
    coeffs = np.polyfit(xs - a, ys, xs.size - 1)
    poly = np.polyint(coeffs)
    return float(np.polyval(poly, b - a) - np.polyval(poly, 0.0))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


def integrate_function(
    f: Callable[[np.ndarray], np.ndarray],
    a: float = 0.0,
    b: float = 1.0,
    panels: int = 16,
    sing_exp_left: float = 0.0,
    sing_exp_right: float = 0.0,
) -> float:
    """Composite 32-point Gauss-Legendre integral of a callable on [a, b].

    Integrable endpoint singularities x^(-c) are removed by the change of
    variables x = s^(1/(1-c)) near the flagged endpoint.
    """

    def piece(lo, hi, g):
        edges = np.linspace(lo, hi, panels + 1)
        total = 0.0
        for e0, e1 in zip(edges[:-1], edges[1:]):
            x = 0.5 * (e1 - e0) * _GL_NODES + 0.5 * (e0 + e1)
            total += 0.5 * (e1 - e0) * float(np.sum(_GL_WEIGHTS * g(x)))
        return total

    mid = 0.5 * (a + b)
    total = 0.0
    if sing_exp_left > 0.0:
        p = 1.0 / (1.0 - sing_exp_left)
        width = mid - a
        total += piece(
            0.0, 1.0, lambda s: f(a + width * s**p) * width * p * s ** (p - 1.0)
        )
    else:
        total += piece(a, mid, f)
    if sing_exp_right > 0.0:
        p = 1.0 / (1.0 - sing_exp_right)
        width = b - mid
        total += piece(
            0.0, 1.0, lambda s: f(b - width * s**p) * width * p * s ** (p - 1.0)
        )
    else:
        total += piece(mid, b, f)
    return total


# ---------------------------------------------------------------------------
# Reference data on the sphere


@dataclass(frozen=True)
class ReferenceData:
    """Reference measure and metric weight for a section space of degree m.

    The Hermitian norm on degree-m sections is Fubini-Study,
    ``fs_weight(z) = m log(1 + |z|^2)``; the weighted reference measure dV
    carries the marked-point factors and has total mass one.
    """

    space: LogSphere
    bundle_degree: int

    def fs_weight(self, z: complex) -> float:
        return self.bundle_degree * math.log(1.0 + abs(z) ** 2)

    def density_profile(self) -> Callable[[np.ndarray], np.ndarray]:
        """dV / (dt dtheta / 2pi) as a function of t (polar pairs only)."""
        c0, c1 = self.space.pole_weights()
        c0f, c1f = float(c0), float(c1)
        lognorm = betaln(1.0 - c0f, 1.0 - c1f)

        def f0(t: np.ndarray) -> np.ndarray:
            t = np.asarray(t, dtype=float)
            with np.errstate(divide="ignore"):
                return np.exp(-c0f * np.log(t) - c1f * np.log(1.0 - t) - lognorm)

        return f0

    def mass_between(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Exact dV mass of the band lo <= t <= hi (polar pairs only)."""
        c0, c1 = self.space.pole_weights()
        a, b = 1.0 - float(c0), 1.0 - float(c1)
        return betainc(a, b, hi) - betainc(a, b, lo)


def reference_data(space: LogSphere, bundle_degree: int) -> ReferenceData:
    return ReferenceData(space, bundle_degree)


def reference_density(space: LogSphere, grid_size: int = 801):
    """The reference measure as a mass-one density on a graded radial grid.

    Returns the geometry bundle carrying the grid, exact per-cell masses
    and the class volume; the pair must have its marked points at the
    poles (grids exist only for rotationally symmetric data).
    """
    return build_radial_geometry(space, grid_size)


@dataclass(frozen=True)
class RadialGeometry:
    """A radial grid with exact cell masses of the two reference measures.

    Nodes and cell edges are images of a uniform computational parameter s
    under a grading map; flux_coeff holds the transformed conductivities
    t(1-t) / (dt/ds * ds) at the interior cell edges, which keeps the
    divergence-form operator consistent for solutions that are smooth in
    s but have power-law behaviour in t at weighted poles.

    nu[i] is the dV mass of the cell around node i (dV carries the conical
    pole factors); sigma[i] is the mass of the smooth round reference,
    which is uniform in t.  Both sum to one exactly.  V is the volume
    (degree) of the polarization class; the affine curvature operator is
    based at the smooth reference, mu -> sigma-measure + (1/V) * Laplacian,
    while entropies and Gibbs densities are taken relative to dV.
    """

    space: LogSphere
    grid: RadialGrid
    edges: np.ndarray
    nu: np.ndarray
    sigma: np.ndarray
    flux_coeff: np.ndarray
    V: float

    @property
    def symmetric(self) -> bool:
        c0, c1 = self.space.pole_weights()
        return c0 == c1

    def pair(self, f: np.ndarray, g: np.ndarray) -> float:
        """Integral of f*g against dV via cell masses."""
        return float(np.sum(self.nu * f * g))

    def mean(self, f: np.ndarray) -> float:
        return float(np.sum(self.nu * f))


def _beta_cdf_stable(a: float, b: float, t: np.ndarray, omt: np.ndarray) -> np.ndarray:
    """Regularized incomplete Beta, evaluated from the accurate side."""
    lo = betainc(a, b, np.minimum(t, 0.5))
    hi = 1.0 - betainc(b, a, np.minimum(omt, 0.5))
    return np.where(t <= 0.5, lo, hi)


def build_radial_geometry(
    space: LogSphere, size: int = 2001, grading: tuple[float, float] | None = None
) -> RadialGeometry:
    if space.log_points and not space.is_polar:
        raise ValueError(
            "radial grids require marked points at the poles (or none)"
        )
    c0, c1 = space.pole_weights() if space.log_points else (Fraction(0), Fraction(0))
    if grading is None:
        # u ~ t^(1-c) near a weighted pole; t = s^q with q a multiple of
        # the denominator of 1 - c makes the solution smooth in s
        q0 = float((1 - c0).denominator) if c0 else 1.0
        q1 = float((1 - c1).denominator) if c1 else 1.0
    else:
        q0, q1 = grading
    q0 = capped_grading(size, q0)
    q1 = capped_grading(size, q1)
    gmap = GradingMap(q0, q1)
    grid = graded_grid(size, q0, q1)
    M = size - 1
    s_edges_int = (np.arange(M) + 0.5) / M

    def mapped(s):
        t, omt = gmap.values(s)
        return t, omt

    if q0 == q1:
        # mirror the lower half so masses and conductivities are
        # bit-for-bit symmetric under t <-> 1-t
        half = M // 2
        tl, ol = mapped(s_edges_int[:half])
        if M % 2:
            tm, om = mapped(np.array([0.5]))
        else:
            tm = om = np.empty(0)
        te = np.concatenate([tl, tm, ol[::-1]])
        oe = np.concatenate([ol, om, tl[::-1]])
    else:
        te, oe = mapped(s_edges_int)
    t_edges = np.concatenate([[0.0], te, [1.0]])
    omt_edges = np.concatenate([[1.0], oe, [0.0]])

    a_par, b_par = 1.0 - float(c0), 1.0 - float(c1)
    cdf = _beta_cdf_stable(a_par, b_par, t_edges, omt_edges)
    nu = np.diff(cdf)
    if np.any(nu <= 0.0):
        raise ValueError("degenerate cell masses; reduce the grid grading")
    sigma = np.diff(t_edges)
    # conductivity t(1-t) u'(t) expressed in the computational parameter
    flux_coeff = te * oe / (gmap.derivative(s_edges_int) / M)
    V = abs(float(space.anticanonical_degree))
    if V == 0.0:
        raise ValueError("degenerate pair: class volume vanishes")
    return RadialGeometry(
        space=space,
        grid=grid,
        edges=t_edges,
        nu=nu,
        sigma=sigma,
        flux_coeff=flux_coeff,
        V=V,
    )
