"""Valuations, expected vanishing orders, and stability thresholds.

All quantities here are exact rationals.  A divisorial valuation on the
sphere is a point with a positive scale; on a toric polytope it is a
nonzero lattice vector with a scale.  The two basic invariants are the
log discrepancy A(v) (one minus the local weight, times the scale) and
the expected vanishing S(v) of sections of the positive side of the pair:
on a curve the full basis adapted to a point vanishes to orders 0..m, so

    S_k(v) = scale * m_k / (2k) = scale * degree / 2     (every level),

while on a polytope S_k averages <x, a> - min over the level-k lattice
points and converges to the volume average at rate O(1/k).

Threshold quantities:

    delta_k = min over candidate valuations of A(v) / S_k(v),
    delta   = the same with the limit S,

computed over the torus/rotation-invariant candidate set (marked points
plus a generic point on curves; a box of lattice vectors on polytopes),
hence upper bounds for the unrestricted thresholds, reported with their
witnesses.

Determinant vanishing orders along product valuations on the N-fold
power are bounded below by a min-cost assignment of per-factor section
orders (cancellations can only increase the true order), so every ratio
derived from them is a one-sided bound; this is flagged in the outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Optional, Sequence, Union

from .assignment import min_cost_assignment
from .geometry import LogSphere, SpherePoint, ToricFano, lattice_points

__all__ = [
    "CurveValuation",
    "ToricValuation",
    "ProductValuation",
    "BasisDivisor",
    "log_discrepancy",
    "expected_vanishing",
    "delta_k",
    "delta",
    "f_na",
    "na_energy_per_particle",
    "lct_chain",
    "restriction_experiment",
    "gibbs_stability_check",
]

GENERIC = None  # marker for a point away from poles and marked points


@dataclass(frozen=True)
class CurveValuation:
    """scale * (order of vanishing at a sphere point); point None = generic."""

    point: Optional[SpherePoint]
    scale: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "scale", Fraction(self.scale))
        if self.scale <= 0:
            raise ValueError("valuation scale must be positive")


@dataclass(frozen=True)
class ToricValuation:
    vector: tuple[int, ...]
    scale: Fraction = Fraction(1)

    def __post_init__(self):
        vec = tuple(int(x) for x in self.vector)
        if all(x == 0 for x in vec):
            raise ValueError("toric valuation vector must be nonzero")
        object.__setattr__(self, "vector", vec)
        object.__setattr__(self, "scale", Fraction(self.scale))
        if self.scale <= 0:
            raise ValueError("valuation scale must be positive")


Valuation = Union[CurveValuation, ToricValuation]


@dataclass(frozen=True)
class ProductValuation:
    """One valuation per factor of the N-fold power; None factors are trivial."""

    factors: tuple[Optional[Valuation], ...]

    def __post_init__(self):
        if len(self.factors) < 1:
            raise ValueError("need at least one factor")

    def __len__(self) -> int:
        return len(self.factors)

    @staticmethod
    def diagonal(v: Valuation, n: int) -> "ProductValuation":
        return ProductValuation(tuple([v] * n))


@dataclass(frozen=True)
class BasisDivisor:
    """Level-k basis data along a valuation: per-section vanishing orders
    and the induced normalized divisor coefficients."""

    level: int
    vanishing_orders: tuple[Fraction, ...]
    mass_profile: dict

    @property
    def n_sections(self) -> int:
        return len(self.vanishing_orders)


# ---------------------------------------------------------------------------
# Local invariants


def _weight_at(space: LogSphere, point: Optional[SpherePoint]) -> Fraction:
    if point is None:
        return Fraction(0)
    for p, c in space.log_points:
        if (p.t, p.theta) == (point.t, point.theta):
            return c
        # identical location expressed differently
        d = p.xyz() - point.xyz()
        if float(d @ d) == 0.0:
            return c
    return Fraction(0)


def log_discrepancy(v: Valuation, space) -> Fraction:
    """A(v), exactly.  Curve pairs: scale * (1 - local weight).  Polytopes:
    scale * <m_sigma, a> where m_sigma is the vertex dual of the normal
    cone containing a."""
    if isinstance(v, CurveValuation):
        if not isinstance(space, LogSphere):
            raise TypeError("curve valuation needs a LogSphere")
        return v.scale * (1 - _weight_at(space, v.point))
    if isinstance(v, ToricValuation):
        if not isinstance(space, ToricFano):
            raise TypeError("toric valuation needs a ToricFano")
        a = v.vector
        vals = {
            vert: sum(Fraction(x) * Fraction(y) for x, y in zip(vert, a))
            for vert in space.vertices
        }
        vstar = min(vals, key=lambda w: vals[w])
        duals = space.gorenstein_vertex_duals()
        m = duals[vstar]
        return v.scale * sum(mi * Fraction(ai) for mi, ai in zip(m, a))
    raise TypeError(f"unsupported valuation {v!r}")


def _curve_bundle_degree(space: LogSphere, k: int) -> int:
    d = space.anticanonical_degree
    if d <= 0:
        raise ValueError("positive-side sections require positive degree")
    m = k * d
    if m.denominator != 1 or not space.level_is_admissible(k):
        raise ValueError(f"level {k} does not clear the pair's denominators")
    return int(m)


def expected_vanishing(v: Valuation, space, mode: Union[str, int] = "limit") -> Fraction:
    """S(v): expected vanishing order of level-k sections (or its limit).

    mode: "limit" for the exact large-level value, or an integer level k
    for the finite-level average.  Both are exact rationals.
    """
    if isinstance(mode, int):
        if mode < 1:
            raise ValueError("level must be >= 1")
    if isinstance(v, CurveValuation):
        if not isinstance(space, LogSphere):
            raise TypeError("curve valuation needs a LogSphere")
        d = space.anticanonical_degree
        if mode == "limit":
            return v.scale * d / 2
        k = int(mode)
        m = _curve_bundle_degree(space, k)
        total = sum(Fraction(i) for i in range(m + 1))
        return v.scale * total / (k * (m + 1))
    if isinstance(v, ToricValuation):
        if not isinstance(space, ToricFano):
            raise TypeError("toric valuation needs a ToricFano")
        a = v.vector
        if mode == "limit":
            return v.scale * (space.mean_of_linear(a) - space.support_min(a))
        k = int(mode)
        pts = lattice_points(space, k)
        mn = k * space.support_min(a)
        total = sum(
            sum(Fraction(x) * Fraction(ai) for x, ai in zip(p, a)) - mn for p in pts
        )
        return v.scale * total / (k * len(pts))
    raise TypeError(f"unsupported valuation {v!r}")


def basis_divisor(space: LogSphere, k: int, v: CurveValuation) -> BasisDivisor:
    """Vanishing orders of the v-adapted full basis, plus the coefficients
    of the induced normalized divisor at the point of v."""
    m = _curve_bundle_degree(space, k)
    orders = tuple(v.scale * i for i in range(m + 1))
    sk = sum(orders, Fraction(0)) / (k * (m + 1))
    return BasisDivisor(level=k, vanishing_orders=orders, mass_profile={v.point: sk})


# ---------------------------------------------------------------------------
# Thresholds


def _curve_candidates(space: LogSphere) -> list[CurveValuation]:
    cands = [CurveValuation(p, Fraction(1)) for p, _ in space.log_points]
    cands.append(CurveValuation(GENERIC, Fraction(1)))
    return cands


def _toric_candidates(space: ToricFano, radius: int) -> list[ToricValuation]:
    from itertools import product as cart

    out = []
    for vec in cart(*[range(-radius, radius + 1)] * space.dimension):
        if any(x != 0 for x in vec):
            out.append(ToricValuation(vec, Fraction(1)))
    return out


def delta_k(space, k: int, box_radius: int = 5):
    """Level-k threshold min A/S_k over the invariant candidate set.

    Returns (value, witness).  The candidate set is restricted (invariant
    bases only), so the value is an upper bound for the unrestricted
    level-k threshold.
    """
    if isinstance(space, LogSphere):
        cands = _curve_candidates(space)
    elif isinstance(space, ToricFano):
        cands = _toric_candidates(space, box_radius)
    else:
        raise TypeError("expected LogSphere or ToricFano")
    best = None
    witness = None
    for v in cands:
        s = expected_vanishing(v, space, k)
        if s == 0:
            continue
        ratio = log_discrepancy(v, space) / s
        if best is None or ratio < best:
            best, witness = ratio, v
    return best, witness


def delta(space, box_radius: int = 5):
    """Stability threshold inf A/S over the candidate set, with witness.

    For polytopes a certificate records whether the minimum sits strictly
    inside the search box; a boundary minimum means the radius should be
    enlarged.
    """
    if isinstance(space, LogSphere):
        cands = _curve_candidates(space)
    elif isinstance(space, ToricFano):
        cands = _toric_candidates(space, box_radius)
    else:
        raise TypeError("expected LogSphere or ToricFano")
    best = None
    witness = None
    for v in cands:
        s = expected_vanishing(v, space, "limit")
        if s == 0:
            continue
        ratio = log_discrepancy(v, space) / s
        if best is None or ratio < best:
            best, witness = ratio, v
    interior = True
    warning = None
    if isinstance(space, ToricFano) and witness is not None:
        interior = all(abs(x) < box_radius for x in witness.vector)
        if not interior:
            warning = "increase search radius: minimum attained on the box boundary"
    return {
        "value": best,
        "witness": witness,
        "interior_certificate": interior,
        "warning": warning,
    }


def f_na(v: Valuation, space) -> Fraction:
    """Free-energy value at the Dirac mass of v: A(v) - S(v), exactly.

    One-homogeneous in the valuation scale.
    """
    return log_discrepancy(v, space) - expected_vanishing(v, space, "limit")


# ---------------------------------------------------------------------------
# Product valuations on the N-fold power


def _factor_orders_curve(
    factor: Optional[CurveValuation],
    exponents: Sequence[int],
    m: int,
    adapted: tuple[Optional[SpherePoint], Optional[SpherePoint]],
) -> list[Fraction]:
    """Vanishing orders of the basis sections along one factor valuation.

    `adapted` names the (zero, pole) pair of points the basis is pinned
    to: section i vanishes to order e_i at the first and m - e_i at the
    second, and is nonvanishing elsewhere.
    """
    if factor is None:
        return [Fraction(0)] * len(exponents)
    p = factor.point
    first, second = adapted

    def same(a, b):
        if a is None or b is None:
            return a is None and b is None
        d = a.xyz() - b.xyz()
        return float(d @ d) == 0.0

    if same(p, first):
        return [factor.scale * e for e in exponents]
    if same(p, second):
        return [factor.scale * (m - e) for e in exponents]
    return [Fraction(0)] * len(exponents)


def na_energy_per_particle(pv: ProductValuation, basis) -> Fraction:
    """Assignment lower bound for the per-particle determinant order.

    (1/(Nk)) times the min-cost assignment of the matrix whose (i, j)
    entry is the order of monomial section i along factor valuation j.
    This is the generic (leading-term) order of the determinant; true
    orders can only be larger, so derived ratios are one-sided.
    """
    n = len(pv)
    if n != basis.n_particles:
        raise ValueError("product valuation size must match the basis")
    m = basis.bundle_degree
    exps = basis.exponents
    first = pv.factors[0]
    if isinstance(first, ToricValuation) or (
        first is None and any(isinstance(f, ToricValuation) for f in pv.factors)
    ):
        raise NotImplementedError("per-particle energies are curve-side here")
    adapted = (SpherePoint(0.0), SpherePoint.infinity())
    cols = [
        _factor_orders_curve(f, exps, m, adapted) for f in pv.factors
    ]
    cost = [[cols[j][i] for j in range(n)] for i in range(n)]
    total, _ = min_cost_assignment(cost)
    return total / (n * basis.level)


@dataclass(frozen=True)
class _Basis:
    level: int
    bundle_degree: int
    exponents: tuple[int, ...]

    @property
    def n_particles(self) -> int:
        return len(self.exponents)


def _diag_energy_curve(space: LogSphere, v: CurveValuation, k: int) -> Fraction:
    """Diagonal per-particle order at level k; equals S_k by adaptation."""
    m = _curve_bundle_degree(space, k)
    n = m + 1
    total = v.scale * sum(Fraction(i) for i in range(n))
    return total / (n * k)


def lct_chain(space: LogSphere, k: int, max_level: int = 3):
    """Upper bounds for the singularity threshold of the determinant divisor.

    Enumerates diagonal and mixed product valuations built from the marked
    points, the poles and a generic point (unit scales; every derived
    ratio is scale-invariant).  For each, the determinant order is bounded
    by assignments against bases adapted to pairs of candidate points, and
    the reported minimum of N^{-1} A / E is an upper bound for the
    threshold.  The chain inequality bound <= delta_k is checked exactly.
    """
    if not isinstance(space, LogSphere):
        raise TypeError("determinant threshold chains are curve-side")
    if k > max_level:
        raise ValueError(f"exact enumeration limited to k <= {max_level}")
    m = _curve_bundle_degree(space, k)
    n = m + 1
    exps = tuple(range(m + 1))

    points: list[Optional[SpherePoint]] = []
    for p, _ in space.log_points:
        points.append(p)
    for pole in (SpherePoint(0.0), SpherePoint.infinity()):
        if not any(
            q is not None and float((q.xyz() - pole.xyz()) @ (q.xyz() - pole.xyz())) == 0.0
            for q in points
        ):
            points.append(pole)
    points.append(GENERIC)

    options: list[Optional[CurveValuation]] = [None]
    options += [CurveValuation(p, Fraction(1)) for p in points]
    bases = []
    for i in range(len(points)):
        for j in range(len(points)):
            if i != j:
                bases.append((points[i], points[j]))

    rows = []
    skipped = 0
    best = None
    best_witness = None
    for combo in combinations_with_replacement(range(len(options)), n):
        factors = tuple(options[i] for i in combo)
        if all(f is None for f in factors):
            continue
        a_total = sum(
            (log_discrepancy(f, space) for f in factors if f is not None),
            Fraction(0),
        )
        e_best = Fraction(0)
        for adapted in bases:
            cols = [_factor_orders_curve(f, exps, m, adapted) for f in factors]
            cost = [[cols[jj][ii] for jj in range(n)] for ii in range(n)]
            total, _ = min_cost_assignment(cost)
            val = total / (n * k)
            if val > e_best:
                e_best = val
        if e_best == 0:
            skipped += 1
            continue
        ratio = (a_total / n) / e_best
        rows.append(
            {
                "factors": factors,
                "log_discrepancy": a_total,
                "na_energy": e_best,
                "ratio": ratio,
            }
        )
        if best is None or ratio < best:
            best, best_witness = ratio, factors
    dk, dk_witness = delta_k(space, k)
    assert best is not None
    return {
        "level": k,
        "bound": best,
        "witness": best_witness,
        "delta_k": dk,
        "delta_k_witness": dk_witness,
        "margin": dk - best,
        "chain_ok": best <= dk,
        "one_sided": True,
        "skipped_zero_energy": skipped,
        "rows": rows,
    }


def restriction_experiment(space, v: Valuation, k_range: Sequence[int]):
    """Diagonal per-particle orders against the limit S, level by level.

    Reports (k, E_NA at the diagonal, S, gap); the gap must be
    nonincreasing and bounded by C/k with the fitted constant returned.
    All entries are exact rationals and scale linearly with the valuation.
    """
    s_limit = expected_vanishing(v, space, "limit")
    rows = []
    for k in sorted(k_range):
        if isinstance(v, CurveValuation):
            e = _diag_energy_curve(space, v, int(k))
        else:
            e = expected_vanishing(v, space, int(k))
        gap = abs(e - s_limit)
        rows.append({"k": int(k), "na_energy_diag": e, "s_limit": s_limit, "gap": gap})
    gaps = [r["gap"] for r in rows]
    nonincreasing = all(g1 >= g2 for g1, g2 in zip(gaps, gaps[1:]))
    fitted_c = max((Fraction(r["k"]) * r["gap"] for r in rows), default=Fraction(0))
    return {
        "rows": rows,
        "nonincreasing": nonincreasing,
        "fitted_C": fitted_c,
        "converges": gaps[-1] <= fitted_c / rows[-1]["k"] if rows else True,
    }


def gibbs_stability_check(space, k: int):
    """Instability certificate search at level k.

    UNSTABLE when some examined valuation pushes the determinant-divisor
    threshold bound below one (a genuine certificate, since assignment
    bounds are one-sided in the safe direction).  Otherwise the verdict is
    inconclusive; the examined family never certifies stability.
    """
    if isinstance(space, ToricFano):
        bound = None
        witness = None
        for v in _toric_candidates(space, radius=3):
            s = expected_vanishing(v, space, k)
            if s == 0:
                continue
            r = log_discrepancy(v, space) / s
            if bound is None or r < bound:
                bound, witness = r, v
    else:
        m = _curve_bundle_degree(space, k)
        n = m + 1
        bound = None
        witness = None
        # family minimum: collide j particles at one point; the ratio
        # 2 k A_p / (j - 1) is smallest at the full diagonal j = N
        for v in _curve_candidates(space):
            a = log_discrepancy(v, space)
            r = 2 * k * a / Fraction(n - 1)
            if bound is None or r < bound:
                bound, witness = r, v
    note = ""
    if bound is None:
        verdict = "INCONCLUSIVE-STABLE"
    elif bound < 1:
        verdict = "UNSTABLE"
    elif bound == 1:
        verdict = "INCONCLUSIVE"
        note = "threshold = 1 boundary case (e.g. positive-dimensional symmetry)"
    else:
        verdict = "INCONCLUSIVE-STABLE"
    return {
        "verdict": verdict,
        "bound": bound,
        "witness": witness,
        "level": k,
        "note": note,
        "certified": verdict == "UNSTABLE",
    }
