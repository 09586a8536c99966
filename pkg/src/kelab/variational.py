"""Curvature functionals and the twisted constant-curvature solver.

Everything here lives on a radial grid over the moment coordinate
``t in [0, 1]``.  In complex dimension one the normalized curvature
operator is affine,

    MA(u) = m_0 + (1/V) d/dt [ t (1 - t) u'(t) ]  (times dt dtheta / 2pi),

where the base point m_0 is the smooth round reference (uniform in t,
i.e. the normalized curvature form of the polarization), so MA is a
tridiagonal map in the nodal values of u.  The weighted reference measure
dV (which carries the conical pole factors) enters through entropies and
Gibbs densities only; on the unweighted sphere the two references agree
and MA(0) = dV.  This split is what makes the conical constant-curvature
metrics exact solutions of MA(u) = exp(beta u) dV on weighted pairs.

The discretization is conservative (flux form over the cells of the
grid), which makes the total mass of MA(u) equal to one by construction
and the induced quadratic form of the energy functional exactly a
weighted Dirichlet sum.  Densities are stored relative to dV; integrals
against dV use the exact per-cell masses of the geometry, so marked-point
singularities of dV are never evaluated pointwise.

Sign conventions: for a mass-one density mu with potential u_mu solving
MA(u_mu) = mu,

    script_E(u) = (1/2) ( <u, dV> + <u, MA(u)> ),      script_E(0) = 0,
    E(mu)       = script_E(u_mu) - <mu, u_mu>  >= 0,
    Ent(mu)     = <log(mu/dV), mu>             >= 0,
    F_beta      = beta E + Ent,
    M_beta(u)   = F_beta(MA(u)),
    D_beta(u)   = -script_E(u) + (1/beta) log <exp(beta u), dV>.

Critical points of F_beta solve MA(u) = exp(beta u) dV (normalized to
mass one), and M_beta >= D_beta pointwise with equality at critical
points; both facts hold exactly at the discrete level and are used as
regression anchors in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded

from .geometry import LogSphere, RadialGeometry, RadialGrid, build_radial_geometry

__all__ = [
    "Density",
    "Potential",
    "FunctionalReport",
    "RadialOperator",
    "monge_ampere",
    "script_energy",
    "entropy",
    "solve_calabi_yau",
    "energy_of_measure",
    "free_energy",
    "ent_star",
    "ding",
    "mabuchi",
    "solve_ke",
    "duality_gap",
    "coercivity_scan",
    "minimize_free_energy",
    "KESolveError",
]


class InadmissiblePotentialError(ValueError):
    pass


class KESolveError(RuntimeError):
    """Newton iteration failed; possibly no solution at this temperature."""


ADMISSIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class Density:
    """Nodal values of mu/dV on a radial geometry; total mass one."""

    geom: RadialGeometry
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.geom.grid.nodes.shape:
            raise ValueError("density values must match the grid")
        if np.any(v < -1e-12) or not np.all(np.isfinite(v)):
            raise ValueError("density values must be finite and nonnegative")
        v = np.maximum(v, 0.0)
        mass = float(np.sum(self.geom.nu * v))
        if abs(mass - 1.0) > 1e-10:
            raise ValueError(f"density mass {mass} deviates from 1")
        object.__setattr__(self, "values", v)

    @property
    def mass(self) -> float:
        return float(np.sum(self.geom.nu * self.values))


@dataclass(frozen=True)
class Potential:
    """Nodal values of a relative potential u(t); finite at both poles.

    Admissibility (nonnegativity of MA(u) up to tolerance) is enforced at
    construction unless explicitly skipped.
    """

    geom: RadialGeometry
    values: np.ndarray
    check: bool = True

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.geom.grid.nodes.shape:
            raise ValueError("potential values must match the grid")
        if not np.all(np.isfinite(v)):
            raise ValueError("potential must be finite at every node")
        object.__setattr__(self, "values", v)
        if self.check:
            ma = operator_for(self.geom).ma_values(v)
            bad = int(np.argmin(ma))
            if ma[bad] < -ADMISSIBILITY_TOL:
                raise InadmissiblePotentialError(
                    f"potential not admissible: MA density {ma[bad]:.3e} at node "
                    f"{bad} (t={self.geom.grid.nodes[bad]:.6g})"
                )

    def sup_normalized(self) -> "Potential":
        return Potential(self.geom, self.values - np.max(self.values), check=False)


@dataclass
class FunctionalReport:
    beta: float
    energy: float
    entropy: float
    free_energy: float
    script_E: Optional[float] = None
    mabuchi: Optional[float] = None
    ding: Optional[float] = None
    ent_star: Optional[float] = None
    duality_gap: Optional[float] = None

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


# ---------------------------------------------------------------------------
# The affine curvature operator


class RadialOperator:
    """Conservative discretization of u -> MA(u)/dV on a radial geometry."""

    def __init__(self, geom: RadialGeometry):
        self.geom = geom
        self.flux_coeff = geom.flux_coeff  # per interior cell edge
        self.scale = 1.0 / (geom.V * geom.nu)
        # base point of the affine operator: smooth reference, as a
        # cell-mass ratio so that MA masses telescope to one exactly
        self.rho = geom.sigma / geom.nu
        self._banded = self._build_banded()

    def _build_banded(self) -> np.ndarray:
        n = self.geom.grid.nodes.size
        c = self.flux_coeff
        s = self.scale
        ab = np.zeros((3, n))
        # superdiagonal (coeff of u_{i+1} in row i), rows 0..n-2
        ab[0, 1:] = c * s[:-1]
        # subdiagonal (coeff of u_{i-1} in row i), rows 1..n-1
        ab[2, :-1] = c * s[1:]
        diag = np.zeros(n)
        diag[:-1] -= c * s[:-1]
        diag[1:] -= c * s[1:]
        ab[1, :] = diag
        return ab

    def apply(self, u: np.ndarray) -> np.ndarray:
        """The linear part: (MA(u) - MA(0))/dV at the nodes."""
        flux = self.flux_coeff * np.diff(u)
        div = np.zeros_like(u)
        div[:-1] += flux
        div[1:] -= flux
        return div * self.scale

    def ma_values(self, u: np.ndarray) -> np.ndarray:
        return self.rho + self.apply(u)

    def dirichlet(self, u: np.ndarray) -> float:
        """(1/V) integral of t(1-t) u'(t)^2 dt; equals -<u, apply(u)>_nu."""
        return float(np.sum(self.flux_coeff * np.diff(u) ** 2)) / self.geom.V

    def cy_solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve apply(u) = rhs with <rhs, nu> = 0; returns sup-normalized u."""
        n = rhs.size
        ab = self._banded
        # ground node 0 and solve the reduced tridiagonal system
        red = np.zeros((3, n - 1))
        red[0, 1:] = ab[0, 2:]
        red[1, :] = ab[1, 1:]
        red[2, :-1] = ab[2, 1:-1]
        u = np.zeros(n)
        u[1:] = solve_banded((1, 1), red, rhs[1:])
        return u - np.max(u)

    def banded_shifted(self, diag_extra: np.ndarray) -> np.ndarray:
        ab = self._banded.copy()
        ab[1, :] += diag_extra
        return ab


_OP_CACHE: dict[int, RadialOperator] = {}


def operator_for(geom: RadialGeometry) -> RadialOperator:
    op = _OP_CACHE.get(id(geom))
    if op is None or op.geom is not geom:
        op = RadialOperator(geom)
        _OP_CACHE[id(geom)] = op
    return op


# ---------------------------------------------------------------------------
# Functionals


def monge_ampere(u: Potential) -> Density:
    return Density(u.geom, operator_for(u.geom).ma_values(u.values))


def script_energy(u: Potential) -> float:
    op = operator_for(u.geom)
    ma = op.ma_values(u.values)
    return 0.5 * (u.geom.mean(u.values) + u.geom.pair(u.values, ma))


def entropy(mu: Density, ref: Optional[Density] = None) -> float:
    """Relative entropy of mu against ref (default: the reference measure).

    Nodes where mu vanishes contribute zero; grids carry no mutually
    singular part, so the value is always finite.
    """
    if ref is not None and ref.geom is not mu.geom:
        raise ValueError("densities live on different geometries")
    v = mu.values
    r = np.ones_like(v) if ref is None else ref.values
    mask = v > 0.0
    if np.any(r[mask] <= 0.0):
        return math.inf
    out = np.zeros_like(v)
    out[mask] = v[mask] * np.log(v[mask] / r[mask])
    return float(np.sum(mu.geom.nu * out))


def solve_calabi_yau(mu: Density) -> Potential:
    """The sup-normalized potential with MA(u) = mu (a tridiagonal solve)."""
    op = operator_for(mu.geom)
    u = op.cy_solve(mu.values - op.rho)
    return Potential(mu.geom, u, check=False)


def energy_of_measure(mu: Density) -> float:
    """Quadratic energy of a density; zero exactly at the smooth reference."""
    op = operator_for(mu.geom)
    u = op.cy_solve(mu.values - op.rho)
    # script_E(u) - <mu, u> collapses to half the Dirichlet sum of u
    return 0.5 * op.dirichlet(u)


def potential_energy_pair(mu: Density) -> tuple[float, Potential]:
    u = solve_calabi_yau(mu)
    return 0.5 * operator_for(mu.geom).dirichlet(u.values), u


def free_energy(mu: Density, beta: float) -> float:
    return beta * energy_of_measure(mu) + entropy(mu)


def ent_star(u: Potential) -> float:
    """Concave conjugate of the entropy: -log <exp(-u), dV>."""
    return -_log_mean_exp(u.geom, -u.values)


def _log_mean_exp(geom: RadialGeometry, w: np.ndarray) -> float:
    m = float(np.max(w))
    return m + math.log(float(np.sum(geom.nu * np.exp(w - m))))


def ding(u: Potential, beta: float) -> float:
    if beta == 0.0:
        raise ValueError("ding functional requires beta != 0")
    return -script_energy(u) + _log_mean_exp(u.geom, beta * u.values) / beta


def mabuchi(u: Potential, beta: float) -> float:
    return free_energy(monge_ampere(u), beta)


def functional_report(mu: Density, beta: float, u: Optional[Potential] = None) -> FunctionalReport:
    e = energy_of_measure(mu)
    ent = entropy(mu)
    rep = FunctionalReport(
        beta=beta, energy=e, entropy=ent, free_energy=beta * e + ent
    )
    if u is not None:
        rep.script_E = script_energy(u)
        rep.mabuchi = mabuchi(u, beta)
        rep.ent_star = ent_star(u)
        if beta != 0.0:
            rep.ding = ding(u, beta)
    return rep


# ---------------------------------------------------------------------------
# The twisted constant-curvature equation


def _gibbs_density(geom: RadialGeometry, beta: float, u: np.ndarray) -> np.ndarray:
    """exp(beta u) dV normalized to mass one, as values relative to dV."""
    w = beta * u
    m = float(np.max(w))
    e = np.exp(w - m)
    return e / float(np.sum(geom.nu * e))


def _coerce_geometry(space, grid_size: int) -> RadialGeometry:
    if isinstance(space, RadialGeometry):
        return space
    if isinstance(space, LogSphere):
        return build_radial_geometry(space, grid_size)
    raise TypeError("expected a LogSphere or a RadialGeometry")


def solve_ke(
    space,
    beta: float,
    grid_size: int = 2001,
    tol: float = 1e-11,
    max_iter: int = 50,
    max_halvings: int = 25,
    symmetrize: Optional[bool] = None,
):
    """Damped Newton iteration for MA(u) = exp(beta u) dV (mass-one form).

    Returns (Potential, Density, info).  For symmetric pairs the iterates
    are projected onto the t <-> 1-t symmetric subspace, which removes the
    scaling-automorphism zero mode present at beta = -1.  Non-convergence
    raises KESolveError: at beta <= -1 existence can genuinely fail.
    """
    geom = _coerce_geometry(space, grid_size)
    op = operator_for(geom)
    if symmetrize is None:
        symmetrize = geom.symmetric

    def project(v: np.ndarray) -> np.ndarray:
        return 0.5 * (v + v[::-1]) if symmetrize else v

    if beta == 0.0:
        u = np.zeros(len(geom.grid))
        pot = Potential(geom, u, check=False)
        return pot, Density(geom, op.ma_values(u)), {"iterations": 0, "residual": 0.0}

    u = np.zeros(len(geom.grid))
    nu = geom.nu

    def residual(uv):
        return op.ma_values(uv) - _gibbs_density(geom, beta, uv)

    def res_norm(r):
        return float(np.sum(nu * np.abs(r)))

    r = residual(u)
    norm = res_norm(r)
    history = [norm]
    it = 0
    while norm > tol and it < max_iter:
        s = _gibbs_density(geom, beta, u)
        # J = A - beta diag(s) + beta s (nu s)^T has the constant gauge
        # vector in its kernel; pin node 0 and drop its (redundant) row,
        # then solve the reduced tridiagonal system with a rank-one fix.
        ab = op.banded_shifted(-beta * s)
        red = np.zeros((3, ab.shape[1] - 1))
        red[0, 1:] = ab[0, 2:]
        red[1, :] = ab[1, 1:]
        red[2, :-1] = ab[2, 1:-1]
        rhs = np.column_stack([-r[1:], s[1:]])
        sol = solve_banded((1, 1), red, rhs)
        x, y = sol[:, 0], sol[:, 1]
        ns = (nu * s)[1:]
        denom = 1.0 + beta * float(ns @ y)
        if denom == 0.0 or not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
            raise KESolveError(
                f"no solution found (possible non-existence for beta={beta}): "
                "singular Newton system"
            )
        delta = np.zeros_like(u)
        delta[1:] = x - (beta * float(ns @ x) / denom) * y
        delta = project(delta)
        step = 1.0
        improved = False
        for _ in range(max_halvings):
            cand = project(u + step * delta)
            rc = residual(cand)
            nc = res_norm(rc)
            if nc < norm:
                u, r, norm = cand, rc, nc
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        history.append(norm)
        it += 1

    if norm > tol:
        raise KESolveError(
            f"no solution found (possible non-existence for beta={beta}): "
            f"residual {norm:.3e} after {it} iterations"
        )
    mu_vals = op.ma_values(u)
    pot = Potential(geom, u - np.max(u), check=False)
    mu = Density(geom, mu_vals)
    # reconstruction: u must agree with (1/beta) log(mu/dV) up to a constant
    rec = np.log(np.maximum(mu_vals, 1e-300)) / beta
    rec_err = float(np.max(np.abs((rec - geom.mean(rec)) - (u - geom.mean(u)))))
    info = {
        "iterations": it,
        "residual": norm,
        "history": history,
        "reconstruction_error": rec_err,
    }
    return pot, mu, info


# ---------------------------------------------------------------------------
# Minimization over densities and the duality gap


def minimize_free_energy(
    geom: RadialGeometry,
    beta: float,
    iters: int = 1500,
    init: Optional[np.ndarray] = None,
    step: float = 0.5,
    kick: float = 0.0,
):
    """Entropic mirror descent for F_beta over mass-one grid densities.

    Returns (Density, value, trace).  `kick` adds an antisymmetric seed to
    escape the critical point at dV, which is a saddle in the unstable
    regime.  Bounded-budget and heuristic by design; the trace lets the
    caller judge stabilization.
    """
    op = operator_for(geom)
    n = len(geom.grid)
    t = geom.grid.nodes
    v = np.zeros(n) if init is None else init.copy()
    if kick:
        v = v + kick * (2.0 * t - 1.0)

    def density_of(vv):
        m = np.max(-vv)
        e = np.exp(-vv - m)
        return e / float(np.sum(geom.nu * e))

    def value_of(mu_vals):
        u = op.cy_solve(mu_vals - op.rho)
        e = 0.5 * op.dirichlet(u)
        mask = mu_vals > 0
        ent = float(
            np.sum(geom.nu[mask] * mu_vals[mask] * np.log(mu_vals[mask]))
        )
        return beta * e + ent, u

    mu_vals = density_of(v)
    f, u_mu = value_of(mu_vals)
    best = f
    best_mu = mu_vals
    trace = [f]
    eta = step
    for _ in range(iters):
        g = -beta * u_mu + np.log(np.maximum(mu_vals, 1e-300))
        gbar = float(np.sum(geom.nu * mu_vals * g))
        v_new = v + eta * (g - gbar)
        v_new -= np.min(v_new)
        mu_new = density_of(v_new)
        f_new, u_new = value_of(mu_new)
        if f_new <= f:
            v, mu_vals, f, u_mu = v_new, mu_new, f_new, u_new
            eta = min(eta * 1.05, 4.0)
        else:
            eta *= 0.5
            if eta < 1e-12:
                break
        if f < best:
            best, best_mu = f, mu_vals
        trace.append(f)
    return Density(geom, best_mu / float(np.sum(geom.nu * best_mu))), best, trace


def duality_gap(space, beta: float = -1.0, grid_size: int = 1001, iters: int = 800):
    """|inf F_beta over densities - inf D_beta over potentials|.

    Both infima are attained at the constant-curvature solution; the
    minimizations are run anyway and the best values found are compared.
    Raises KESolveError when the inner solve does not converge.
    """
    geom = _coerce_geometry(space, grid_size)
    pot, mu, _ = solve_ke(geom, beta, grid_size=grid_size)
    f_candidates = [free_energy(mu, beta)]
    _, f_desc, _ = minimize_free_energy(geom, beta, iters=iters)
    f_candidates.append(f_desc)
    d_candidates = [ding(pot, beta)]
    d_candidates.append(_descend_ding(geom, beta, iters=iters))
    f_min = min(f_candidates)
    d_min = min(d_candidates)
    return abs(f_min - d_min), {"inf_free_energy": f_min, "inf_ding": d_min}


def _descend_ding(geom: RadialGeometry, beta: float, iters: int = 800) -> float:
    op = operator_for(geom)
    u = np.zeros(len(geom.grid))

    def value(uv):
        ma = op.ma_values(uv)
        scr = 0.5 * (geom.mean(uv) + geom.pair(uv, ma))
        return -scr + _log_mean_exp(geom, beta * uv) / beta

    f = value(u)
    eta = 0.5
    for _ in range(iters):
        grad = _gibbs_density(geom, beta, u) - op.ma_values(u)
        u_new = u - eta * grad
        f_new = value(u_new)
        if f_new <= f:
            u, f = u_new, f_new
            eta = min(eta * 1.05, 4.0)
        else:
            eta *= 0.5
            if eta < 1e-12:
                break
    return f


def coercivity_scan(
    space,
    beta_grid,
    grid_size: int = 257,
    iters: int = 2500,
    floor: float = -1e3,
):
    """Heuristic bracket for the largest coupling with bounded free energy.

    For each beta (expected decreasing, all negative) a bounded-budget
    mirror descent of F_beta is run with an antisymmetric kick and warm
    starts.  A leg counts as diving when its running minimum drops below
    the floor or keeps decreasing at budget exhaustion.  Returns the
    bracket (last stable beta, first diving beta) and the midpoint
    estimate; this is an exploratory diagnostic, not a certificate.
    """
    geom = _coerce_geometry(space, grid_size)
    betas = list(beta_grid)
    if any(b >= 0 for b in betas):
        raise ValueError("coercivity scan expects negative couplings")
    rows = []
    init = None
    last_stable = None
    first_dive = None
    for b in sorted(betas, reverse=True):
        mu, f, trace = minimize_free_energy(
            geom, b, iters=iters, init=init, kick=0.3
        )
        tail = trace[-max(len(trace) // 10, 2):]
        still_falling = (tail[0] - tail[-1]) > 1e-3 * (1.0 + abs(tail[-1]))
        dived = f < floor or still_falling
        rows.append({"beta": b, "min_free_energy": f, "dived": bool(dived)})
        if dived and first_dive is None:
            first_dive = b
        if not dived:
            last_stable = b
            init = -np.log(np.maximum(mu.values, 1e-300))
    if first_dive is None:
        estimate = None
        width = None
    elif last_stable is None:
        estimate = -first_dive
        width = math.inf
    else:
        estimate = -0.5 * (last_stable + first_dive)
        width = abs(first_dive - last_stable)
    return {
        "rows": rows,
        "gamma_estimate": estimate,
        "bracket_width": width,
        "heuristic": True,
    }
