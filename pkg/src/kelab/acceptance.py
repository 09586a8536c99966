"""Cross-module verification suite.

Each criterion pits two independently implemented routes against each
other: quadrature oracles against Monte Carlo estimates, closed-form
metrics against the Newton solver, exact rational thresholds against
enumeration, sampler histograms against mean-field densities.  Stochastic
criteria run a fixed set of seeds and take majority votes; all other
criteria are deterministic.

`run_suite` executes any subset and reports one pass/fail record per
criterion; the CLI `crosscheck` subcommand and the test suite both call
into this module.
"""

from __future__ import annotations

import math
import time
from fractions import Fraction

import numpy as np
from scipy.special import betaln

from .ensemble import (
    BasisSpec,
    GibbsParams,
    brute_force_log_partition,
    chi_square_vs_reference,
    empirical_density,
    log_partition,
    mcmc_sample,
    tv_distance_bands,
)
from .geometry import LogSphere, SpherePoint, build_radial_geometry, football, round_sphere
from .na_stability import (
    CurveValuation,
    delta,
    delta_k,
    lct_chain,
    restriction_experiment,
)
from .variational import (
    Density,
    Potential,
    ding,
    duality_gap,
    energy_of_measure,
    entropy,
    mabuchi,
    monge_ampere,
    operator_for,
    script_energy,
    solve_calabi_yau,
    solve_ke,
)

__all__ = ["run_suite", "CRITERIA"]


def _triple(cs):
    pts = (SpherePoint(0.0), SpherePoint.infinity(), SpherePoint.from_complex(1 + 0j))
    return LogSphere(tuple((p, Fraction(c)) for p, c in zip(pts, cs)))


def band_masses_from_density(mu: Density, band_edges: np.ndarray) -> np.ndarray:
    """Reference-band masses of a grid density via its cumulative mass."""
    geom = mu.geom
    cum = np.concatenate([[0.0], np.cumsum(geom.nu * mu.values)])
    cum /= cum[-1]
    at_edges = np.interp(band_edges, geom.grid.cell_edges, cum)
    return np.diff(at_edges)


def football_ke_band_masses(c: float, band_edges: np.ndarray) -> np.ndarray:
    """Closed-form band masses of the equal-weight conical metric.

    The constant-curvature metric with equal cone weights c at the poles
    is the pullback of the round metric under z -> z^(1-c); its cumulative
    mass in t is tau(t) = t^(1-c) / (t^(1-c) + (1-t)^(1-c)).
    """
    e = np.asarray(band_edges, dtype=float)
    a = e ** (1.0 - c)
    b = (1.0 - e) ** (1.0 - c)
    tau = a / (a + b)
    return np.diff(tau)


def football_ke_density_profile(c: float, t: np.ndarray) -> np.ndarray:
    """Closed-form mu/dV of the equal-weight conical metric at nodes t."""
    lb = betaln(1.0 - c, 1.0 - c)
    base = (1.0 - t) ** (1.0 - c) + t ** (1.0 - c)
    return (1.0 - c) * np.exp(lb) / base**2


# ---------------------------------------------------------------------------
# Criteria


def a1_gibbs_variational(fast=False):
    """Quadrature vs thermodynamic integration vs the mean free energy."""
    space = round_sphere()
    basis = BasisSpec.custom(k=1, bundle_degree=1)
    sweeps = 1500 if fast else 6000
    details = {}
    ok = True
    for beta in (0.5, 1.0):
        bf = brute_force_log_partition(space, basis, beta)
        gp = GibbsParams(beta=beta, sweeps=sweeps, seed=2024, chains=2, burn_in=sweeps // 6)
        ti = log_partition(space, basis, beta, gp, legs=21)
        exact = 0.5 * math.log1p(beta)  # independent closed form for the round pair
        diff = abs(ti["value"] - bf["value"])
        within_se = diff <= 3.0 * ti["stderr"]
        family_rel = abs(bf["family_inf"] - bf["value"]) / abs(bf["value"])
        details[f"beta={beta}"] = {
            "brute_force": bf["value"],
            "closed_form": exact,
            "ti_value": ti["value"],
            "ti_stderr": ti["stderr"],
            "within_3se": within_se,
            "family_inf": bf["family_inf"],
            "family_rel_err": family_rel,
            "family_lower_bound_ok": bf["family_inf"] >= bf["value"] - 1e-6,
        }
        ok = ok and within_se and family_rel < 0.01 and bf["family_inf"] >= bf["value"] - 1e-6
        ok = ok and abs(bf["value"] - exact) < 5e-4
    return ok, details


def a2_noninteracting_baseline(fast=False):
    """Chain at zero coupling reproduces the reference measure."""
    space = round_sphere()
    details = {}
    ok = True
    sweeps = 2000 if fast else 6000
    for n in (16, 64):
        basis = BasisSpec.custom(k=1, bundle_degree=n - 1)
        gp = GibbsParams(beta=0.0, sweeps=sweeps, seed=7 + n, chains=1, burn_in=400)
        stats, _ = mcmc_sample(space, basis, gp, store_samples=True)
        test = chi_square_vs_reference(stats, space)
        # total-variation against the reference at growing retained counts
        bands = stats.band_edges.size - 1
        sectors = stats.histogram.shape[1]
        tvs = []
        R = stats.retained_sweeps
        for frac in (0.25, 0.5, 1.0):
            rr = int(R * frac)
            tt = stats.samples_t[:, :rr].ravel()
            th = stats.samples_theta[:, :rr].ravel()
            b = np.clip(np.searchsorted(stats.band_edges, tt, side="right") - 1, 0, bands - 1)
            s = np.clip(
                (np.mod(th, 2 * math.pi) / (2 * math.pi) * sectors).astype(int),
                0,
                sectors - 1,
            )
            counts = np.zeros((bands, sectors))
            np.add.at(counts, (b, s), 1)
            p = counts / counts.sum()
            tvs.append(0.5 * float(np.abs(p - 1.0 / (bands * sectors)).sum()))
        monotone = tvs[0] > tvs[1] > tvs[2]
        details[f"N={n}"] = {"p_value": test["p_value"], "tv_curve": tvs, "monotone": monotone}
        ok = ok and test["p_value"] > 0.01 and monotone
    return ok, details


def a3_round_sphere_ke(fast=False):
    """The round metric is already constant-curvature at beta = -1."""
    pot, mu, info = solve_ke(round_sphere(), -1.0, grid_size=1001 if fast else 2001)
    sup_var = float(np.max(pot.values) - np.min(pot.values))
    ok = (
        sup_var < 1e-8
        and info["residual"] < 1e-10
        and info["reconstruction_error"] < 1e-8
    )
    return ok, {
        "sup_variation": sup_var,
        "residual": info["residual"],
        "reconstruction_error": info["reconstruction_error"],
    }


def a4_football_oracle(fast=False):
    """Newton solve against the conical closed form, nodewise."""
    c = 0.75
    space = football(Fraction(3, 4))
    pot, mu, info = solve_ke(space, -1.0, grid_size=2001 if fast else 4001)
    target = football_ke_density_profile(c, mu.geom.grid.nodes)
    rel = np.abs(mu.values - target) / target
    ok = bool(np.max(rel) < 1e-4) and info["residual"] < 1e-10
    return ok, {
        "max_rel_err": float(np.max(rel)),
        "residual": info["residual"],
        "iterations": info["iterations"],
    }


def _sampler_tv_vs_density(space, k, beta, seed, sweeps, target_masses=None, mu=None):
    basis = BasisSpec.canonical(space, k, sign=-1)
    gp = GibbsParams(beta=beta, sweeps=sweeps, seed=seed, chains=1, burn_in=max(300, sweeps // 6))
    stats, _ = mcmc_sample(space, basis, gp, store_samples=False)
    emp = empirical_density(stats)
    if target_masses is None:
        target_masses = band_masses_from_density(mu, stats.band_edges)
    return tv_distance_bands(emp, target_masses), basis.n_particles


def a5_repulsive_crosscheck(fast=False):
    """Sampler at beta = +1 against the mean-field density, two sizes."""
    space = round_sphere()
    geom = build_radial_geometry(space, 1001)
    _, mu, _ = solve_ke(geom, +1.0)
    sweeps = 800 if fast else 3200
    seeds = (11, 12, 13)
    votes = []
    details = {}
    for seed in seeds:
        tv_small, n_small = _sampler_tv_vs_density(space, 12, +1.0, seed, sweeps, mu=mu)
        tv_big, n_big = _sampler_tv_vs_density(space, 50, +1.0, seed, sweeps, mu=mu)
        votes.append(tv_big < 0.1 and tv_big < tv_small)
        details[f"seed={seed}"] = {
            f"tv_N={n_small}": tv_small,
            f"tv_N={n_big}": tv_big,
        }
    ok = sum(votes) >= 2
    details["votes"] = votes
    return ok, details


def a6_attractive_crosscheck(fast=False):
    """Attractive sampler on the equal football against the conical metric.

    The pair sits on the stability boundary, so the run is conditional on
    the finiteness of the normalizing integral and flagged experimental.
    """
    c = 0.5
    space = football(Fraction(1, 2))
    sweeps = 600 if fast else 2600
    seeds = (21, 22, 23)
    votes_small = []
    votes_dec = []
    details = {}
    for seed in seeds:
        tvs = {}
        for k in (50, 200):
            basis = BasisSpec.canonical(space, k, sign=-1)
            gp = GibbsParams(
                beta=-1.0, sweeps=sweeps, seed=seed, chains=1, burn_in=max(200, sweeps // 6)
            )
            stats, _ = mcmc_sample(space, basis, gp, store_samples=False)
            emp = empirical_density(stats)
            target = football_ke_band_masses(c, stats.band_edges)
            tvs[basis.n_particles] = tv_distance_bands(emp, target)
        votes_small.append(tvs[201] < 0.15)
        votes_dec.append(tvs[201] < tvs[51])
        details[f"seed={seed}"] = {f"tv_N={n}": v for n, v in tvs.items()}
    ok = sum(votes_small) >= 2 and sum(votes_dec) >= 2
    details["flag"] = "experimental: boundary pair, conditional on Z finite"
    return ok, details


def a7_delta_exactness(fast=False):
    """Exact thresholds: round value one, triples against the closed form."""
    details = {}
    ok = True
    for k in range(1, 6):
        val, _ = delta_k(round_sphere(), k)
        ok = ok and val == Fraction(1)
        details[f"delta_{k}(round)"] = str(val)
    triples = [
        (Fraction(1, 2), Fraction(1, 2), Fraction(1, 2)),
        (Fraction(2, 3), Fraction(1, 2), Fraction(1, 3)),
        (Fraction(3, 4), Fraction(1, 4), Fraction(1, 4)),
        (Fraction(1, 5), Fraction(1, 5), Fraction(1, 5)),
        (Fraction(9, 10), Fraction(1, 2), Fraction(1, 10)),
    ]
    for cs in triples:
        space = _triple(cs)
        expect = 2 * (1 - max(cs)) / (2 - sum(cs))
        got = delta(space)["value"]
        # validate by finite-level enumeration at the smallest admissible level
        k = math.lcm(*(c.denominator for c in cs))
        lvl, _ = delta_k(space, k)
        exact = got == expect and lvl == expect
        details[f"triple{tuple(str(c) for c in cs)}"] = {
            "closed_form": str(expect),
            "delta": str(got),
            "delta_k": str(lvl),
            "exact": exact,
        }
        ok = ok and exact
    return ok, details


def a8_na_energy_convergence(fast=False):
    """Diagonal determinant orders converge to the expected vanishing."""
    details = {}
    ok = True
    cases = [
        ("round", round_sphere(), range(1, 11), [
            CurveValuation(SpherePoint(0.0), Fraction(1)),
            CurveValuation(SpherePoint(0.0), Fraction(2)),
            CurveValuation(None, Fraction(7)),
        ]),
        ("football_3_4", football(Fraction(3, 4)), range(4, 44, 4), [
            CurveValuation(SpherePoint(0.0), Fraction(1)),
            CurveValuation(SpherePoint.infinity(), Fraction(1)),
            CurveValuation(None, Fraction(2)),
        ]),
    ]
    for name, space, ks, vals in cases:
        for i, v in enumerate(vals):
            rep = restriction_experiment(space, v, list(ks))
            gap_last = rep["rows"][-1]["gap"]
            bound = rep["fitted_C"] / rep["rows"][-1]["k"]
            good = rep["nonincreasing"] and gap_last <= bound
            details[f"{name}[{i}]"] = {
                "fitted_C": str(rep["fitted_C"]),
                "last_gap": str(gap_last),
                "nonincreasing": rep["nonincreasing"],
            }
            ok = ok and good
    return ok, details


def a9_lct_chain_ordering(fast=False):
    """Threshold bound never exceeds the level threshold, exactly."""
    details = {}
    ok = True
    cases = [
        ("round", round_sphere(), (1, 2, 3)),
        ("football_1_2", football(Fraction(1, 2)), (2,)),
        ("triple_1_2", _triple((Fraction(1, 2),) * 3), (2,)),
    ]
    for name, space, ks in cases:
        for k in ks:
            rep = lct_chain(space, k)
            details[f"{name},k={k}"] = {
                "bound": str(rep["bound"]),
                "delta_k": str(rep["delta_k"]),
                "chain_ok": rep["chain_ok"],
            }
            ok = ok and rep["chain_ok"]
    return ok, details


def a10_duality_and_inequalities(fast=False):
    """Duality gap, functional inequalities, and derivative consistency."""
    details = {}
    geom = build_radial_geometry(round_sphere(), 257)
    op = operator_for(geom)
    rng = np.random.Generator(np.random.Philox(key=[424242]))
    gap, gap_info = duality_gap(round_sphere(), -1.0, grid_size=513, iters=400)
    details["duality_gap"] = gap
    details.update(gap_info)
    ok = gap < 1e-6

    def random_admissible(scale=1.0):
        s = geom.grid.nodes
        w = np.zeros_like(s)
        for l in range(1, 6):
            w += rng.normal() / l * np.cos(l * math.pi * s)
        lin = op.apply(w)
        worst = float(np.min(lin))
        if worst < 0:
            w *= min(1.0, 0.9 / (-worst))
        return Potential(geom, scale * w, check=False)

    viol_md = 0.0
    viol_ent = 0.0
    viol_e = 0.0
    for _ in range(100):
        u = random_admissible(scale=float(rng.uniform(0.2, 1.0)))
        viol_md = min(viol_md, mabuchi(u, -1.0) - ding(u, -1.0))
        v = rng.normal(size=len(geom.grid)) * 0.8
        mu_vals = np.exp(v - np.max(v))
        mu_vals /= float(np.sum(geom.nu * mu_vals))
        mu = Density(geom, mu_vals)
        viol_ent = min(viol_ent, entropy(mu))
        viol_e = min(viol_e, energy_of_measure(mu))
    details["worst_M_minus_D"] = viol_md
    details["worst_entropy"] = viol_ent
    details["worst_energy"] = viol_e
    ok = ok and viol_md > -1e-12 and viol_ent > -1e-12 and viol_e > -1e-12

    # derivative consistency by central differences
    worst_de = 0.0
    worst_dE = 0.0
    for _ in range(20):
        u = random_admissible(scale=0.5)
        direction = rng.normal(size=len(geom.grid))
        direction -= geom.mean(direction)
        eps = 1e-5
        up = Potential(geom, u.values + eps * direction, check=False)
        um = Potential(geom, u.values - eps * direction, check=False)
        fd = (script_energy(up) - script_energy(um)) / (2 * eps)
        exact = geom.pair(monge_ampere(u).values, direction)
        worst_de = max(worst_de, abs(fd - exact) / max(1.0, abs(exact)))

        mu = monge_ampere(u)
        pert = direction - geom.mean(direction)
        scale_p = 0.25 / max(1e-9, float(np.max(np.abs(pert))))
        pert *= scale_p
        mup = Density(geom, mu.values + eps * pert)
        mum = Density(geom, mu.values - eps * pert)
        fdE = (energy_of_measure(mup) - energy_of_measure(mum)) / (2 * eps)
        u_mu = solve_calabi_yau(mu)
        exactE = -geom.pair(u_mu.values, pert)
        worst_dE = max(worst_dE, abs(fdE - exactE) / max(1.0, abs(exactE)))
    details["fd_script_energy_rel"] = worst_de
    details["fd_measure_energy_rel"] = worst_dE
    ok = ok and worst_de < 1e-6 and worst_dE < 1e-6
    return ok, details


CRITERIA = {
    "A1": a1_gibbs_variational,
    "A2": a2_noninteracting_baseline,
    "A3": a3_round_sphere_ke,
    "A4": a4_football_oracle,
    "A5": a5_repulsive_crosscheck,
    "A6": a6_attractive_crosscheck,
    "A7": a7_delta_exactness,
    "A8": a8_na_energy_convergence,
    "A9": a9_lct_chain_ordering,
    "A10": a10_duality_and_inequalities,
}


def run_suite(criteria=None, fast: bool = False) -> dict:
    names = list(CRITERIA) if not criteria else [c.upper() for c in criteria]
    results = []
    for name in names:
        if name not in CRITERIA:
            raise ValueError(f"unknown criterion {name}")
        start = time.time()
        try:
            passed, details = CRITERIA[name](fast=fast)
        except Exception as exc:  # a crash is a failure, not an abort
            passed, details = False, {"exception": repr(exc)}
        results.append(
            {
                "criterion": name,
                "passed": bool(passed),
                "seconds": time.time() - start,
                "details": details,
            }
        )
    return {
        "all_passed": all(r["passed"] for r in results),
        "fast_mode": fast,
        "criteria": results,
    }
