"""Canonical point ensembles on the sphere.

An ensemble is specified by a section basis of a degree-m line bundle at
level k.  With the Fubini-Study norm on sections, the weighted Slater
matrix in moment coordinates is

    M[i, j] = t_j^(e_i/2) (1 - t_j)^((m - e_i)/2) exp(i e_i theta_j),

whose squared determinant modulus equals the metric norm of the Slater
determinant (the column weights absorb the factors (1+|z|^2)^(-m)).  The
energy per particle is

    E = -(1/(k N)) log |det M|^2,

and the Gibbs law at coupling beta has density exp(-beta N E) relative to
dV^N, i.e. |det M|^(2 beta / k) against the product of reference measures.
Collisions send the energy to +infinity; at beta < 0 they are attractive,
and runs are only conditionally meaningful (the normalizing integral may
diverge), which the sampler monitors.

All randomness flows through counter-based Philox streams keyed by
(seed, chain), so identical inputs reproduce identical outputs.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import qr as _qr
from scipy.stats import beta as _beta_dist
from scipy.stats import chi2 as _chi2

from .geometry import LogSphere, SpherePoint

__all__ = [
    "BasisSpec",
    "Configuration",
    "GibbsParams",
    "EmpiricalStats",
    "slater_log_norm",
    "energy_per_particle",
    "mcmc_sample",
    "empirical_density",
    "log_partition",
    "brute_force_log_partition",
    "band_edges_for",
    "chi_square_vs_reference",
    "InstabilityError",
]


class InstabilityError(RuntimeError):
    """Attractive run drifted into a collision funnel (Z may diverge)."""


# ---------------------------------------------------------------------------
# Specifications


@dataclass(frozen=True)
class BasisSpec:
    """Monomial section basis of a degree-`bundle_degree` bundle at level k.

    sign -1 selects the anticanonical side (positive degree pairs), +1 the
    pluricanonical side (total weight above two).  The particle number is
    N = bundle_degree + 1.
    """

    level: int
    sign: int
    bundle_degree: int
    exponents: tuple[int, ...]

    def __post_init__(self):
        if self.level < 1:
            raise ValueError("level must be >= 1")
        if self.sign not in (-1, +1):
            raise ValueError("sign must be -1 or +1")
        exps = tuple(int(e) for e in self.exponents)
        if len(set(exps)) != len(exps):
            raise ValueError("exponents must be pairwise distinct")
        if any(e < 0 or e > self.bundle_degree for e in exps):
            raise ValueError("exponents must lie in 0..bundle_degree")
        if len(exps) != self.bundle_degree + 1:
            raise ValueError("expected a full basis: N = bundle_degree + 1")
        object.__setattr__(self, "exponents", exps)

    @property
    def n_particles(self) -> int:
        return len(self.exponents)

    @staticmethod
    def canonical(space: LogSphere, k: int, sign: int = -1) -> "BasisSpec":
        """Full monomial basis at level k for the given side of the pair."""
        if not space.level_is_admissible(k):
            raise ValueError(
                f"level {k} does not clear the weight denominators of the pair"
            )
        deg = space.anticanonical_degree if sign == -1 else -space.anticanonical_degree
        m = k * deg
        if m.denominator != 1:
            raise ValueError(f"level {k} gives non-integral bundle degree {m}")
        m = int(m)
        if m < 1:
            raise ValueError("bundle degree must be positive for this sign")
        return BasisSpec(level=k, sign=sign, bundle_degree=m, exponents=tuple(range(m + 1)))

    @staticmethod
    def custom(k: int, bundle_degree: int, sign: int = -1) -> "BasisSpec":
        return BasisSpec(
            level=k,
            sign=sign,
            bundle_degree=bundle_degree,
            exponents=tuple(range(bundle_degree + 1)),
        )


@dataclass(frozen=True)
class Configuration:
    """Ordered particle positions in moment coordinates."""

    t: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.t, dtype=float))
        th = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if t.shape != th.shape or t.ndim != 1 or t.size < 1:
            raise ValueError("configuration arrays must be matching 1-d arrays")
        if np.any(~np.isfinite(t)) or np.any(~np.isfinite(th)):
            raise ValueError("configuration must be finite")
        if np.any(t < 0) or np.any(t > 1):
            raise ValueError("moment coordinate out of range")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "theta", th)

    @staticmethod
    def from_complex(zs: Sequence[complex]) -> "Configuration":
        pts = [SpherePoint.from_complex(z) for z in zs]
        return Configuration(
            np.array([p.t for p in pts]), np.array([p.theta for p in pts])
        )

    def __len__(self) -> int:
        return self.t.size


@dataclass(frozen=True)
class GibbsParams:
    beta: float
    sweeps: int
    proposal_scale: float = 0.35
    seed: int = 0
    chains: int = 1
    burn_in: int = 0

    def __post_init__(self):
        if self.proposal_scale <= 0:
            raise ValueError("proposal_scale must be positive")
        if self.sweeps <= self.burn_in or self.burn_in < 0 or self.chains < 1:
            raise ValueError("need sweeps > burn_in >= 0 and chains >= 1")


@dataclass
class EmpiricalStats:
    histogram: np.ndarray  # bands x sectors counts over retained sweeps
    band_edges: np.ndarray
    acceptance_rate: float
    energy_trace: np.ndarray  # (chains, retained sweeps)
    autocorrelation_time: float
    retained_sweeps: int
    flags: dict = field(default_factory=dict)
    samples_t: Optional[np.ndarray] = None  # (chains, retained, N)
    samples_theta: Optional[np.ndarray] = None
    final_scale: float = 0.0


# ---------------------------------------------------------------------------
# Slater determinants


def _slater_matrix(basis: BasisSpec, t: np.ndarray, theta: np.ndarray) -> np.ndarray:
    e = np.asarray(basis.exponents, dtype=float)[:, None]
    lt = np.log(np.maximum(t, 1e-300))[None, :]
    l1t = np.log(np.maximum(1.0 - t, 1e-300))[None, :]
    mag = np.exp(0.5 * (e * lt + (basis.bundle_degree - e) * l1t))
    return mag * np.exp(1j * e * theta[None, :])


def _logabsdet_qr(mat: np.ndarray) -> float:
    """log |det|, accumulated from the pivoted-QR diagonal; -inf if singular."""
    r = _qr(mat, mode="r", pivoting=True)[0]
    d = np.abs(np.diag(r))
    if np.any(d == 0.0):
        return -math.inf
    return float(np.sum(np.log(d)))


def slater_log_norm(
    config: Configuration,
    basis: BasisSpec,
    transform: Optional[np.ndarray] = None,
) -> float:
    """log of the squared metric norm of the Slater determinant.

    Exactly -inf when two particles coincide or the determinant vanishes.
    `transform` optionally replaces the monomial basis by an invertible
    combination; this shifts the value by a configuration-independent
    constant.
    """
    if len(config) != basis.n_particles:
        raise ValueError(
            f"configuration size {len(config)} != basis size {basis.n_particles}"
        )
    mat = _slater_matrix(basis, config.t, config.theta)
    if transform is not None:
        mat = np.asarray(transform) @ mat
    return 2.0 * _logabsdet_qr(mat)


def energy_per_particle(
    config: Configuration,
    basis: BasisSpec,
    transform: Optional[np.ndarray] = None,
) -> float:
    """E = -(1/(kN)) log |det|^2; +inf at collisions."""
    val = slater_log_norm(config, basis, transform)
    if val == -math.inf:
        return math.inf
    return -val / (basis.level * basis.n_particles)


# ---------------------------------------------------------------------------
# Histogram partition


def band_edges_for(space: LogSphere, bands: int) -> np.ndarray:
    """Equal-reference-mass band edges in t (marked points at poles only)."""
    c0, c1 = space.pole_weights()
    qs = np.linspace(0.0, 1.0, bands + 1)
    edges = _beta_dist.ppf(qs, 1.0 - float(c0), 1.0 - float(c1))
    edges[0], edges[-1] = 0.0, 1.0
    return edges


# ---------------------------------------------------------------------------
# Metropolis sampler


class _ChainState:
    """Slater matrix with its inverse and log |det|, kept in sync.

    Proposals are scored by rank-one determinant ratios; the exact state
    is re-established by a pivoted QR either every sweep (small N) or
    after every N accepted moves (large N), which bounds the drift.
    """

    def __init__(self, basis: BasisSpec, t, theta):
        self.t = np.asarray(t, dtype=float)
        self.theta = np.asarray(theta, dtype=float)
        self.basis = basis
        self.mat = _slater_matrix(basis, self.t, self.theta)
        self.accepted_since_refresh = 0
        self.refresh()

    def refresh(self):
        self.logabsdet = _logabsdet_qr(self.mat)
        self.inv = np.linalg.inv(self.mat)
        self.accepted_since_refresh = 0


def _propose_on_sphere(t, theta, j, scale, rng):
    ct = 1.0 - 2.0 * t[j]
    st = 2.0 * math.sqrt(max(t[j] * (1.0 - t[j]), 0.0))
    x = np.array([st * math.cos(theta[j]), st * math.sin(theta[j]), ct])
    y = x + scale * rng.standard_normal(3)
    norm = math.sqrt(float(y @ y))
    if norm == 0.0:
        return t[j], theta[j]
    y /= norm
    tn = min(max((1.0 - y[2]) / 2.0, 0.0), 1.0)
    return tn, math.atan2(y[1], y[0])


def _run_chain(space, basis, params, chain_idx, bands, sectors, band_edges,
               energy_floor, tune_target, store_samples):
    rng = np.random.Generator(np.random.Philox(key=[params.seed, chain_idx]))
    N = basis.n_particles
    k = basis.level
    beta = params.beta
    # initial positions: uniform on the sphere
    t = rng.random(N)
    theta = rng.random(N) * 2.0 * math.pi
    refresh_each_sweep = N <= 128
    state = _ChainState(basis, t, theta)
    logrho = space.log_density_uniform(state.t, state.theta)
    scale = params.proposal_scale
    accepted = 0
    proposed = 0
    acc_window = 0
    retained = params.sweeps - params.burn_in
    hist = np.zeros((bands, sectors), dtype=np.int64)
    trace = np.empty(retained)
    samp_t = np.empty((retained, N)) if store_samples else None
    samp_th = np.empty((retained, N)) if store_samples else None

    for sweep in range(params.sweeps):
        for j in range(N):
            tn, thn = _propose_on_sphere(state.t, state.theta, j, scale, rng)
            new_col = _slater_matrix(
                basis, np.array([tn]), np.array([thn])
            )[:, 0]
            lr_new = space.log_density_uniform(np.array([tn]), np.array([thn]))[0]
            u = new_col - state.mat[:, j]
            ratio = 1.0 + state.inv[j, :] @ u
            log_det_gain = math.log(abs(ratio)) if abs(ratio) > 0.0 else -math.inf
            dlog = (beta / k) * 2.0 * log_det_gain + (lr_new - logrho[j])
            proposed += 1
            if abs(ratio) < 1e-280:
                continue  # machine-scale collision: state would degenerate
            if math.log(rng.random()) < dlog:
                accepted += 1
                acc_window += 1
                w = state.inv @ u
                rowj = state.inv[j, :].copy()
                state.inv -= np.outer(w, rowj) / ratio
                state.mat[:, j] = new_col
                state.logabsdet += log_det_gain
                state.t[j], state.theta[j] = tn, thn
                logrho[j] = lr_new
                state.accepted_since_refresh += 1
                if not refresh_each_sweep and state.accepted_since_refresh >= N:
                    state.refresh()
        if refresh_each_sweep:
            state.refresh()  # exact determinant once per sweep
        if sweep < params.burn_in:
            # tune the proposal scale toward the target acceptance rate
            if (sweep + 1) % 25 == 0:
                rate = acc_window / (25.0 * N)
                scale = float(np.clip(scale * math.exp(0.6 * (rate - tune_target)), 1e-3, 2.0))
                acc_window = 0
            continue
        energy = -2.0 * state.logabsdet / (k * N)
        if beta < 0 and beta * energy < energy_floor:
            raise InstabilityError(
                f"instability: possible Z divergence (beta*E = {beta * energy:.3g} "
                f"below floor {energy_floor} at sweep {sweep})"
            )
        idx = sweep - params.burn_in
        trace[idx] = energy
        b = np.clip(np.searchsorted(band_edges, state.t, side="right") - 1, 0, bands - 1)
        s = (np.mod(state.theta, 2.0 * math.pi) / (2.0 * math.pi) * sectors).astype(int)
        s = np.clip(s, 0, sectors - 1)
        np.add.at(hist, (b, s), 1)
        if store_samples:
            samp_t[idx] = state.t
            samp_th[idx] = state.theta
    return {
        "hist": hist,
        "trace": trace,
        "acc": accepted / max(proposed, 1),
        "scale": scale,
        "samples_t": samp_t,
        "samples_theta": samp_th,
        "final": Configuration(state.t.copy(), state.theta.copy()),
    }


def integrated_autocorrelation(x: np.ndarray) -> float:
    """Initial-positive-sequence estimate of the integrated autocorrelation."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 8 or np.std(x) == 0.0:
        return 0.5
    xc = x - x.mean()
    acf = np.correlate(xc, xc, mode="full")[n - 1:] / (np.arange(n, 0, -1) * xc.var())
    tau = 0.5
    for lag in range(1, min(n // 2, 2000)):
        if acf[lag] <= 0:
            break
        tau += acf[lag]
    return float(tau)


def mcmc_sample(
    space: LogSphere,
    basis: BasisSpec,
    params: GibbsParams,
    bands: int = 64,
    sectors: int = 32,
    force: bool = False,
    energy_floor: float = -1e3,
    tune_target: float = 0.3,
    store_samples: bool = True,
):
    """Metropolis chains targeting exp(-beta N E) dV^N.

    Single-point tangent-space proposals, reprojected to the sphere, with
    the step size tuned during burn-in.  Chains are independent Philox
    streams merged in index order, so results are reproducible bit for bit.

    Attractive runs (beta < 0) require the pair to clear the level-k
    stability bound check, or an explicit force=True; they are flagged as
    conditional on the finiteness of the normalizing integral.
    """
    flags: dict = {}
    if params.beta < 0:
        from .na_stability import gibbs_stability_check

        verdict = gibbs_stability_check(space, basis.level)
        flags["conditional_on_Z_finite"] = True
        flags["stability_verdict"] = verdict["verdict"]
        if verdict["verdict"] == "UNSTABLE" and not force:
            raise InstabilityError(
                "pair is certified unstable at this level; pass force=True to sample anyway"
            )
    band_edges = band_edges_for(space, bands)
    n_threads = int(os.environ.get("KELAB_THREADS", "1") or "1")
    runs = []
    args = [
        (space, basis, params, ci, bands, sectors, band_edges,
         energy_floor, tune_target, store_samples)
        for ci in range(params.chains)
    ]
    if n_threads > 1 and params.chains > 1:
        with ThreadPoolExecutor(max_workers=min(n_threads, params.chains)) as ex:
            runs = list(ex.map(lambda a: _run_chain(*a), args))
    else:
        runs = [_run_chain(*a) for a in args]

    hist = sum(r["hist"] for r in runs)
    trace = np.stack([r["trace"] for r in runs])
    tau = max(integrated_autocorrelation(r["trace"]) for r in runs)
    stats = EmpiricalStats(
        histogram=hist,
        band_edges=band_edges,
        acceptance_rate=float(np.mean([r["acc"] for r in runs])),
        energy_trace=trace,
        autocorrelation_time=tau,
        retained_sweeps=params.sweeps - params.burn_in,
        flags=flags,
        samples_t=np.stack([r["samples_t"] for r in runs]) if store_samples else None,
        samples_theta=np.stack([r["samples_theta"] for r in runs]) if store_samples else None,
        final_scale=float(np.mean([r["scale"] for r in runs])),
    )
    finals = [r["final"] for r in runs]
    return stats, finals


# ---------------------------------------------------------------------------
# Empirical densities and tests against references


@dataclass(frozen=True)
class EmpiricalDensity:
    """Cell probabilities of the mean empirical measure on the partition."""

    probs: np.ndarray
    band_edges: np.ndarray
    sectors: int

    def band_marginal(self) -> np.ndarray:
        return self.probs.sum(axis=1)


def empirical_density(stats: EmpiricalStats) -> EmpiricalDensity:
    total = stats.histogram.sum()
    if total == 0:
        raise ValueError("empty histogram")
    return EmpiricalDensity(
        probs=stats.histogram / float(total),
        band_edges=stats.band_edges,
        sectors=stats.histogram.shape[1],
    )


def tv_distance_bands(emp: EmpiricalDensity, ref_band_masses: np.ndarray) -> float:
    p = emp.band_marginal()
    q = np.asarray(ref_band_masses, dtype=float)
    q = q / q.sum()
    return 0.5 * float(np.abs(p - q).sum())


def chi_square_vs_reference(
    stats: EmpiricalStats, space: LogSphere, thin: Optional[int] = None
) -> dict:
    """Pearson test of thinned retained samples against the reference.

    Bands carry equal reference mass and sectors are uniform, so the
    expected counts are uniform across cells.  Thinning (default: three
    integrated autocorrelation times) decorrelates successive sweeps.
    """
    if stats.samples_t is None:
        raise ValueError("sampler was run without stored samples")
    if thin is None:
        thin = max(1, int(math.ceil(3.0 * stats.autocorrelation_time)))
    bands = stats.band_edges.size - 1
    sectors = stats.histogram.shape[1]
    counts = np.zeros((bands, sectors), dtype=np.int64)
    for ci in range(stats.samples_t.shape[0]):
        t = stats.samples_t[ci, ::thin].ravel()
        th = stats.samples_theta[ci, ::thin].ravel()
        b = np.clip(np.searchsorted(stats.band_edges, t, side="right") - 1, 0, bands - 1)
        s = np.clip((np.mod(th, 2 * math.pi) / (2 * math.pi) * sectors).astype(int), 0, sectors - 1)
        np.add.at(counts, (b, s), 1)
    total = counts.sum()
    expected = total / counts.size
    stat = float(((counts - expected) ** 2 / expected).sum())
    dof = counts.size - 1
    return {
        "statistic": stat,
        "dof": dof,
        "p_value": float(_chi2.sf(stat, dof)),
        "thin": thin,
        "total": int(total),
    }


# ---------------------------------------------------------------------------
# Partition function estimation


def log_partition(
    space: LogSphere,
    basis: BasisSpec,
    beta: float,
    params: GibbsParams,
    legs: int = 21,
):
    """-(1/N) log Z_N(beta) by thermodynamic integration from beta = 0.

    Z_N(0) = 1 because dV has mass one, and d/dbeta of -(1/N) log Z equals
    the mean energy, so the value is the integral of <E> over the coupling
    path.  Uses equispaced legs, a trapezoid rule with Richardson
    extrapolation from the half-resolution subgrid, and per-leg Monte Carlo
    error bars corrected for autocorrelation.
    """
    if legs < 3 or legs % 2 == 0:
        raise ValueError("legs must be an odd integer >= 3")
    grid = np.linspace(0.0, beta, legs)
    means = np.empty(legs)
    ses = np.empty(legs)
    rows = []
    for i, b in enumerate(grid):
        leg_params = GibbsParams(
            beta=float(b),
            sweeps=params.sweeps,
            proposal_scale=params.proposal_scale,
            seed=params.seed + 7919 * i,
            chains=params.chains,
            burn_in=params.burn_in,
        )
        try:
            stats, _ = mcmc_sample(space, basis, leg_params, store_samples=False)
        except InstabilityError as exc:
            raise RuntimeError(f"leg beta'={b:.6g} failed health checks: {exc}") from exc
        x = stats.energy_trace.ravel()
        tau = max(stats.autocorrelation_time, 0.5)
        means[i] = float(np.mean(x))
        ses[i] = float(np.std(x) * math.sqrt(2.0 * tau / x.size))
        rows.append({"beta": float(b), "mean_energy": means[i], "stderr": ses[i]})
    h = beta / (legs - 1)
    w = np.full(legs, h)
    w[0] = w[-1] = h / 2
    t_fine = float(w @ means)
    coarse = means[::2]
    wc = np.full(coarse.size, 2 * h)
    wc[0] = wc[-1] = h
    t_coarse = float(wc @ coarse)
    value = t_fine + (t_fine - t_coarse) / 3.0
    stat_err = float(np.sqrt(np.sum((w * ses) ** 2)))
    syst_err = abs(t_fine - t_coarse) / 3.0
    return {
        "value": value,
        "stderr": float(math.hypot(stat_err, syst_err)),
        "stat_err": stat_err,
        "syst_err": syst_err,
        "legs": rows,
    }


# ---------------------------------------------------------------------------
# Small-N quadrature oracle


def _pair_kernel(t1, t2, dth):
    """(chord/2)^2 between sphere points in moment coordinates."""
    return (
        t1 * (1.0 - t2)
        + t2 * (1.0 - t1)
        - 2.0 * np.sqrt(t1 * t2 * (1.0 - t1) * (1.0 - t2)) * np.cos(dth)
    )


def brute_force_log_partition(
    space: LogSphere,
    basis: BasisSpec,
    beta: float,
    n_t: int = 48,
    n_theta: int = 128,
    family_points: int = 61,
):
    """-(1/N) log Z_N(beta) by direct tensor-product quadrature (N <= 3).

    Exploits rotational symmetry (marked points at the poles), integrating
    over relative angles only.  Also minimizes the N-particle mean free
    energy over the one-parameter family of Gibbs laws at trial couplings;
    the minimum can never fall below the quadrature value (up to
    tolerance) and is attained where the trial coupling equals beta, which
    is reported alongside.
    """
    N = basis.n_particles
    if N > 3:
        raise ValueError("oracle only: brute force is limited to N <= 3")
    if basis.bundle_degree != N - 1:
        raise ValueError("brute force expects the full basis of degree N-1")
    if space.log_points and not space.is_polar:
        raise ValueError("brute force requires rotational symmetry")
    c0, c1 = space.pole_weights()
    a_par, b_par = 1.0 - float(c0), 1.0 - float(c1)
    k = basis.level

    gl_x, gl_w = np.polynomial.legendre.leggauss(n_t)
    u = 0.5 * (gl_x + 1.0)
    wu = 0.5 * gl_w
    t = _beta_dist.ppf(u, a_par, b_par)
    dth = (np.arange(n_theta) + 0.5) * (2.0 * math.pi / n_theta)
    wth = np.full(n_theta, 1.0 / n_theta)

    if N == 2:
        T1, T2, D = np.meshgrid(t, t, dth, indexing="ij")
        W = wu[:, None, None] * wu[None, :, None] * wth[None, None, :]
        logK = np.log(np.maximum(_pair_kernel(T1, T2, D), 1e-300))
    else:
        T1, T2, T3, D2, D3 = np.meshgrid(t, t, t, dth, dth, indexing="ij")
        W = (
            wu[:, None, None, None, None]
            * wu[None, :, None, None, None]
            * wu[None, None, :, None, None]
            * wth[None, None, None, :, None]
            * wth[None, None, None, None, :]
        )
        logK = (
            np.log(np.maximum(_pair_kernel(T1, T2, D2), 1e-300))
            + np.log(np.maximum(_pair_kernel(T1, T3, D3), 1e-300))
            + np.log(np.maximum(_pair_kernel(T2, T3, D3 - D2), 1e-300))
        )

    energy = -logK / (k * N)

    def log_Z(b):
        w = (b / k) * logK
        m = float(np.max(w))
        return m + math.log(float(np.sum(W * np.exp(w - m))))

    def mean_energy(b):
        w = (b / k) * logK
        m = float(np.max(w))
        e = np.exp(w - m)
        z = float(np.sum(W * e))
        return float(np.sum(W * e * energy)) / z

    value = -log_Z(beta) / N

    # N-particle mean free energy along the Gibbs family at trial coupling b:
    # F(b) = (beta - b) <E>_b - (1/N) log Z(b), equal to the value at b = beta.
    bs = np.linspace(min(0.0, 2 * beta), max(0.0, 2 * beta), family_points)
    fvals = np.array([(beta - b) * mean_energy(b) - log_Z(b) / N for b in bs])
    i_min = int(np.argmin(fvals))
    return {
        "value": value,
        "family_inf": float(fvals[i_min]),
        "family_argmin": float(bs[i_min]),
        "family_couplings": bs,
        "family_values": fvals,
        "gibbs_value": float((beta - beta) * mean_energy(beta) - log_Z(beta) / N),
    }
