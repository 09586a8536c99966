"""Command-line laboratory driver.

Subcommands: sample, solve, delta, lct-chain, na-energy, partition,
crosscheck.  Every run reads a flat key-value config file describing the
space, writes fixed-schema CSV/JSON artifacts atomically (temp + rename)
into --out, and finishes with a manifest.json recording the full config
echo, seed, content hashes of inputs and outputs, and wall time.

Exit codes: 0 success, 2 validation failure (single-line reason on
stderr), 3 computation failure (diagnostics file written when possible).
CSV schemas are documented in docs/formats.md and only change with a
schema version bump.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .geometry import (
    LogSphere,
    NonKltError,
    SpherePoint,
    ToricFano,
    build_radial_geometry,
)
from .ensemble import (
    BasisSpec,
    GibbsParams,
    InstabilityError,
    brute_force_log_partition,
    log_partition,
    mcmc_sample,
)
from .na_stability import (
    CurveValuation,
    ProductValuation,
    delta,
    delta_k,
    lct_chain,
    log_discrepancy,
    na_energy_per_particle,
)
from .variational import KESolveError, functional_report, solve_ke

SCHEMA_VERSION = 1


class ValidationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Config parsing


def parse_config(text: str) -> dict:
    """Flat `section.key = value` lines; values are JSON, else raw strings."""
    cfg: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"config line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ValidationError(f"config line {lineno}: empty key")
        try:
            cfg[key] = json.loads(val)
        except json.JSONDecodeError:
            cfg[key] = val
    return cfg


def _as_fraction(v) -> Fraction:
    if isinstance(v, bool):
        raise ValidationError(f"expected a rational, got {v!r}")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        return Fraction(str(v))
    if isinstance(v, str):
        return Fraction(v)
    raise ValidationError(f"expected a rational, got {v!r}")


def _parse_log_point(entry) -> tuple[SpherePoint, Fraction]:
    if not isinstance(entry, (list, tuple)) or len(entry) not in (2, 3):
        raise ValidationError(f"bad log point entry {entry!r}")
    if len(entry) == 2:
        tag, c = entry
        if tag == "inf":
            return SpherePoint.infinity(), _as_fraction(c)
        if tag in ("origin", 0, 0.0):
            return SpherePoint(0.0), _as_fraction(c)
        raise ValidationError(f"bad log point tag {tag!r}")
    re_, im_, c = entry
    if re_ == "inf":
        return SpherePoint.infinity(), _as_fraction(c)
    return SpherePoint.from_complex(complex(float(re_), float(im_))), _as_fraction(c)


def build_space(cfg: dict):
    kind = cfg.get("space.kind")
    if kind == "log_sphere":
        entries = cfg.get("space.log_points", [])
        try:
            pts = tuple(_parse_log_point(e) for e in entries)
            return LogSphere(pts)
        except NonKltError as exc:
            raise ValidationError(str(exc)) from exc
    if kind == "toric":
        verts = cfg.get("space.vertices")
        if not verts:
            raise ValidationError("space.vertices required for toric spaces")
        dim = len(verts[0])
        return ToricFano(dimension=dim, vertices=tuple(tuple(v) for v in verts))
    raise ValidationError(f"space.kind must be log_sphere or toric, got {kind!r}")


# ---------------------------------------------------------------------------
# Artifacts and manifests


@dataclass
class RunManifest:
    config_echo: dict
    seed: Optional[int]
    tool_version: str
    input_hash: str
    outputs: list = field(default_factory=list)
    wall_time: float = 0.0
    kind: str = ""
    parameters: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "config_echo": self.config_echo,
            "parameters": self.parameters,
            "seed": self.seed,
            "tool_version": self.tool_version,
            "input_hash": self.input_hash,
            "outputs": self.outputs,
            "wall_time": self.wall_time,
        }


@dataclass
class ExperimentPlan:
    kind: str
    parameters: dict
    config_text: str
    out_dir: Path


def _atomic_write(path: Path, text: str) -> str:
    tmp = path.with_name(path.name + f".tmp-{os.getpid()}")
    tmp.write_text(text, encoding="utf-8", newline="\n")
    os.replace(tmp, path)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class ArtifactSink:
    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.records: list[dict] = []
        out_dir.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str):
        digest = _atomic_write(self.out_dir / name, text)
        self.records.append({"name": name, "sha256": digest})


def csv_lines(header: str, rows) -> str:
    return "\n".join([header] + [",".join(str(x) for x in row) for row in rows]) + "\n"


def _json_default(o):
    if isinstance(o, Fraction):
        return f"{o.numerator}/{o.denominator}"
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, SpherePoint):
        return {"t": o.t, "theta": o.theta}
    if isinstance(o, (CurveValuation,)):
        return {
            "point": None if o.point is None else {"t": o.point.t, "theta": o.point.theta},
            "scale": f"{o.scale.numerator}/{o.scale.denominator}",
        }
    if hasattr(o, "vector"):
        return {"vector": list(o.vector), "scale": str(o.scale)}
    return str(o)


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, default=_json_default) + "\n"


def frac_str(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


# ---------------------------------------------------------------------------
# Runners (one per plan kind)


def _basis_from(space, params) -> BasisSpec:
    k = params.get("k", 1)
    n = params.get("n")
    sign = params.get("sign", -1)
    if n is not None:
        return BasisSpec.custom(k=k, bundle_degree=int(n) - 1, sign=sign)
    return BasisSpec.canonical(space, k, sign=sign)


def _run_sample(plan: ExperimentPlan, sink: ArtifactSink):
    cfg = parse_config(plan.config_text)
    space = build_space(cfg)
    if not isinstance(space, LogSphere):
        raise ValidationError("sampling is sphere-side only")
    p = plan.parameters
    basis = _basis_from(space, p)
    gp = GibbsParams(
        beta=p["beta"],
        sweeps=p["sweeps"],
        seed=p["seed"],
        chains=p.get("chains", 1),
        burn_in=p.get("burn_in", max(1, p["sweeps"] // 5)),
        proposal_scale=p.get("proposal_scale", 0.35),
    )
    stats, _ = mcmc_sample(
        space,
        basis,
        gp,
        bands=p.get("bands", 64),
        sectors=p.get("sectors", 32),
        force=p.get("force", False),
        store_samples=False,
    )
    bands, sectors = stats.histogram.shape
    rows = [
        (b, s, int(stats.histogram[b, s]))
        for b in range(bands)
        for s in range(sectors)
    ]
    sink.write("histogram.csv", csv_lines("band,sector,count", rows))
    trow = []
    for ci in range(stats.energy_trace.shape[0]):
        for sw, e in enumerate(stats.energy_trace[ci]):
            trow.append((ci, sw, repr(float(e))))
    sink.write("energy_trace.csv", csv_lines("chain,sweep,energy", trow))
    return {
        "acceptance_rate": stats.acceptance_rate,
        "autocorrelation_time": stats.autocorrelation_time,
        "flags": stats.flags,
        "n_particles": basis.n_particles,
        "bundle_degree": basis.bundle_degree,
    }


def _run_solve(plan: ExperimentPlan, sink: ArtifactSink):
    cfg = parse_config(plan.config_text)
    space = build_space(cfg)
    if not isinstance(space, LogSphere):
        raise ValidationError("the radial solver is sphere-side only")
    p = plan.parameters
    grid_size = p.get("grid", cfg.get("grid.nodes", 2001))
    geom = build_radial_geometry(space, int(grid_size))
    pot, mu, info = solve_ke(geom, p["beta"], grid_size=int(grid_size))
    t = geom.grid.nodes
    sink.write(
        "potential.csv",
        csv_lines("t,u", [(repr(float(a)), repr(float(b))) for a, b in zip(t, pot.values)]),
    )
    sink.write(
        "density.csv",
        csv_lines(
            "t,density", [(repr(float(a)), repr(float(b))) for a, b in zip(t, mu.values)]
        ),
    )
    rep = functional_report(mu, p["beta"], pot)
    sink.write("functionals.json", dump_json(rep.as_dict()))
    sink.write(
        "solve_log.json",
        dump_json(
            {
                "iterations": info["iterations"],
                "residual": info["residual"],
                "residual_history": info["history"],
                "reconstruction_error": info["reconstruction_error"],
            }
        ),
    )
    return {"residual": info["residual"], "iterations": info["iterations"]}


def _run_delta(plan: ExperimentPlan, sink: ArtifactSink):
    cfg = parse_config(plan.config_text)
    space = build_space(cfg)
    p = plan.parameters
    kmax = p.get("k", 3)
    box = p.get("box", 5)
    rows = []
    for k in range(1, kmax + 1):
        if isinstance(space, LogSphere) and not space.level_is_admissible(k):
            continue
        try:
            val, witness = delta_k(space, k, box_radius=box)
        except ValueError:
            continue
        rows.append((k, val.numerator, val.denominator, _witness_str(witness)))
    sink.write("delta_k.csv", csv_lines("k,delta_k_num,delta_k_den,witness", rows))
    lim = delta(space, box_radius=box)
    sink.write(
        "delta.json",
        dump_json(
            {
                "delta": frac_str(lim["value"]),
                "witness": lim["witness"],
                "interior_certificate": lim["interior_certificate"],
                "warning": lim["warning"],
            }
        ),
    )
    return {"delta": frac_str(lim["value"])}


def _witness_str(w) -> str:
    if w is None:
        return "none"
    if isinstance(w, CurveValuation):
        if w.point is None:
            return "generic"
        if w.point.is_origin_pole:
            return "origin"
        if w.point.is_infinity_pole:
            return "inf"
        return f"t={w.point.t:.6g};theta={w.point.theta:.6g}"
    return "a=(" + " ".join(str(x) for x in w.vector) + ")"


def _run_lct_chain(plan: ExperimentPlan, sink: ArtifactSink):
    cfg = parse_config(plan.config_text)
    space = build_space(cfg)
    if not isinstance(space, LogSphere):
        raise ValidationError("determinant threshold chains are curve-side")
    k = plan.parameters.get("k", 1)
    rep = lct_chain(space, k)
    rows = [
        (
            i,
            frac_str(r["ratio"]),
            frac_str(r["log_discrepancy"]),
            frac_str(r["na_energy"]),
        )
        for i, r in enumerate(rep["rows"])
    ]
    sink.write("lct_rows.csv", csv_lines("index,ratio,log_discrepancy,na_energy", rows))
    sink.write(
        "lct_chain.json",
        dump_json(
            {
                "level": rep["level"],
                "bound": frac_str(rep["bound"]),
                "delta_k": frac_str(rep["delta_k"]),
                "margin": frac_str(rep["margin"]),
                "chain_ok": rep["chain_ok"],
                "one_sided": rep["one_sided"],
                "skipped_zero_energy": rep["skipped_zero_energy"],
                "witness": rep["witness"],
            }
        ),
    )
    return {"bound": frac_str(rep["bound"]), "chain_ok": rep["chain_ok"]}


def _parse_valuation_factor(entry, space):
    if entry is None:
        return None
    pt = entry.get("point")
    scale = _as_fraction(entry.get("scale", 1))
    if pt == "origin":
        p = SpherePoint(0.0)
    elif pt == "inf":
        p = SpherePoint.infinity()
    elif pt == "generic" or pt is None:
        p = None
    else:
        p = SpherePoint.from_complex(complex(float(pt[0]), float(pt[1])))
    return CurveValuation(p, scale)


def _run_na_energy(plan: ExperimentPlan, sink: ArtifactSink):
    cfg = parse_config(plan.config_text)
    space = build_space(cfg)
    if not isinstance(space, LogSphere):
        raise ValidationError("per-particle energies are curve-side here")
    p = plan.parameters
    k = p.get("k", 1)
    basis = BasisSpec.canonical(space, k, sign=-1)
    spec = json.loads(Path(p["valuations"]).read_text())
    rows = []
    for i, rec in enumerate(spec):
        factors = tuple(_parse_valuation_factor(e, space) for e in rec["factors"])
        if len(factors) != basis.n_particles:
            raise ValidationError(
                f"valuation {i}: {len(factors)} factors but N = {basis.n_particles}"
            )
        pv = ProductValuation(factors)
        e = na_energy_per_particle(pv, basis)
        a = sum(
            (log_discrepancy(f, space) for f in factors if f is not None), Fraction(0)
        )
        rows.append((i, frac_str(e), frac_str(a)))
    sink.write("na_energy.csv", csv_lines("index,na_energy,log_discrepancy", rows))
    return {"count": len(rows)}


def _run_partition(plan: ExperimentPlan, sink: ArtifactSink):
    cfg = parse_config(plan.config_text)
    space = build_space(cfg)
    if not isinstance(space, LogSphere):
        raise ValidationError("partition estimation is sphere-side only")
    p = plan.parameters
    basis = _basis_from(space, p)
    gp = GibbsParams(
        beta=p["beta"],
        sweeps=p["sweeps"],
        seed=p["seed"],
        chains=p.get("chains", 1),
        burn_in=p.get("burn_in", max(1, p["sweeps"] // 5)),
    )
    res = log_partition(space, basis, p["beta"], gp, legs=p.get("legs", 21))
    sink.write(
        "partition.csv",
        csv_lines(
            "beta,neg_log_Z_over_N,stderr",
            [(p["beta"], repr(res["value"]), repr(res["stderr"]))],
        ),
    )
    sink.write(
        "legs.csv",
        csv_lines(
            "beta,mean_energy,stderr",
            [(r["beta"], repr(r["mean_energy"]), repr(r["stderr"])) for r in res["legs"]],
        ),
    )
    if basis.n_particles <= 3:
        bf = brute_force_log_partition(space, basis, p["beta"])
        sink.write(
            "brute_force.json",
            dump_json(
                {
                    "value": bf["value"],
                    "family_inf": bf["family_inf"],
                    "family_argmin": bf["family_argmin"],
                }
            ),
        )
    return {"value": res["value"], "stderr": res["stderr"]}


def _run_crosscheck(plan: ExperimentPlan, sink: ArtifactSink):
    from .acceptance import run_suite

    p = plan.parameters
    only = p.get("only")
    results = run_suite(criteria=only, fast=p.get("fast", False))
    sink.write("acceptance_report.json", dump_json(results))
    for r in results["criteria"]:
        print(f"{r['criterion']}: {'PASS' if r['passed'] else 'FAIL'} ({r['seconds']:.1f}s)")
    if not results["all_passed"]:
        raise RuntimeError("acceptance criteria failed: see acceptance_report.json")
    return {"all_passed": True}


_RUNNERS = {
    "sample": _run_sample,
    "solve": _run_solve,
    "delta": _run_delta,
    "lct-chain": _run_lct_chain,
    "na-energy": _run_na_energy,
    "partition": _run_partition,
    "crosscheck": _run_crosscheck,
}


def run(plan: ExperimentPlan) -> RunManifest:
    """Execute a validated plan; artifacts first, manifest last, all atomic."""
    start = time.time()
    sink = ArtifactSink(plan.out_dir)
    summary = _RUNNERS[plan.kind](plan, sink)
    manifest = RunManifest(
        config_echo=parse_config(plan.config_text),
        seed=plan.parameters.get("seed"),
        tool_version=__version__,
        input_hash=hashlib.sha256(plan.config_text.encode("utf-8")).hexdigest(),
        outputs=sink.records,
        wall_time=time.time() - start,
        kind=plan.kind,
        parameters={k: v for k, v in plan.parameters.items()},
    )
    manifest.parameters["summary"] = summary
    _atomic_write(plan.out_dir / "manifest.json", dump_json(manifest.as_dict()))
    return manifest


# ---------------------------------------------------------------------------
# Argument parsing


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ke-lab", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required)
        p.add_argument("--out", required=True)

    p = sub.add_parser("sample", help="Metropolis sampling of the point ensemble")
    common(p)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--n", type=int, help="particle count (basis of degree n-1)")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--sweeps", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--burn-in", type=int, dest="burn_in")
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("solve", help="radial constant-curvature solve")
    common(p)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--grid", type=int, default=2001)

    p = sub.add_parser("delta", help="stability thresholds, exact rationals")
    common(p)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--box", type=int, default=5)

    p = sub.add_parser("lct-chain", help="determinant-divisor threshold bounds")
    common(p)
    p.add_argument("--k", type=int, default=1)

    p = sub.add_parser("na-energy", help="per-particle determinant orders")
    common(p)
    p.add_argument("--valuations", required=True)
    p.add_argument("--k", type=int, default=1)

    p = sub.add_parser("partition", help="thermodynamic integration of log Z")
    common(p)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--sweeps", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--legs", type=int, default=21)
    p.add_argument("--chains", type=int, default=1)

    p = sub.add_parser("crosscheck", help="cross-module verification suites")
    p.add_argument("--suite", default="acceptance", choices=["acceptance"])
    p.add_argument("--out", required=True)
    p.add_argument("--fast", action="store_true")
    p.add_argument("--only", help="comma-separated criterion names, e.g. A3,A7")

    return ap


def plan_from_args(args) -> ExperimentPlan:
    params = {
        k: v
        for k, v in vars(args).items()
        if k not in ("command", "config", "out") and v is not None
    }
    if args.command == "crosscheck":
        if params.get("only"):
            params["only"] = [s.strip().upper() for s in params["only"].split(",")]
        config_text = ""
    else:
        path = Path(args.config)
        if not path.exists():
            raise ValidationError(f"config file not found: {path}")
        config_text = path.read_text(encoding="utf-8")
        parse_config(config_text)  # validate before any computation
    return ExperimentPlan(
        kind=args.command,
        parameters=params,
        config_text=config_text,
        out_dir=Path(args.out),
    )


def main(argv=None) -> int:
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        plan = plan_from_args(args)
    except (ValidationError, ValueError, NonKltError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        run(plan)
    except (ValidationError, NonKltError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (KESolveError, InstabilityError, RuntimeError) as exc:
        try:
            diag = Path(args.out) / "diagnostics.json"
            diag.parent.mkdir(parents=True, exist_ok=True)
            _atomic_write(diag, dump_json({"error": str(exc), "kind": args.command}))
        except OSError:
            pass
        print(f"computation failed: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
