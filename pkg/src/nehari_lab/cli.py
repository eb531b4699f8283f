"""Command-line front end: ``nehari-lab <command> [options]``.

Every command writes its files into ``--out`` and prints one JSON document on
stdout (exit codes 0 and 3); a short human summary goes to stderr.  Exit
codes: 0 success, 2 usage error, 3 solver or audit failure.

Configuration precedence is flag > ``--config`` JSON file > built-in default.
The resolved configuration (minus the output directory and worker count,
which do not change any number) is embedded in every output so that
identical configurations give byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .curve import trace_curve
from .eigen import solve_first_eigen
from .energy import EnergyParams, energy
from .errors import InvalidExponent, NehariLabError, NonConvergence
from .mesh import Mesh, check_exponent
from .optim import SolverOptions
from .oracle import exact_lambda1, shoot_lambda1
from .parallel import resolve_jobs
from .phase import cells_to_csv, cells_to_json, full_audit, region_matrix, scan
from .solvers import (
    SWEEP_KINDS,
    boundary_sweep,
    dichotomy_probe,
    global_min,
    ground_state,
    landmarks,
    multiplicity_search,
    normalized_distance,
    predicted_region,
    region_a_point,
    sweep_path,
)

log = logging.getLogger("nehari_lab")

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 2, 3

DEFAULTS = {
    "domain": [0.0, 1.0],
    "n": 511,
    "p": 3.0,
    "q": 2.0,
    "tol_rel": SolverOptions.tol_rel,
    "tol_grad": SolverOptions.tol_grad,
    "max_iters": SolverOptions.max_iters,
    "boundary_band": SolverOptions.boundary_band,
    "emit_witness": False,
}

# settings that never change a computed number; kept out of the provenance block
_RUNTIME_ONLY = ("out", "jobs")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    domain: list
    n: int
    p: float
    q: float
    tol_rel: float
    tol_grad: float
    max_iters: int
    boundary_band: float
    emit_witness: bool
    out: str = "nehari-out"
    jobs: int = 1
    params: dict = field(default_factory=dict)

    def validate(self):
        a, b = self.domain
        if not (math.isfinite(a) and math.isfinite(b) and a < b):
            raise UsageError(f"--domain needs a < b, got {a},{b}")
        if self.n < 16:
            raise UsageError(f"--n must be >= 16, got {self.n}")
        for name in ("tol_rel", "tol_grad", "boundary_band"):
            if not getattr(self, name) > 0:
                raise UsageError(f"--{name.replace('_', '-')} must be positive")
        if self.max_iters < 1:
            raise UsageError("--max-iters must be >= 1")
        if self.command not in ("eigen",):
            try:
                check_exponent(self.p, "p")
                check_exponent(self.q, "q")
            except InvalidExponent as exc:
                raise UsageError(str(exc)) from None
            if not self.p > self.q:
                raise UsageError(f"need p > q > 1, got p={self.p}, q={self.q}")

    @property
    def mesh(self) -> Mesh:
        return Mesh(float(self.domain[0]), float(self.domain[1]), int(self.n))

    @property
    def opts(self) -> SolverOptions:
        return SolverOptions(tol_rel=self.tol_rel, tol_grad=self.tol_grad,
                             max_iters=self.max_iters, boundary_band=self.boundary_band)

    def provenance(self) -> dict:
        d = asdict(self)
        for k in _RUNTIME_ONLY:
            d.pop(k)
        return d


# -- parsing ---------------------------------------------------------------


def _pair(text: str) -> list:
    try:
        a, b = (float(s) for s in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'a,b', got {text!r}") from None
    return [a, b]


def _range(text: str) -> list:
    a, b = _pair(text)
    if not (math.isfinite(a) and math.isfinite(b) and a < b):
        raise argparse.ArgumentTypeError(f"range needs finite lo < hi, got {text!r}")
    return [a, b]


def _grid(text: str) -> list:
    try:
        na, nb = (int(s) for s in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'NAxNB', got {text!r}") from None
    if na < 2 or nb < 2:
        raise argparse.ArgumentTypeError("grid needs at least 2 points per axis")
    return [na, nb]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run configuration")
    g.add_argument("--config", help="JSON file with defaults for any option below")
    g.add_argument("--domain", type=_pair, help="interval a,b (default 0,1)")
    g.add_argument("--n", type=int, help="interior mesh nodes (default 511, >= 16)")
    g.add_argument("--p", type=float, help="larger exponent (default 3)")
    g.add_argument("--q", type=float, help="smaller exponent (default 2)")
    g.add_argument("--tol-rel", type=float, dest="tol_rel")
    g.add_argument("--tol-grad", type=float, dest="tol_grad")
    g.add_argument("--max-iters", type=int, dest="max_iters")
    g.add_argument("--boundary-band", type=float, dest="boundary_band",
                   help="relative band within which a point counts as on a separating line")
    g.add_argument("--out", help="output directory (default nehari-out)")
    g.add_argument("--jobs", type=int, help="worker processes (env NEHARI_LAB_JOBS)")
    g.add_argument("--emit-witness", action="store_const", const=True, dest="emit_witness",
                   help="embed nodal witness arrays in JSON output")
    g.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="nehari-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("eigen", parents=[common], help="first eigenpair of the r-Laplacian")
    s.add_argument("--r", type=float, required=True)

    s = sub.add_parser("curve", parents=[common], help="trace the threshold curve beta*(alpha)")
    s.add_argument("--samples", type=int, default=None, help="number of samples (default 24)")

    s = sub.add_parser("phase", parents=[common], help="scan the (alpha, beta) plane")
    s.add_argument("--alpha-range", type=_range, dest="alpha_range")
    s.add_argument("--beta-range", type=_range, dest="beta_range")
    s.add_argument("--grid", type=_grid, help="NAxNB (default 21x21)")
    s.add_argument("--audit-tol", type=float, dest="audit_tol", help="default 1e-6")

    for name, text in (("ground", "least energy d on the Nehari set"),
                       ("minimize", "global minimum m")):
        s = sub.add_parser(name, parents=[common], help=text)
        s.add_argument("--alpha", type=float, required=True)
        s.add_argument("--beta", type=float, required=True)

    s = sub.add_parser("multiplicity", parents=[common],
                       help="two positive solutions inside region A")
    s.add_argument("--alpha", type=float, help="default: centroid of region A")
    s.add_argument("--beta", type=float, help="default: centroid of region A")

    s = sub.add_parser("sweep", parents=[common], help="follow witnesses towards a boundary")
    s.add_argument("--kind", choices=SWEEP_KINDS, required=True)
    s.add_argument("--points", type=int, default=None, help="path length (default 8)")

    s = sub.add_parser("dichotomy", parents=[common],
                       help="fibered energy along the family at (lambda1(p), beta*)")
    s.add_argument("--k-max", type=int, dest="k_max", help="smallest eps is 2^-k_max (default 40)")
    return parser


_COMMAND_PARAMS = {
    "eigen": {"r": None},
    "curve": {"samples": 24},
    "phase": {"alpha_range": None, "beta_range": None, "grid": [21, 21], "audit_tol": 1e-6},
    "ground": {"alpha": None, "beta": None},
    "minimize": {"alpha": None, "beta": None},
    "multiplicity": {"alpha": None, "beta": None},
    "sweep": {"kind": None, "points": 8},
    "dichotomy": {"k_max": 40},
}


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    """Merge defaults, the --config file and explicit flags (in rising priority)."""
    file_cfg = {}
    if ns.config:
        try:
            with open(ns.config, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {ns.config}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")

    def pick(key, default):
        v = getattr(ns, key, None)
        if v is not None:
            return v
        return file_cfg.get(key, default)

    base = {k: pick(k, v) for k, v in DEFAULTS.items()}
    params = {k: pick(k, v) for k, v in _COMMAND_PARAMS[ns.command].items()}
    try:
        cfg = RunConfig(
            command=ns.command,
            domain=[float(x) for x in base["domain"]],
            n=int(base["n"]), p=float(base["p"]), q=float(base["q"]),
            tol_rel=float(base["tol_rel"]), tol_grad=float(base["tol_grad"]),
            max_iters=int(base["max_iters"]), boundary_band=float(base["boundary_band"]),
            emit_witness=bool(base["emit_witness"]),
            out=pick("out", "nehari-out"),
            jobs=resolve_jobs(pick("jobs", None)),
            params=params,
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad configuration value: {exc}") from None
    cfg.validate()
    return cfg


# -- output helpers --------------------------------------------------------


def _clean(x):
    """JSON-safe copy: non-finite floats become strings or null, arrays become lists."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_clean(float(v)) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, ensure_ascii=False) + "\n"


def _write(cfg: RunConfig, name: str, text: str) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, name)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _say(msg: str):
    print(msg, file=sys.stderr)


def _value_json(v, emit_witness: bool) -> Optional[dict]:
    if v is None:
        return None
    d = v.summary()
    d["value"] = v.value
    d["probe"] = list(v.probe)
    if emit_witness and v.witness is not None:
        d["witness"] = v.witness.values
    return d


def _region(cfg: RunConfig, lm, alpha, beta) -> dict:
    label, tags = predicted_region(lm, alpha, beta)
    return {"region": label, "boundary_tags": tags, "on_boundary": bool(tags)}


def _landmark_json(lm) -> dict:
    return {"lambda1_p": lm.lam_p, "lambda1_q": lm.lam_q,
            "alpha_star": lm.alpha_star, "beta_star": lm.beta_star}


# -- commands --------------------------------------------------------------


def cmd_eigen(cfg: RunConfig) -> tuple:
    r = cfg.params["r"]
    try:
        check_exponent(r)
    except InvalidExponent as exc:
        raise UsageError(str(exc)) from None
    mesh = cfg.mesh
    ep = solve_first_eigen(mesh, r, cfg.opts)
    exact = exact_lambda1(r, mesh.length)
    shoot = shoot_lambda1(r, mesh.length)
    rel = abs(ep.lambda1 - exact) / exact
    doc = {
        "config": cfg.provenance(),
        "r": r, "lambda1": ep.lambda1, "residual": ep.residual, "iterations": ep.iterations,
        "oracle": {"exact_lambda1": exact, "shoot_lambda1": shoot, "relative_error": rel},
        "phi": ep.phi.values,
    }
    buf = io.StringIO()
    for x, y in zip(mesh.x_full, ep.phi.full()):
        buf.write(f"{x!r} {float(y)!r}\n")
    doc["files"] = [_write(cfg, "eigen.json", dumps(doc)), _write(cfg, "eigen_profile.txt", buf.getvalue())]
    _say(f"lambda1({r}) = {ep.lambda1:.10g}   exact {exact:.10g}   relative error {rel:.3e}")
    return EXIT_OK, doc


def cmd_curve(cfg: RunConfig) -> tuple:
    ns = cfg.params["samples"]
    if ns < 2:
        raise UsageError("--samples must be >= 2")
    tr = trace_curve(cfg.mesh, cfg.p, cfg.q, ns, cfg.opts, jobs=cfg.jobs)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha", "beta_star", "constraint_value", "kkt_residual"])
    for s in tr.samples:
        w.writerow([repr(s.alpha), repr(s.beta_star_alpha), repr(float(s.constraint_value)),
                    repr(float(s.kkt_residual))])
    frac = len(tr.failures) / ns
    summary = {
        "config": cfg.provenance(),
        "lambda1_p": tr.lambda_p, "lambda1_q": tr.lambda_q,
        "alpha_star": tr.alpha_star, "beta_star": tr.beta_star,
        "monotone": tr.monotone,
        "samples": len(tr.samples),
        "failures": [{"alpha": a, "error": e} for a, e in tr.failures],
        "failure_fraction": frac,
    }
    summary["files"] = [_write(cfg, "curve.csv", buf.getvalue()),
                        _write(cfg, "curve_summary.json", dumps(summary))]
    _say(f"curve: {len(tr.samples)}/{ns} samples, monotone={tr.monotone}, "
         f"beta* = {tr.beta_star:.8g}, lambda1(q) = {tr.lambda_q:.8g}")
    return (EXIT_FAILURE if frac > 0.2 else EXIT_OK), summary


def cmd_phase(cfg: RunConfig) -> tuple:
    P = cfg.params
    res = scan(cfg.mesh, cfg.p, cfg.q, P["alpha_range"], P["beta_range"], tuple(P["grid"]),
               cfg.opts, jobs=cfg.jobs)
    audit = full_audit(res, P["audit_tol"])
    summary = {
        "config": cfg.provenance(),
        "landmarks": _landmark_json(res.landmarks),
        "alphas": res.alphas, "betas": res.betas,
        "failed_cells": [list(ix) for ix in res.failed],
        "audit": audit.as_dict(),
        "audit_ok": audit.ok,
    }
    files = [
        _write(cfg, "phase.csv", cells_to_csv(res.cells)),
        _write(cfg, "phase.json", dumps({"config": cfg.provenance(),
                                         "cells": cells_to_json(res.cells, cfg.emit_witness)})),
        _write(cfg, "phase_regions.txt", region_matrix(res)),
        _write(cfg, "phase_audit.json", dumps(summary)),
    ]
    summary["files"] = files
    _say(f"phase: {len(res.cells)} cells, {len(res.failed)} failed, "
         f"{len(audit.violations)} monotonicity violations, "
         f"{len(audit.mismatches)} classification mismatches, "
         f"m-jump exhibited={audit.m_jump_exhibited}")
    ok = audit.ok and not res.failed
    return (EXIT_OK if ok else EXIT_FAILURE), summary


def cmd_ground(cfg: RunConfig) -> tuple:
    a, b = cfg.params["alpha"], cfg.params["beta"]
    lm = landmarks(cfg.mesh, cfg.p, cfg.q, cfg.opts)
    rep = ground_state(cfg.mesh, EnergyParams(cfg.p, cfg.q, a, b), cfg.opts, lm=lm)
    doc = {"config": cfg.provenance(), "alpha": a, "beta": b, **_region(cfg, lm, a, b),
           "landmarks": _landmark_json(lm),
           "d": _value_json(rep.d_value, cfg.emit_witness),
           "pde_residual_u1": rep.pde_residual_u1, "pde_residual_u2": rep.pde_residual_u2,
           "failures": rep.failures}
    doc["files"] = [_write(cfg, "ground.json", dumps(doc))]
    d = rep.d_value
    _say(f"d({a:g}, {b:g}) = {d.kind.value if not d.is_finite else f'{d.value:.10g}'}"
         f"  attained={d.attained}  region={doc['region']}  code={d.code}")
    return EXIT_OK, doc


def cmd_minimize(cfg: RunConfig) -> tuple:
    a, b = cfg.params["alpha"], cfg.params["beta"]
    lm = landmarks(cfg.mesh, cfg.p, cfg.q, cfg.opts)
    m = global_min(cfg.mesh, EnergyParams(cfg.p, cfg.q, a, b), cfg.opts, lm=lm)
    doc = {"config": cfg.provenance(), "alpha": a, "beta": b, **_region(cfg, lm, a, b),
           "landmarks": _landmark_json(lm), "m": _value_json(m, cfg.emit_witness)}
    doc["files"] = [_write(cfg, "minimize.json", dumps(doc))]
    _say(f"m({a:g}, {b:g}) = {m.kind.value if not m.is_finite else f'{m.value:.10g}'}"
         f"  attained={m.attained}  code={m.code}")
    return EXIT_OK, doc


def cmd_multiplicity(cfg: RunConfig) -> tuple:
    lm = landmarks(cfg.mesh, cfg.p, cfg.q, cfg.opts)
    a0, b0 = region_a_point(lm)
    a = cfg.params["alpha"] if cfg.params["alpha"] is not None else a0
    b = cfg.params["beta"] if cfg.params["beta"] is not None else b0
    P = EnergyParams(cfg.p, cfg.q, a, b)
    try:
        rep = multiplicity_search(cfg.mesh, P, cfg.opts, lm=lm)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    doc = {"config": cfg.provenance(), "alpha": a, "beta": b, **_region(cfg, lm, a, b),
           "landmarks": _landmark_json(lm), "failures": rep.failures}
    for name, u, res in (("u1", rep.u1, rep.pde_residual_u1), ("u2", rep.u2, rep.pde_residual_u2)):
        doc[name] = None if u is None else {"energy": energy(u, P), "pde_residual": res}
        if u is not None and cfg.emit_witness:
            doc[name]["witness"] = u.values
    dist = (normalized_distance(rep.u1, rep.u2)
            if rep.u1 is not None and rep.u2 is not None else float("nan"))
    doc["normalized_distance"] = dist
    doc["files"] = [_write(cfg, "multiplicity.json", dumps(doc))]
    _say(f"multiplicity at ({a:.8g}, {b:.8g}): "
         + ", ".join(f"E({k})={doc[k]['energy']:.4g}" for k in ("u1", "u2") if doc[k])
         + f", distance {dist:.4g}")
    return (EXIT_FAILURE if rep.failures else EXIT_OK), doc


def cmd_sweep(cfg: RunConfig) -> tuple:
    kind, npts = cfg.params["kind"], cfg.params["points"]
    if npts < 3:
        raise UsageError("--points must be >= 3")
    lm = landmarks(cfg.mesh, cfg.p, cfg.q, cfg.opts)
    path = sweep_path(lm, kind, npts)
    rep = boundary_sweep(cfg.mesh, cfg.p, cfg.q, path, cfg.opts, kind=kind)
    cols = ["alpha", "beta", "energy", "norm_p", "grad_norm_p", "dist_phi_p", "dist_phi_q",
            "dist_limit", "residual", "error"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for pt in rep.points:
        row = []
        for c in cols:
            v = getattr(pt, c)
            row.append("" if v is None or (isinstance(v, float) and math.isnan(v))
                       else (repr(float(v)) if isinstance(v, float) else v))
        w.writerow(row)
    doc = {"config": cfg.provenance(), "kind": kind, "trend": rep.trend,
           "final_distance": rep.final_distance, "survived": rep.survived,
           "landmarks": _landmark_json(lm),
           "points": [asdict(pt) for pt in rep.points]}
    doc["files"] = [_write(cfg, f"sweep_{kind}.csv", buf.getvalue()),
                    _write(cfg, f"sweep_{kind}.json", dumps(doc))]
    _say(f"sweep {kind}: trend={rep.trend}, final distance {rep.final_distance:.3e}, "
         f"survived {rep.survived:.0%}")
    ok = rep.trend == kind and rep.survived >= 0.8
    return (EXIT_OK if ok else EXIT_FAILURE), doc


def _relation(p, q) -> str:
    if p < 2 * q:
        return "p<2q"
    return "p>2q" if p > 2 * q else "p=2q"


def cmd_dichotomy(cfg: RunConfig) -> tuple:
    k_max = cfg.params["k_max"]
    if k_max < 4:
        raise UsageError("--k-max must be >= 4")
    rep = dichotomy_probe(cfg.mesh, cfg.p, cfg.q, cfg.opts, k_max=k_max)
    label = f"{rep.verdict} ({_relation(cfg.p, cfg.q)})"
    doc = {"config": cfg.provenance(), "alpha": rep.alpha, "beta": rep.beta,
           "verdict": rep.verdict, "label": label, "expected": rep.expected,
           "slope": rep.slope, "min_value": rep.min_value,
           "eps": rep.eps, "values": rep.values}
    doc["files"] = [_write(cfg, "dichotomy.json", dumps(doc))]
    _say(f"dichotomy: {label}, slope {rep.slope:.4f}, min J {rep.min_value:.4g}")
    return EXIT_OK, doc


COMMANDS = {
    "eigen": cmd_eigen, "curve": cmd_curve, "phase": cmd_phase, "ground": cmd_ground,
    "minimize": cmd_minimize, "multiplicity": cmd_multiplicity, "sweep": cmd_sweep,
    "dichotomy": cmd_dichotomy,
}


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = resolve_config(ns)
        code, doc = COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        _say(f"nehari-lab: error: {exc}")
        return EXIT_USAGE
    except NonConvergence as exc:
        doc = {"error": str(exc), "best_value": exc.value, "iterations": exc.iterations}
        _say(f"nehari-lab: solver failure: {exc} (best value {exc.value})")
        sys.stdout.write(dumps(doc))
        return EXIT_FAILURE
    except NehariLabError as exc:
        _say(f"nehari-lab: solver failure: {exc}")
        sys.stdout.write(dumps({"error": str(exc), "best_value": None}))
        return EXIT_FAILURE
    sys.stdout.write(dumps(doc))
    return code


if __name__ == "__main__":
    sys.exit(main())
