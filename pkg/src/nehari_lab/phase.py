"""Classification of the (alpha, beta) plane by m and d, grid scans, and audits."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .energy import EnergyParams
from .errors import NehariLabError
from .mesh import Mesh
from .optim import SolverOptions
from .parallel import ordered_map
from .solvers import (
    ExtendedValue,
    Landmarks,
    ValueKind,
    global_min,
    ground_state,
    landmarks,
    predicted_region,
)

log = logging.getLogger(__name__)

CSV_COLUMNS = ["alpha", "beta", "region", "m_kind", "m_value", "m_attained",
               "d_kind", "d_value", "d_attained", "residual", "diagnostics_code"]

REGION_CODES = {"A": 1, "B": 2, "C": 3, "D": 4}


@dataclass
class PhaseCell:
    alpha: float
    beta: float
    region: str
    tags: List[str] = field(default_factory=list)
    m: Optional[ExtendedValue] = None
    d: Optional[ExtendedValue] = None
    errors: List[str] = field(default_factory=list)
    index: Tuple[int, int] = (0, 0)

    @property
    def region_label(self) -> str:
        return self.region + ("*" if self.tags else "")

    @property
    def residual(self) -> float:
        r = [v.residual for v in (self.m, self.d)
             if v is not None and v.attained and not math.isnan(v.residual)]
        return max(r) if r else float("nan")

    @property
    def diagnostics_code(self) -> str:
        parts = []
        for name, v in (("m", self.m), ("d", self.d)):
            parts.append(f"{name}:{v.code}" if v is not None else f"{name}:failed")
        return ";".join(parts)


def classify(mesh: Mesh, p: float, q: float, alpha: float, beta: float,
             opts: Optional[SolverOptions] = None, *, lm: Optional[Landmarks] = None) -> PhaseCell:
    """m and d at one point; solver errors are recorded on the cell, never raised."""
    opts = opts or SolverOptions()
    lm = lm or landmarks(mesh, p, q, opts)
    region, tags = predicted_region(lm, alpha, beta)
    cell = PhaseCell(float(alpha), float(beta), region, tags)
    P = EnergyParams(p, q, alpha, beta)
    try:
        cell.m = global_min(mesh, P, opts, lm=lm)
    except NehariLabError as exc:
        cell.errors.append(f"m: {exc}")
    try:
        cell.d = ground_state(mesh, P, opts, lm=lm).d_value
    except NehariLabError as exc:
        cell.errors.append(f"d: {exc}")
    return cell


@dataclass
class Expectation:
    """Predicted behaviour for one point: kind, sign and attainment of m and d."""

    m_kind: ValueKind
    m_sign: int
    m_attained: Optional[bool]
    d_kind: ValueKind
    d_sign: int
    d_attained: Optional[bool]


def predict(lm: Landmarks, alpha: float, beta: float) -> Expectation:
    """Assemble the expected m and d from the region structure alone (no solves).

    m: -inf right of lambda_1(p); 0 (attained by 0) when also beta <= lambda_1(q);
    negative and attained left of lambda_1(p) above lambda_1(q); on
    alpha = lambda_1(p) negative and attained below beta*, -inf above it,
    and at beta* decided by p vs 2q.
    d: +inf in B; positive and attained in C off the line beta = lambda_1(q);
    on that line positive below alpha*, 0 attained at alpha*, 0 not attained
    beyond; negative and attained in A; -inf in D.
    """
    region, tags = predicted_region(lm, alpha, beta)
    F, M, Pl = ValueKind.Finite, ValueKind.MinusInfinity, ValueKind.PlusInfinity
    on_lp, on_lq = lm.near(alpha, lm.lam_p), lm.near(beta, lm.lam_q)
    on_bs = lm.near(beta, lm.beta_star)
    corner = on_lp and on_bs
    p, q = lm.p, lm.q

    if alpha > lm.lam_p and not on_lp:
        m = (M, -1, False)
    elif beta <= lm.lam_q or on_lq:
        m = (F, 0, True)
    elif on_lp and beta > lm.beta_star and not on_bs:
        m = (M, -1, False)
    elif corner:
        m = (M, -1, False) if p < 2 * q else (F, -1, True if p > 2 * q else None)
    else:
        m = (F, -1, True)

    if region == "B":
        d = (Pl, 1, False)
    elif region == "C":
        if on_lq and lm.near(alpha, lm.alpha_star):
            d = (F, 0, True)
        elif on_lq and alpha > lm.alpha_star:
            d = (F, 0, False)
        else:
            d = (F, 1, True)
    elif region == "A":
        if corner:
            d = (M, -1, False) if p < 2 * q else (F, -1, True if p > 2 * q else None)
        else:
            d = (F, -1, True)
    else:
        d = (M, -1, False)
    return Expectation(*m, *d)


def matches(value: Optional[ExtendedValue], kind: ValueKind, sign: int,
            attained: Optional[bool], tol: float = 0.0) -> bool:
    """Does a computed value agree with a predicted (kind, sign, attained)?"""
    if value is None or value.kind is not kind:
        return False
    if kind is ValueKind.Finite:
        if sign > 0 and not value.value > tol:
            return False
        if sign < 0 and not value.value < -tol:
            return False
        if sign == 0 and abs(value.value) > max(tol, 1e-12):
            return False
    return value.attained == attained


def cell_matches(cell: PhaseCell, lm: Landmarks) -> Tuple[bool, bool]:
    e = predict(lm, cell.alpha, cell.beta)
    return (matches(cell.m, e.m_kind, e.m_sign, e.m_attained),
            matches(cell.d, e.d_kind, e.d_sign, e.d_attained))


def default_ranges(lm: Landmarks):
    return (lm.lam_p - 2.0, lm.alpha_star + 2.0), (lm.lam_q - 2.0, lm.beta_star + 2.0)


@dataclass
class ScanResult:
    cells: List[PhaseCell]
    alphas: np.ndarray
    betas: np.ndarray
    failed: List[Tuple[int, int]]
    landmarks: Landmarks

    def grid(self) -> List[List[PhaseCell]]:
        n = len(self.alphas)
        return [self.cells[i * n:(i + 1) * n] for i in range(len(self.betas))]


def _cell_task(args):
    mesh, p, q, a, b, opts, idx = args
    cell = classify(mesh, p, q, a, b, opts)
    cell.index = idx
    return cell


def scan(mesh: Mesh, p: float, q: float, alpha_range=None, beta_range=None,
         grid: Tuple[int, int] = (21, 21), opts: Optional[SolverOptions] = None,
         jobs=1, progress: Optional[Callable[[int, int], None]] = None) -> ScanResult:
    """Row-major scan: row i has beta_i, column j has alpha_j.

    Ranges default to [lambda_1(p) - 2, alpha* + 2] x [lambda_1(q) - 2, beta* + 2].
    """
    opts = opts or SolverOptions()
    lm = landmarks(mesh, p, q, opts)
    ar, br = default_ranges(lm)
    alpha_range = alpha_range or ar
    beta_range = beta_range or br
    na, nb = grid
    if na < 2 or nb < 2:
        raise ValueError("grid needs at least 2 points per axis")
    alphas = np.linspace(alpha_range[0], alpha_range[1], na)
    betas = np.linspace(beta_range[0], beta_range[1], nb)
    tasks = [(mesh, p, q, float(a), float(b), opts, (i, j))
             for i, b in enumerate(betas) for j, a in enumerate(alphas)]
    if progress is None or jobs != 1:
        cells = ordered_map(_cell_task, tasks, jobs)
    else:
        cells = []
        for k, t in enumerate(tasks):
            cells.append(_cell_task(t))
            progress(k + 1, len(tasks))
    failed = [c.index for c in cells if c.errors]
    return ScanResult(cells, alphas, betas, failed, lm)


# -- audits ----------------------------------------------------------------


def _dval(cell: PhaseCell) -> Optional[float]:
    return None if cell.d is None else cell.d.value


@dataclass
class AuditReport:
    pairs_checked: int
    violations: List[dict]
    mismatches: List[dict] = field(default_factory=list)
    m_jump_rows: List[dict] = field(default_factory=list)
    m_jump_exhibited: bool = False
    cross_violations: List[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations and not self.mismatches and not self.cross_violations

    def as_dict(self) -> dict:
        return {
            "pairs_checked": self.pairs_checked,
            "monotonicity_violations": self.violations,
            "classification_mismatches": self.mismatches,
            "m_jump_exhibited": self.m_jump_exhibited,
            "m_jump_rows": self.m_jump_rows,
            "cross_violations": self.cross_violations,
        }


def monotonicity_audit(cells: Sequence[PhaseCell], tol: float = 1e-6) -> AuditReport:
    """d(alpha, beta) >= d(alpha', beta') whenever alpha <= alpha', beta <= beta'.

    Infinite values compare as extended reals; failed cells are skipped.
    Also checks m <= d wherever d is finite and negative.
    """
    pts = [(c.alpha, c.beta, _dval(c), c) for c in cells if _dval(c) is not None]
    viol, n = [], 0
    for a, b, d, c in pts:
        for a2, b2, d2, c2 in pts:
            if a <= a2 and b <= b2 and (a, b) != (a2, b2):
                n += 1
                if d2 - d > tol and not (math.isinf(d) and d == d2):
                    viol.append({"from": [a, b], "to": [a2, b2], "d_from": _num(d), "d_to": _num(d2),
                                 "excess": _num(d2 - d)})
    cross = []
    for c in cells:
        if c.d is not None and c.m is not None and c.d.is_finite and c.d.value < 0:
            if c.m.value > c.d.value + tol * (1 + abs(c.d.value)):
                cross.append({"alpha": c.alpha, "beta": c.beta, "m": _num(c.m.value), "d": c.d.value})
    return AuditReport(n, viol, cross_violations=cross)


def classification_audit(cells: Sequence[PhaseCell], lm: Landmarks) -> List[dict]:
    """Cells whose computed m or d disagrees with ``predict``."""
    out = []
    for c in cells:
        m_ok, d_ok = cell_matches(c, lm)
        if not (m_ok and d_ok):
            e = predict(lm, c.alpha, c.beta)
            out.append({
                "alpha": c.alpha, "beta": c.beta, "region": c.region,
                "m_ok": m_ok, "d_ok": d_ok,
                "expected_d": e.d_kind.value, "got_d": c.d.kind.value if c.d else None,
                "code": c.diagnostics_code, "errors": list(c.errors),
                "notes": list(c.d.notes) if c.d else [],
            })
    return out


def m_jump_audit(result: ScanResult, opts: Optional[SolverOptions] = None) -> Tuple[bool, List[dict]]:
    """Exhibit the jump of m across {lambda_1(p)} x (-inf, beta*).

    For every scanned row with beta < beta*, m is evaluated on the line
    itself and compared with the nearest scanned column to its right, which
    lies within one grid step: finite on the line, -inf beside it.
    """
    lm = result.landmarks
    opts = opts or lm.opts
    right = [j for j, a in enumerate(result.alphas) if a > lm.lam_p and not lm.near(a, lm.lam_p)]
    if not right:
        return False, []
    jr = right[0]
    step = float(result.alphas[1] - result.alphas[0])
    rows = []
    grid = result.grid()
    for i, b in enumerate(result.betas):
        if not b < lm.beta_star or lm.near(b, lm.beta_star):
            continue
        on = global_min(lm.mesh, EnergyParams(lm.p, lm.q, lm.lam_p, float(b)), opts, lm=lm)
        cell = grid[i][jr]
        ok = (on.is_finite and cell.m is not None and cell.m.kind is ValueKind.MinusInfinity
              and result.alphas[jr] - lm.lam_p <= step)
        rows.append({"beta": float(b), "m_on_line": on.value, "alpha_right": float(result.alphas[jr]),
                     "m_right": cell.m.kind.value if cell.m else None, "jump": ok})
    return bool(rows) and all(r["jump"] for r in rows), rows


def full_audit(result: ScanResult, tol: float = 1e-6) -> AuditReport:
    rep = monotonicity_audit(result.cells, tol)
    rep.mismatches = classification_audit(result.cells, result.landmarks)
    rep.m_jump_exhibited, rep.m_jump_rows = m_jump_audit(result)
    return rep


def strictness_check(mesh: Mesh, p: float, q: float, alpha: float, beta: float,
                     step: float = 0.1, tol: float = 1e-6,
                     opts: Optional[SolverOptions] = None) -> Tuple[float, float, bool]:
    """d(alpha, beta) - d(alpha + step, beta + step) > tol inside region A."""
    opts = opts or SolverOptions()
    lm = landmarks(mesh, p, q, opts)
    d0 = ground_state(mesh, EnergyParams(p, q, alpha, beta), opts, lm=lm).d_value
    d1 = ground_state(mesh, EnergyParams(p, q, alpha + step, beta + step), opts, lm=lm).d_value
    return d0.value, d1.value, d0.value - d1.value > tol


def usc_probe(mesh: Mesh, p: float, q: float, radii=(0.4, 0.2, 0.1, 0.05),
              opts: Optional[SolverOptions] = None) -> List[Tuple[float, float]]:
    """(r, max d over the 8 neighbours at distance r of (alpha*, lambda_1(q))).

    Upper semicontinuity at that point means these maxima approach a value
    no larger than d(alpha*, lambda_1(q)) = 0.
    """
    opts = opts or SolverOptions()
    lm = landmarks(mesh, p, q, opts)
    out = []
    for r in radii:
        vals = []
        for da in (-r, 0.0, r):
            for db in (-r, 0.0, r):
                if da == 0.0 and db == 0.0:
                    continue
                P = EnergyParams(p, q, lm.alpha_star + da, lm.lam_q + db)
                vals.append(ground_state(mesh, P, opts, lm=lm).d_value.value)
        out.append((r, max(vals)))
    return out


# -- serialization ---------------------------------------------------------


def _num(x):
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    x = float(x)
    if math.isnan(x):
        return ""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _attained(v: Optional[ExtendedValue]) -> str:
    if v is None:
        return ""
    return "unknown" if v.attained is None else ("true" if v.attained else "false")


def cell_row(c: PhaseCell) -> dict:
    return {
        "alpha": _fmt(c.alpha), "beta": _fmt(c.beta), "region": c.region_label,
        "m_kind": c.m.kind.value if c.m else "failed",
        "m_value": _fmt(c.m.value) if c.m else "",
        "m_attained": _attained(c.m),
        "d_kind": c.d.kind.value if c.d else "failed",
        "d_value": _fmt(c.d.value) if c.d else "",
        "d_attained": _attained(c.d),
        "residual": _fmt(c.residual),
        "diagnostics_code": c.diagnostics_code,
    }


def cells_to_csv(cells: Sequence[PhaseCell]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for c in cells:
        w.writerow(cell_row(c))
    return buf.getvalue()


def cells_to_json(cells: Sequence[PhaseCell], emit_witness: bool = False) -> list:
    out = []
    for c in cells:
        d = {"alpha": c.alpha, "beta": c.beta, "region": c.region, "tags": list(c.tags),
             "index": list(c.index), "errors": list(c.errors)}
        for name, v in (("m", c.m), ("d", c.d)):
            if v is None:
                d[name] = None
                continue
            s = v.summary()
            s["value"] = _num(v.value)
            s["probe_min"] = _num(s["probe_min"])
            if emit_witness and v.witness is not None:
                s["witness"] = [float(x) for x in v.witness.values]
            d[name] = s
        out.append(d)
    return out


def region_matrix(result: ScanResult) -> str:
    """Whitespace-separated region codes (A=1, B=2, C=3, D=4), one row per beta."""
    lines = []
    for row in result.grid():
        lines.append(" ".join(str(REGION_CODES[c.region]) for c in row))
    return "\n".join(lines) + "\n"
