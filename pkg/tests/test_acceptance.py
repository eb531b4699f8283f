"""Acceptance criteria, one test each, at their stated tolerances.

Each test records a PASS/FAIL line that is printed in the terminal summary.
"""

import filecmp
import math
import os
import time

import numpy as np

from conftest import record
from nehari_lab import (
    EnergyParams,
    Field,
    Mesh,
    compute_alpha_star,
    compute_beta_star,
    dichotomy_probe,
    energy,
    energy_gradient,
    fibered_j,
    fibered_j_gradient,
    first_eigen,
    full_audit,
    g_beta,
    h_alpha,
    landmarks,
    linear_independence_check,
    multiplicity_search,
    region_a_point,
    scan,
    shoot_lambda1,
    solve_first_eigen,
    sweep_path,
    boundary_sweep,
    t_projection,
    trace_curve,
    verify_kkt,
)
from nehari_lab.cli import main as cli_main
from nehari_lab.solvers import normalized_distance


def test_c01_eigen_golden_values(mesh, opts):
    t0 = time.perf_counter()
    lam2 = solve_first_eigen(mesh, 2.0, opts).lambda1
    errs = {2.0: abs(lam2 - math.pi ** 2) / math.pi ** 2}
    for r in (1.5, 3.0, 5.0):
        lam = solve_first_eigen(mesh, r, opts).lambda1
        errs[r] = abs(lam - shoot_lambda1(r, 1.0)) / shoot_lambda1(r, 1.0)
    elapsed = time.perf_counter() - t0
    ok = errs[2.0] < 1e-3 and all(errs[r] < 5e-3 for r in (1.5, 3.0, 5.0)) and elapsed < 30
    record(1, "eigenvalue golden values", ok,
           ", ".join(f"r={r}: {e:.2e}" for r, e in errs.items()) + f"; {elapsed:.1f}s")
    assert errs[2.0] < 1e-3
    for r in (1.5, 3.0, 5.0):
        assert errs[r] < 5e-3, (r, errs[r])
    assert elapsed < 30


def test_c02_critical_value_ordering(mesh, opts):
    rows, ok = [], True
    for p, q in ((3.0, 2.0), (5.0, 2.0), (2.5, 1.5)):
        lp, lq = first_eigen(mesh, p, opts), first_eigen(mesh, q, opts)
        a_s = compute_alpha_star(mesh, p, q, opts)
        b_s = compute_beta_star(mesh, p, q, opts)
        ma = (a_s - lp.lambda1) / lp.lambda1
        mb = (b_s - lq.lambda1) / lq.lambda1
        li = linear_independence_check(lp.phi, lq.phi)
        good = ma > 1e-3 and mb > 1e-3 and li > 1e-3
        ok &= good
        rows.append(f"({p:g},{q:g}) a*:{ma:.2e} b*:{mb:.2e} indep:{li:.2e}")
    record(2, "alpha* > lambda1(p), beta* > lambda1(q)", ok, "; ".join(rows))
    assert ok, rows


def test_c03_curve_properties(mesh, opts):
    t0 = time.perf_counter()
    tr = trace_curve(mesh, 3.0, 2.0, 24, opts)
    elapsed = time.perf_counter() - t0
    assert not tr.failures
    s = tr.samples
    e_left = abs(s[0].beta_star_alpha - tr.beta_star) / tr.beta_star
    e_right = abs(s[-1].beta_star_alpha - tr.lambda_q) / tr.lambda_q
    head = [x for x in s if x.alpha <= tr.alpha_star]
    decreasing = all(b.beta_star_alpha < a.beta_star_alpha - 1e-6 for a, b in zip(head, head[1:]))
    interior = head[1:-1]
    pick = [interior[i] for i in np.linspace(0, len(interior) - 1, 5).round().astype(int)]
    kkt = [verify_kkt(x, EnergyParams(3.0, 2.0, x.alpha, x.beta_star_alpha)).residual for x in pick]
    ok = e_left < 5e-3 and e_right < 5e-3 and decreasing and max(kkt) < 1e-3 and elapsed < 300
    record(3, "threshold curve", ok,
           f"endpoint errors {e_left:.2e}/{e_right:.2e}, strictly decreasing={decreasing}, "
           f"max KKT {max(kkt):.2e}; {elapsed:.1f}s")
    assert e_left < 5e-3 and e_right < 5e-3
    assert decreasing
    assert max(kkt) < 1e-3
    assert elapsed < 300


def _random_admissible(mesh, rng):
    """Random smooth field and parameters with H(u) G(u) < 0."""
    x = mesh.x
    while True:
        k = np.arange(1, 7)
        c = rng.normal(size=6) / k ** 1.5
        v = np.sin(np.pi * np.outer(x, k)) @ c
        p = rng.uniform(2.2, 5.0)
        q = rng.uniform(1.2, p - 0.5)
        P = EnergyParams(p, q, rng.uniform(0.0, 150.0), rng.uniform(0.0, 60.0))
        u = Field(mesh, v)
        H, G = h_alpha(u, P), g_beta(u, P)
        if H * G < 0 and min(abs(H), abs(G)) > 1e-6 * (abs(H) + abs(G)):
            return u, P


def test_c04_nehari_mechanics():
    mesh = Mesh(0.0, 1.0, 255)
    rng = np.random.default_rng(20240501)
    grid = np.exp(np.linspace(math.log(1e-8), math.log(1e8), 400001))
    res = grid[1] / grid[0] - 1.0
    worst_t, worst_id = 0.0, 0.0
    for _ in range(100):
        u, P = _random_admissible(mesh, rng)
        t = t_projection(u, P)
        H, G = h_alpha(u, P), g_beta(u, P)
        s = grid
        vals = s ** P.p * H / P.p + s ** P.q * G / P.q
        k = int(np.argmin(vals)) if H > 0 else int(np.argmax(vals))
        assert 0 < k < len(s) - 1, "extremum at the edge of the scan"
        worst_t = max(worst_t, abs(s[k] - t) / t)
        w = u * t
        e, g = energy(w, P), g_beta(w, P)
        ident = (P.p - P.q) / (P.p * P.q) * g
        worst_id = max(worst_id, abs(e - ident) / max(abs(e), 1e-300))
    ok = worst_t <= res and worst_id < 1e-8
    record(4, "Nehari projection and identity", ok,
           f"max |t_scan - t|/t = {worst_t:.2e} (grid {res:.2e}), max identity error {worst_id:.2e}")
    assert worst_t <= res
    assert worst_id < 1e-8


def test_c05_phase_diagram(mesh, opts):
    t0 = time.perf_counter()
    jobs = int(os.environ.get("NEHARI_LAB_JOBS", "4"))
    res = scan(mesh, 3.0, 2.0, grid=(21, 21), opts=opts, jobs=jobs)
    audit = full_audit(res, 1e-6)
    elapsed = time.perf_counter() - t0
    ok = (not res.failed and not audit.mismatches and not audit.violations
          and audit.m_jump_exhibited and not audit.cross_violations and elapsed < 900)
    cells = sorted({(round(m["alpha"], 4), round(m["beta"], 4)) for m in audit.mismatches})
    record(5, "phase diagram", ok,
           f"{len(audit.mismatches)} classification mismatches {cells}, "
           f"{len(audit.violations)} monotonicity violations, "
           f"m-jump exhibited={audit.m_jump_exhibited}, failed cells {len(res.failed)}; {elapsed:.1f}s")
    assert not res.failed
    assert audit.m_jump_exhibited
    assert not audit.cross_violations
    assert elapsed < 900
    assert not audit.mismatches, audit.mismatches
    assert not audit.violations


def test_c06_dichotomy(mesh, opts):
    a = dichotomy_probe(mesh, 3.0, 2.0, opts)
    b = dichotomy_probe(mesh, 5.0, 2.0, opts)
    in_range = [j for e, j in zip(b.eps, b.values) if 2.0 ** -20 <= e <= 0.5]
    lower = min(in_range) if in_range else -math.inf
    ok = (a.min_value < -1e4 and a.slope < 0 and a.verdict == "divergent"
          and math.isfinite(lower) and b.verdict == "bounded")
    record(6, "dichotomy", ok,
           f"(3,2): min J {a.min_value:.3e}, slope {a.slope:.3f}, {a.verdict}; "
           f"(5,2): inf J on [2^-20, 2^-1] = {lower:.3e}, slope {b.slope:.3f}, {b.verdict}")
    assert a.min_value < -1e4 and a.slope < 0 and a.verdict == "divergent"
    assert len(in_range) >= 10 and math.isfinite(lower) and b.verdict == "bounded"


def test_c07_multiplicity(mesh, opts):
    lm = landmarks(mesh, 3.0, 2.0, opts)
    a, b = region_a_point(lm)
    P = EnergyParams(3.0, 2.0, a, b)
    rep = multiplicity_search(mesh, P, opts, lm=lm)
    assert not rep.failures, rep.failures
    e1, e2 = energy(rep.u1, P), energy(rep.u2, P)
    dist = normalized_distance(rep.u1, rep.u2)
    ok = (e1 < -1e-6 and e2 > 1e-6 and rep.pde_residual_u1 < 1e-3
          and rep.pde_residual_u2 < 1e-3 and dist > 1e-3)
    record(7, "multiplicity in region A", ok,
           f"at ({a:.5f}, {b:.5f}): E(u1)={e1:.3e}, E(u2)={e2:.3e}, residuals "
           f"{rep.pde_residual_u1:.1e}/{rep.pde_residual_u2:.1e}, distance {dist:.3e}")
    assert e1 < -1e-6 and e2 > 1e-6
    assert rep.pde_residual_u1 < 1e-3 and rep.pde_residual_u2 < 1e-3
    assert dist > 1e-3


def test_c08_boundary_sweeps(mesh, opts):
    lm = landmarks(mesh, 3.0, 2.0, opts)
    out, ok = [], True
    for kind in ("divergent", "vanishing", "bounded"):
        rep = boundary_sweep(mesh, 3.0, 2.0, sweep_path(lm, kind, 8), opts, kind=kind)
        good = rep.trend == kind and rep.final_distance < 5e-2
        ok &= good
        out.append(f"{kind}: trend {rep.trend}, final distance {rep.final_distance:.2e}")
    record(8, "boundary sweeps", ok, "; ".join(out))
    assert ok, out


def test_c09_gradient_checks():
    """Central differences along smooth random directions, step scaled to the field."""
    mesh = Mesh(0.0, 1.0, 127)
    rng = np.random.default_rng(7)
    x = mesh.x
    modes = np.sin(np.pi * np.outer(x, np.arange(1, 6)))
    worst, n = 0.0, 0
    for i in range(50):
        p = rng.uniform(2.2, 5.0)
        q = rng.uniform(2.0, p - 0.1) if i % 2 else rng.uniform(1.5, 2.0)
        P = EnergyParams(p, q, rng.uniform(0, 100), rng.uniform(0, 40))
        v = np.sin(np.pi * x) * (1 + 0.3 * np.sin(3 * np.pi * x * rng.uniform(0.5, 1.5))) * rng.uniform(0.5, 2)
        u = Field(mesh, v)
        dv = modes @ rng.normal(size=5)
        d = Field(mesh, dv / np.abs(dv).max())
        use_j = i % 3 == 0 and h_alpha(u, P) * g_beta(u, P) < 0
        f = fibered_j if use_j else energy
        grad = fibered_j_gradient(u, P) if use_j else energy_gradient(u, P)
        eps = 1e-5 * np.abs(v).max()
        fd = (f(u + d * eps, P) - f(u - d * eps, P)) / (2 * eps)
        an = float(grad.values @ d.values)
        err = abs(fd - an) / max(abs(an), abs(fd), 1e-300)
        worst = max(worst, err)
        n += err < 1e-5
    record(9, "gradient checks", n == 50, f"{n}/50 within 1e-5, worst relative error {worst:.2e}")
    assert n == 50


def _run_twice(tmp_path, argv, name):
    dirs = []
    for k in (1, 2):
        out = tmp_path / f"{name}{k}"
        code = cli_main(argv + ["--out", str(out)])
        assert code in (0, 3)
        dirs.append(out)
    files = sorted(os.listdir(dirs[0]))
    same = files == sorted(os.listdir(dirs[1])) and all(
        filecmp.cmp(dirs[0] / f, dirs[1] / f, shallow=False) for f in files)
    return same, files


def test_c10_determinism(tmp_path, capsys):
    results = {}
    for name, argv in (("curve", ["curve", "--samples", "24"]),
                       ("phase", ["phase", "--jobs", "4"]),
                       ("multiplicity", ["multiplicity"])):
        results[name] = _run_twice(tmp_path, argv, name)
    capsys.readouterr()
    ok = all(same for same, _ in results.values())
    record(10, "determinism", ok,
           "; ".join(f"{k}: {'identical' if s else 'DIFFERENT'} ({len(f)} files)"
                     for k, (s, f) in results.items()))
    assert ok
