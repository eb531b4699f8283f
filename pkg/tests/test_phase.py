import csv
import io

import pytest

from nehari_lab import classify, landmarks, scan
from nehari_lab.phase import (
    CSV_COLUMNS,
    PhaseCell,
    cells_to_csv,
    cells_to_json,
    full_audit,
    monotonicity_audit,
    predict,
    region_matrix,
)
from nehari_lab.solvers import ExtendedValue


@pytest.fixture(scope="module")
def small_scan(mesh, opts):
    lm = landmarks(mesh, 3.0, 2.0, opts)
    return scan(mesh, 3.0, 2.0, (lm.lam_p - 1.5, lm.alpha_star - 0.5),
                (lm.lam_q - 1.0, lm.beta_star + 1.0), grid=(5, 5), opts=opts)


def test_scan_layout_and_audit(small_scan):
    assert len(small_scan.cells) == 25 and not small_scan.failed
    assert [c.index for c in small_scan.cells[:3]] == [(0, 0), (0, 1), (0, 2)]
    rep = full_audit(small_scan)
    assert rep.ok, rep.as_dict()
    assert set(c.region for c in small_scan.cells) == {"A", "B", "C", "D"}


def test_csv_and_json(small_scan):
    text = cells_to_csv(small_scan.cells)
    assert "\r" not in text
    rows = list(csv.DictReader(io.StringIO(text)))
    assert list(rows[0].keys()) == CSV_COLUMNS and len(rows) == 25
    assert {r["d_kind"] for r in rows} <= {"finite", "-inf", "+inf"}
    js = cells_to_json(small_scan.cells, emit_witness=True)
    assert any("witness" in (c["d"] or {}) for c in js)
    assert all("witness" not in (c["d"] or {}) for c in cells_to_json(small_scan.cells))


def test_region_matrix(small_scan):
    lines = region_matrix(small_scan).splitlines()
    assert len(lines) == 5 and all(len(l.split()) == 5 for l in lines)


def test_classify_records_prediction(mesh, opts):
    lm = landmarks(mesh, 3.0, 2.0, opts)
    cell = classify(mesh, 3.0, 2.0, lm.lam_p - 0.5, lm.lam_q + 0.5, opts, lm=lm)
    e = predict(lm, cell.alpha, cell.beta)
    assert cell.region == "A" and e.d_sign < 0
    assert cell.m.value <= cell.d.value + 1e-9
    assert cell.diagnostics_code.startswith("m:")


def test_monotonicity_audit_detects_violation():
    lo = PhaseCell(1.0, 1.0, "C", d=ExtendedValue.finite(1.0))
    hi = PhaseCell(2.0, 2.0, "C", d=ExtendedValue.finite(2.0))
    assert monotonicity_audit([lo, hi]).violations
    hi.d = ExtendedValue.finite(0.5)
    assert not monotonicity_audit([lo, hi]).violations
