import math

import pytest

from nehari_lab import (
    EnergyParams,
    ValueKind,
    boundary_sweep,
    dichotomy_probe,
    energy,
    global_min,
    ground_state,
    landmarks,
    multiplicity_search,
    pde_residual,
    predicted_region,
    region_a_point,
    sweep_path,
)
from nehari_lab.solvers import ExtendedValue, normalized_distance


@pytest.fixture(scope="module")
def lm(mesh, opts):
    return landmarks(mesh, 3.0, 2.0, opts)


def P(a, b):
    return EnergyParams(3.0, 2.0, a, b)


def test_predicted_regions(lm):
    mid = 0.5 * (lm.lam_p + lm.alpha_star)
    assert predicted_region(lm, lm.lam_p - 1, lm.lam_q - 1)[0] == "B"
    assert predicted_region(lm, mid, lm.lam_q - 1)[0] == "C"
    assert predicted_region(lm, lm.lam_p - 1, lm.lam_q + 1)[0] == "A"
    assert predicted_region(lm, mid, lm.beta_star + 1)[0] == "D"
    label, tags = predicted_region(lm, lm.lam_p, lm.lam_q - 1)
    assert label == "B" and "alpha=lambda1(p)" in tags


def test_global_min_cases(mesh, opts, lm):
    assert global_min(mesh, P(lm.lam_p - 1, lm.lam_q - 1), opts, lm=lm).value == 0.0
    m = global_min(mesh, P(lm.lam_p + 1, 0.0), opts, lm=lm)
    assert m.kind is ValueKind.MinusInfinity and min(m.probe) < -1e6
    a, b = lm.lam_p - 0.5, lm.lam_q + 0.5
    m = global_min(mesh, P(a, b), opts, lm=lm)
    assert m.is_finite and m.value < 0 and m.attained
    assert pde_residual(m.witness, P(a, b)) < 1e-6
    # the global minimizer lies on the Nehari set and is the ground state there
    d = ground_state(mesh, P(a, b), opts, lm=lm).d_value
    assert d.value == pytest.approx(m.value, rel=1e-6)


def test_global_min_on_lambda_p_above_curve(mesh, opts, lm):
    m = global_min(mesh, P(lm.lam_p, lm.beta_star + 0.5), opts, lm=lm)
    assert m.kind is ValueKind.MinusInfinity


def test_ground_state_region_c(mesh, opts, lm):
    mid = 0.5 * (lm.lam_p + lm.alpha_star)
    rep = ground_state(mesh, P(mid, lm.lam_q - 1), opts, lm=lm)
    assert rep.region == "C"
    assert rep.d_value.value > 0 and rep.d_value.attained
    assert rep.pde_residual_u2 < 1e-6


def test_ground_state_on_lambda_q(mesh, opts, lm):
    mid = 0.5 * (lm.lam_p + lm.alpha_star)
    d = ground_state(mesh, P(mid, lm.lam_q), opts, lm=lm).d_value
    assert d.value > 0 and d.attained
    d = ground_state(mesh, P(lm.alpha_star + 1, lm.lam_q), opts, lm=lm).d_value
    assert d.value == 0.0 and d.attained is False and d.code == "vanishing"
    d = ground_state(mesh, P(lm.alpha_star, lm.lam_q), opts, lm=lm).d_value
    assert d.value == 0.0 and d.attained and d.code == "phi_q"


def test_ground_state_empty_and_infinite(mesh, opts, lm):
    d = ground_state(mesh, P(lm.lam_p - 1, lm.lam_q - 1), opts, lm=lm).d_value
    assert d.kind is ValueKind.PlusInfinity
    mid = 0.5 * (lm.lam_p + lm.alpha_star)
    d = ground_state(mesh, P(mid, lm.beta_star + 1), opts, lm=lm).d_value
    assert d.kind is ValueKind.MinusInfinity and d.probe


def test_dichotomy_verdicts(mesh, opts):
    assert dichotomy_probe(mesh, 2.5, 1.5, opts).verdict == "divergent"
    rep = dichotomy_probe(mesh, 4.0, 2.0, opts)
    assert rep.expected == "open"
    assert rep.verdict == "inconclusive"


def test_multiplicity(mesh, opts, lm):
    a, b = region_a_point(lm)
    assert predicted_region(lm, a, b)[0] == "A"
    rep = multiplicity_search(mesh, P(a, b), opts, lm=lm)
    assert not rep.failures
    assert energy(rep.u1, P(a, b)) < 0 < energy(rep.u2, P(a, b))
    assert normalized_distance(rep.u1, rep.u2) > 1e-3
    with pytest.raises(ValueError):
        multiplicity_search(mesh, P(lm.lam_p - 1, b), opts, lm=lm)


def test_sweep_paths(lm):
    for kind in ("divergent", "vanishing", "bounded"):
        path = sweep_path(lm, kind, 5)
        assert len(path) == 5
    with pytest.raises(ValueError):
        sweep_path(lm, "sideways")


def test_vanishing_sweep(mesh, opts, lm):
    rep = boundary_sweep(mesh, 3.0, 2.0, sweep_path(lm, "vanishing", 6), opts, kind="vanishing")
    assert rep.trend == "vanishing" and rep.survived == 1.0
    assert rep.final_distance < 5e-2


def test_extended_value_summary():
    v = ExtendedValue.minus_infinity([-1.0, -10.0], code="probe")
    s = v.summary()
    assert s["kind"] == "-inf" and s["value"] is None and s["probe_min"] == -10.0
    assert ExtendedValue.plus_infinity().value == math.inf
    assert ExtendedValue.finite(1.5).summary()["value"] == 1.5
