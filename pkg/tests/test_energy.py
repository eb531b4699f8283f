import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nehari_lab import (
    EnergyParams,
    InvalidExponent,
    Mesh,
    SignClass,
    SignError,
    ZeroFieldError,
    energy,
    fibered_j,
    g_beta,
    h_alpha,
    nehari_residual,
    on_nehari,
    pde_residual,
    rayleigh,
    sign_class,
    t_projection,
)

MESH = Mesh(0.0, 1.0, 127)


def test_params_validation():
    with pytest.raises(InvalidExponent):
        EnergyParams(2.0, 3.0, 1.0, 1.0)
    P = EnergyParams(3.0, 2.0, 1.0, 1.0)
    assert P.with_(alpha=5.0).alpha == 5.0


def test_energy_decomposition():
    P = EnergyParams(3.0, 2.0, 20.0, 15.0)
    u = MESH.bump()
    assert energy(u, P) == pytest.approx(h_alpha(u, P) / 3 + g_beta(u, P) / 2)


def test_projection_lands_on_nehari_and_gives_j():
    P = EnergyParams(3.0, 2.0, 20.0, 15.0)   # sine: H > 0 > G
    u = MESH.bump()
    assert sign_class(u, P) is SignClass.BMinus
    t = t_projection(u, P)
    assert on_nehari(u * t, P)
    assert fibered_j(u, P) == pytest.approx(energy(u * t, P), rel=1e-12)
    assert fibered_j(u, P) < 0


def test_b_plus_and_indefinite():
    u = MESH.bump()
    assert sign_class(u, EnergyParams(3.0, 2.0, 40.0, 5.0)) is SignClass.BPlus
    assert sign_class(u, EnergyParams(3.0, 2.0, 5.0, 5.0)) is SignClass.Indefinite
    with pytest.raises(SignError):
        t_projection(u, EnergyParams(3.0, 2.0, 5.0, 5.0))


def test_zero_field_rejected():
    with pytest.raises(ZeroFieldError):
        nehari_residual(MESH.zeros(), EnergyParams(3.0, 2.0, 1.0, 1.0))
    assert pde_residual(MESH.zeros(), EnergyParams(3.0, 2.0, 1.0, 1.0)) == 0.0


def test_ray_scan_extremum_matches_projection():
    P = EnergyParams(4.0, 1.5, 50.0, 30.0)
    u = MESH.bump() * 0.3
    t = t_projection(u, P)
    s = np.linspace(0.01, 10 * t, 200001)
    H, G = h_alpha(u, P), g_beta(u, P)
    k = np.argmin(s ** P.p * H / P.p + s ** P.q * G / P.q)
    assert abs(s[k] - t) <= s[1] - s[0]


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 20.0), st.floats(2.2, 5.0), st.floats(1.2, 2.0))
def test_j_zero_homogeneous_and_identity(scale, p, q):
    u = MESH.bump()
    P = EnergyParams(p, q, 2.0 * rayleigh(u, p), 0.0)   # B+: H < 0 < G
    assert fibered_j(u * scale, P) == pytest.approx(fibered_j(u, P), rel=1e-10)
    w = u * t_projection(u * scale, P) * scale
    assert energy(w, P) == pytest.approx((p - q) / (p * q) * g_beta(w, P), rel=1e-8)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(-50.0, 50.0), st.floats(-50.0, 50.0))
def test_energy_ray_formula(s, a, b):
    P = EnergyParams(3.0, 2.0, a, b)
    u = MESH.bump()
    H, G = h_alpha(u, P), g_beta(u, P)
    assert energy(u * s, P) == pytest.approx(s ** 3 * H / 3 + s ** 2 * G / 2,
                                             rel=1e-10, abs=1e-10 * (abs(H) + abs(G)) * s ** 3)
