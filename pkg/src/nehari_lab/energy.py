"""Energy functional of the (p,q)-Laplacian problem and its Nehari/fibering toolkit.

With ``H(u) = ||u'||_p^p - alpha ||u||_p^p`` and
``G(u) = ||u'||_q^q - beta ||u||_q^q`` the energy is ``E = H/p + G/q``.
Along a ray ``s -> E(s u)`` with ``H(u) G(u) < 0`` there is exactly one
extremum, at ``t(u) = (-G/H)^(1/(p-q))``; the value there is the fibered
functional ``J(u)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InvalidExponent, SignError, ZeroFieldError
from .mesh import (
    Field,
    check_exponent,
    grad_power,
    grad_power_gradient,
    mass_power,
    mass_power_gradient,
)

EPS0 = 1e-12


@dataclass(frozen=True)
class EnergyParams:
    p: float
    q: float
    alpha: float
    beta: float

    def __post_init__(self):
        check_exponent(self.p, "p")
        check_exponent(self.q, "q")
        if not self.p > self.q:
            raise InvalidExponent(f"need p > q > 1, got p={self.p}, q={self.q}")

    def with_(self, **changes) -> "EnergyParams":
        d = dict(p=self.p, q=self.q, alpha=self.alpha, beta=self.beta)
        d.update(changes)
        return EnergyParams(**d)


class SignClass(enum.Enum):
    BMinus = "B-"
    BPlus = "B+"
    OnNehariBoundary = "boundary"
    Indefinite = "indefinite"


# -- array level -----------------------------------------------------------


def hg_values(v: np.ndarray, h: float, P: EnergyParams):
    """Return (H, G, ||u'||_p^p, ||u'||_q^q) for nodal values ``v``."""
    Np = grad_power(v, h, P.p)
    Nq = grad_power(v, h, P.q)
    H = Np - P.alpha * mass_power(v, h, P.p)
    G = Nq - P.beta * mass_power(v, h, P.q)
    return H, G, Np, Nq


def h_gradient(v, h, P):
    """Gradient of H / p."""
    return grad_power_gradient(v, h, P.p) - P.alpha * mass_power_gradient(v, h, P.p)


def g_gradient(v, h, P):
    """Gradient of G / q."""
    return grad_power_gradient(v, h, P.q) - P.beta * mass_power_gradient(v, h, P.q)


def energy_gradient_array(v, h, P):
    return h_gradient(v, h, P) + g_gradient(v, h, P)


def residual_scale(v, h, P) -> float:
    """Size of the individual operator terms in the discrete equation."""
    return (np.linalg.norm(grad_power_gradient(v, h, P.p))
            + np.linalg.norm(grad_power_gradient(v, h, P.q))
            + abs(P.alpha) * np.linalg.norm(mass_power_gradient(v, h, P.p))
            + abs(P.beta) * np.linalg.norm(mass_power_gradient(v, h, P.q)))


def fibered_value(H: float, G: float, P: EnergyParams) -> float:
    p, q = P.p, P.q
    return (-np.sign(H) * (p - q) / (p * q)
            * abs(G) ** (p / (p - q)) / abs(H) ** (q / (p - q)))


def strictly_separated(H: float, G: float, scale_h: float, scale_g: float) -> bool:
    """H and G have strictly opposite signs, each clear of zero by 10 * EPS0 relative."""
    return (H * G < 0
            and abs(H) > 10 * EPS0 * max(scale_h, 1.0)
            and abs(G) > 10 * EPS0 * max(scale_g, 1.0))


# -- field level -----------------------------------------------------------


def h_alpha(u: Field, P: EnergyParams) -> float:
    return hg_values(u.values, u.mesh.h, P)[0]


def g_beta(u: Field, P: EnergyParams) -> float:
    return hg_values(u.values, u.mesh.h, P)[1]


def energy(u: Field, P: EnergyParams) -> float:
    H, G, _, _ = hg_values(u.values, u.mesh.h, P)
    return H / P.p + G / P.q


def energy_gradient(u: Field, P: EnergyParams) -> Field:
    """Nodal gradient of the discrete energy; zero exactly at discrete weak solutions."""
    return Field(u.mesh, energy_gradient_array(u.values, u.mesh.h, P))


def pde_residual(u: Field, P: EnergyParams) -> float:
    """Relative size of the discrete equation residual at ``u``.

    ``||E'(u)|| / (||p-Laplacian term|| + ||q-Laplacian term||
    + |alpha| ||p-mass term|| + |beta| ||q-mass term||)``, Euclidean norms of
    nodal vectors.  Returns 0 for the zero field.
    """
    v, h = u.values, u.mesh.h
    scale = residual_scale(v, h, P)
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(energy_gradient_array(v, h, P)) / scale)


def _require_nonzero(u: Field):
    if u.is_zero():
        raise ZeroFieldError("the zero field is excluded here")


def nehari_residual(u: Field, P: EnergyParams) -> float:
    """<E'(u), u> = H(u) + G(u)."""
    _require_nonzero(u)
    H, G, _, _ = hg_values(u.values, u.mesh.h, P)
    return H + G


def on_nehari(u: Field, P: EnergyParams, tol: float = 1e-10) -> bool:
    _require_nonzero(u)
    H, G, _, _ = hg_values(u.values, u.mesh.h, P)
    return abs(H + G) <= tol * (abs(H) + abs(G) + EPS0)


def _separated_hg(u: Field, P: EnergyParams):
    v, h = u.values, u.mesh.h
    H, G, Np, Nq = hg_values(v, h, P)
    if not strictly_separated(H, G, Np + abs(P.alpha) * mass_power(v, h, P.p),
                              Nq + abs(P.beta) * mass_power(v, h, P.q)):
        raise SignError(f"H*G must be strictly negative (H={H:.3e}, G={G:.3e})")
    return H, G


def t_projection(u: Field, P: EnergyParams) -> float:
    """The unique t > 0 with t u on the Nehari set, for H(u) G(u) < 0."""
    H, G = _separated_hg(u, P)
    return (-G / H) ** (1.0 / (P.p - P.q))


def fibered_j(u: Field, P: EnergyParams) -> float:
    """J(u) = E(t(u) u), evaluated in closed form."""
    H, G = _separated_hg(u, P)
    return fibered_value(H, G, P)


def fibered_j_gradient(u: Field, P: EnergyParams) -> Field:
    """Gradient of J, equal to t E'(t u) with t = t(u)."""
    v, h = u.values, u.mesh.h
    H, G = _separated_hg(u, P)
    return Field(u.mesh, fibered_gradient_array(v, h, P, H, G))


def fibered_gradient_array(v, h, P, H, G):
    p, q = P.p, P.q
    J = fibered_value(H, G, P)
    return J * (p / (p - q) * q * g_gradient(v, h, P) / G
                - q / (p - q) * p * h_gradient(v, h, P) / H)


def sign_class(u: Field, P: EnergyParams, tol: float = 1e-8) -> SignClass:
    """Place ``u`` relative to the cones B- (H > 0 > G) and B+ (H < 0 < G).

    H and G count as zero when they are within ``tol`` of the size of their
    own two terms.
    """
    _require_nonzero(u)
    v, h = u.values, u.mesh.h
    H, G, Np, Nq = hg_values(v, h, P)
    h_zero = abs(H) <= tol * (Np + abs(P.alpha) * mass_power(v, h, P.p)) + EPS0
    g_zero = abs(G) <= tol * (Nq + abs(P.beta) * mass_power(v, h, P.q)) + EPS0
    if h_zero or g_zero:
        return SignClass.OnNehariBoundary
    if H > 0 > G:
        return SignClass.BMinus
    if H < 0 < G:
        return SignClass.BPlus
    return SignClass.Indefinite
