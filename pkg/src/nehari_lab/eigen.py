"""First eigenpair of the discrete r-Laplacian and the two critical ratios built from it."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import InvalidExponent, NonConvergence
from .mesh import (
    Field,
    Mesh,
    check_exponent,
    grad_power,
    grad_power_gradient,
    lp_norm,
    mass_power,
    mass_power_gradient,
    stiffness_weights,
    tridiag_solve,
)
from .optim import SolverOptions, armijo_descent


@dataclass(frozen=True)
class EigenPair:
    r: float
    lambda1: float
    phi: Field
    iterations: int
    residual: float


def rayleigh(u: Field, r: float) -> float:
    """||u'||_r^r / ||u||_r^r."""
    v, h = u.values, u.mesh.h
    return grad_power(v, h, r) / mass_power(v, h, r)


def eigen_residual(v: np.ndarray, h: float, r: float, lam: float) -> float:
    a = grad_power_gradient(v, h, r)
    b = mass_power_gradient(v, h, r)
    return float(np.linalg.norm(a - lam * b) / (np.linalg.norm(a) + lam * np.linalg.norm(b)))


def _normalize(v: np.ndarray, h: float, r: float) -> np.ndarray:
    return v / mass_power(v, h, r) ** (1.0 / r)


def solve_first_eigen(mesh: Mesh, r: float, opts: Optional[SolverOptions] = None,
                      start: Optional[Field] = None) -> EigenPair:
    """Minimize the r-Rayleigh quotient on the sphere ||u||_r = 1.

    Starts from the positive bump (or ``start``), uses the stiffness matrix of
    the current iterate as metric and folds the iterate onto |u| every
    ``opts.abs_every`` steps.  The result is nonnegative with unit L^r norm.

    Raises:
        InvalidExponent: r <= 1.
        NonConvergence: iteration cap reached (best iterate attached).
    """
    r = check_exponent(r)
    opts = opts or SolverOptions()
    h = mesh.h
    v0 = (start if start is not None else mesh.bump()).values
    v0 = _normalize(np.abs(v0), h, r)

    def fun(v):
        N = grad_power(v, h, r)
        L = mass_power(v, h, r)
        R = N / L
        return R, r * (grad_power_gradient(v, h, r) - R * mass_power_gradient(v, h, r)) / L

    def precond(v, g):
        L = mass_power(v, h, r)
        return tridiag_solve(stiffness_weights(v, h, r, opts.precond_floor), g) * L / r

    def residual(v, g):
        return eigen_residual(v, h, r, grad_power(v, h, r) / mass_power(v, h, r))

    try:
        res = armijo_descent(fun, v0, precond, opts, residual=residual,
                             retract=lambda v: _normalize(v, h, r),
                             every=(opts.abs_every, np.abs))
    except NonConvergence as exc:
        best = Field(mesh, _normalize(np.abs(exc.best), h, r))
        raise NonConvergence(f"eigen solve for r={r}: {exc}", best=best,
                             value=rayleigh(best, r), iterations=exc.iterations) from None
    v = _normalize(np.abs(res.x), h, r)
    lam = grad_power(v, h, r) / mass_power(v, h, r)
    return EigenPair(r=r, lambda1=lam, phi=Field(mesh, v), iterations=res.iterations,
                     residual=eigen_residual(v, h, r, lam))


@lru_cache(maxsize=32)
def first_eigen(mesh: Mesh, r: float, opts: Optional[SolverOptions] = None) -> EigenPair:
    """Cached ``solve_first_eigen``; meshes and options are hashable values."""
    return solve_first_eigen(mesh, r, opts)


def _check_pq(p, q):
    check_exponent(p, "p")
    check_exponent(q, "q")
    if not p > q:
        raise InvalidExponent(f"need p > q > 1, got p={p}, q={q}")


def cross_ratio(phi: Field, r: float) -> float:
    """Rayleigh ratio of ``phi`` measured in exponent ``r``."""
    return rayleigh(phi, r)


def compute_alpha_star(mesh: Mesh, p: float, q: float, opts: Optional[SolverOptions] = None) -> float:
    """||phi_q'||_p^p / ||phi_q||_p^p."""
    _check_pq(p, q)
    return cross_ratio(first_eigen(mesh, q, opts).phi, p)


def compute_beta_star(mesh: Mesh, p: float, q: float, opts: Optional[SolverOptions] = None) -> float:
    """||phi_p'||_q^q / ||phi_p||_q^q."""
    _check_pq(p, q)
    return cross_ratio(first_eigen(mesh, p, opts).phi, q)


def linear_independence_check(phi_p: Field, phi_q: Field) -> float:
    """L^2 distance between the two profiles after L^2 normalization and sign alignment.

    Zero iff the fields are proportional.
    """
    a = phi_p.values / lp_norm(phi_p, 2.0)
    b = phi_q.values / lp_norm(phi_q, 2.0)
    if a @ b < 0:
        b = -b
    return lp_norm(Field(phi_p.mesh, a - b), 2.0)
