"""Exact 1D first eigenpairs of the r-Laplacian and an independent shooting check.

On an interval of length L the first Dirichlet eigenfunction of the
r-Laplacian is a rescaled generalized sine sin_r, and

    pi_r    = 2 pi / (r sin(pi / r)),
    lambda1 = (r - 1) (pi_r / L)^r.

``shoot_lambda1`` recovers the same number from the ODE alone and is used to
cross-check the closed form before anything else relies on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .errors import NehariLabError
from .mesh import check_exponent


def pi_r(r: float) -> float:
    """Half period of sin_r."""
    r = check_exponent(r)
    return 2.0 * math.pi / (r * math.sin(math.pi / r))


def exact_lambda1(r: float, L: float = 1.0) -> float:
    """First Dirichlet eigenvalue of the r-Laplacian on an interval of length L."""
    r = check_exponent(r)
    if not L > 0:
        raise ValueError(f"interval length must be positive, got {L}")
    return (r - 1.0) * (pi_r(r) / L) ** r


@dataclass(frozen=True)
class PExactEigen:
    r: float
    domain_length: float
    lambda1: float
    pi_r: float

    @classmethod
    def of(cls, r: float, L: float = 1.0) -> "PExactEigen":
        return cls(r=float(r), domain_length=float(L), lambda1=exact_lambda1(r, L), pi_r=pi_r(r))


def _first_zero(lam: float, r: float, L: float, steps: int):
    """Integrate u' = psi^{-1}(w), w' = -lam psi(u) from (0, 1) over [0, L].

    psi(s) = |s|^(r-2) s.  The flux w is integrated instead of u' so the
    degeneracy at u' = 0 never produces a division.  Returns the first x in
    (0, L] with u(x) = 0 (linear interpolation inside the step) or None.
    """
    a = 1.0 / (r - 1.0)
    b = r - 1.0
    dx = L / steps

    def rhs(u, w):
        return math.copysign(abs(w) ** a, w), -lam * math.copysign(abs(u) ** b, u)

    u, w = 0.0, 1.0
    for k in range(steps):
        k1u, k1w = rhs(u, w)
        k2u, k2w = rhs(u + 0.5 * dx * k1u, w + 0.5 * dx * k1w)
        k3u, k3w = rhs(u + 0.5 * dx * k2u, w + 0.5 * dx * k2w)
        k4u, k4w = rhs(u + dx * k3u, w + dx * k3w)
        un = u + dx / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
        wn = w + dx / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
        if un <= 0.0:
            return (k + u / (u - un)) * dx
        u, w = un, wn
    return None


@lru_cache(maxsize=64)
def shoot_lambda1(r: float, L: float = 1.0, tol: float = 1e-8, steps: int = 20000,
                  max_bisections: int = 60) -> float:
    """First eigenvalue by RK4 shooting and bisection on lambda.

    A value of lambda is "too large" when the trajectory started with
    u(0) = 0, u'(0) = 1 returns to zero before x = L.  Bisection stops when
    the bracket is narrower than ``tol`` relative to its upper end.
    """
    r = check_exponent(r)
    if not L > 0 or not tol > 0:
        raise ValueError("need L > 0 and tol > 0")
    lo, hi = 1.0, 1.0
    # the zero moves left monotonically as lambda grows
    for _ in range(200):
        if _first_zero(hi, r, L, steps) is not None:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise NehariLabError("could not bracket the first eigenvalue from above")
    for _ in range(200):
        if _first_zero(lo, r, L, steps) is None:
            break
        hi, lo = lo, 0.5 * lo
    else:
        raise NehariLabError("could not bracket the first eigenvalue from below")
    for _ in range(max_bisections):
        if hi - lo <= tol * hi:
            break
        mid = 0.5 * (lo + hi)
        if _first_zero(mid, r, L, steps) is None:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
