"""Uniform 1D grids with homogeneous Dirichlet data, P1 fields and their norms.

Only interior nodal values are stored. The two boundary values are zero by
construction and enter the formulas as ghost zeros.

The array-level kernels at the bottom (``slopes``, ``grad_power`` ...) work on
plain ``numpy`` vectors and are what the solvers use in their inner loops.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import InvalidExponent, MeshMismatch


@dataclass(frozen=True)
class Mesh:
    """Uniform grid on ``(a, b)`` with ``n`` interior nodes."""

    a: float
    b: float
    n: int
    h: float = field(init=False)

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)) or self.b <= self.a:
            raise ValueError(f"need a < b, got a={self.a}, b={self.b}")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"need an integer n >= 2, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "h", (self.b - self.a) / (self.n + 1))

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def x(self) -> np.ndarray:
        """Interior node coordinates."""
        return self.a + self.h * np.arange(1, self.n + 1)

    @property
    def x_full(self) -> np.ndarray:
        """All node coordinates, endpoints included."""
        return self.a + self.h * np.arange(self.n + 2)

    def field(self, values) -> "Field":
        return Field(self, values)

    def sample(self, func) -> "Field":
        """Nodal interpolant of ``func`` at the interior nodes."""
        return Field(self, func(self.x))

    def zeros(self) -> "Field":
        return Field(self, np.zeros(self.n))

    def bump(self) -> "Field":
        """The positive profile sin(pi (x - a) / (b - a))."""
        return self.sample(lambda x: np.sin(np.pi * (x - self.a) / self.length))


@dataclass(frozen=True, eq=False)
class Field:
    """Interior nodal values of a P1 function vanishing at both endpoints."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.shape[0] != self.mesh.n:
            raise MeshMismatch(f"expected {self.mesh.n} nodal values, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.mesh.n

    def __neg__(self):
        return Field(self.mesh, -self.values)

    def __mul__(self, c):
        return Field(self.mesh, float(c) * self.values)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return Field(self.mesh, self.values / float(c))

    def __add__(self, other):
        return Field(self.mesh, self.values + _values_on(other, self.mesh))

    def __sub__(self, other):
        return Field(self.mesh, self.values - _values_on(other, self.mesh))

    def abs(self) -> "Field":
        return Field(self.mesh, np.abs(self.values))

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def full(self) -> np.ndarray:
        """Nodal values with the two boundary zeros attached."""
        return pad(self.values)


def _values_on(u, mesh: Mesh) -> np.ndarray:
    if isinstance(u, Field):
        if u.mesh != mesh:
            raise MeshMismatch("fields live on different meshes")
        return u.values
    v = np.asarray(u, dtype=float)
    if v.shape != (mesh.n,):
        raise MeshMismatch(f"expected {mesh.n} nodal values, got shape {v.shape}")
    return v


def check_exponent(r: float, name: str = "r") -> float:
    r = float(r)
    if not r > 1.0 or not np.isfinite(r):
        raise InvalidExponent(f"{name} must satisfy {name} > 1, got {r}")
    return r


def lp_norm(u: Field, r: float) -> float:
    """Trapezoid-rule L^r norm (boundary zeros included)."""
    r = check_exponent(r)
    return mass_power(u.values, u.mesh.h, r) ** (1.0 / r)


def grad_norm(u: Field, r: float) -> float:
    """L^r norm of the piecewise-constant derivative of ``u``."""
    r = check_exponent(r)
    return grad_power(u.values, u.mesh.h, r) ** (1.0 / r)


def l2_distance(u: Field, v: Field) -> float:
    """Discrete L^2 distance between two fields on the same mesh."""
    return lp_norm(Field(u.mesh, u.values - _values_on(v, u.mesh)), 2.0)


# ---------------------------------------------------------------------------
# array kernels
# ---------------------------------------------------------------------------


def pad(v: np.ndarray) -> np.ndarray:
    out = np.zeros(v.shape[0] + 2)
    out[1:-1] = v
    return out


def slopes(v: np.ndarray, h: float) -> np.ndarray:
    """Edge slopes (n + 1 of them) of the P1 interpolant with ghost zeros."""
    return np.diff(pad(v)) / h


def spow(t, s: float):
    """sign(t) |t|^s, with the value 0 at t = 0 for every s > -1."""
    return np.sign(t) * np.abs(t) ** s


def mass_power(v: np.ndarray, h: float, r: float) -> float:
    """||u||_r^r; the trapezoid weights of interior nodes all equal h."""
    return h * float(np.sum(np.abs(v) ** r))


def grad_power(v: np.ndarray, h: float, r: float) -> float:
    """||u'||_r^r, exact for P1 functions."""
    return h * float(np.sum(np.abs(slopes(v, h)) ** r))


def grad_power_gradient(v: np.ndarray, h: float, r: float) -> np.ndarray:
    """Nodal gradient of ``grad_power`` divided by r (the weak r-Laplacian)."""
    flux = spow(slopes(v, h), r - 1.0)
    return flux[:-1] - flux[1:]


def mass_power_gradient(v: np.ndarray, h: float, r: float) -> np.ndarray:
    """Nodal gradient of ``mass_power`` divided by r."""
    return h * spow(v, r - 1.0)


def stiffness_weights(v: np.ndarray, h: float, r: float, floor: float = 1e-3) -> np.ndarray:
    """Edge weights (r-1)|u'|^(r-2)/h of the Hessian of grad_power / r.

    Slopes below ``floor * max|u'|`` are lifted to that level so the weights
    stay finite for r < 2 and positive for r > 2.
    """
    a = np.abs(slopes(v, h))
    top = float(a.max()) if a.size else 0.0
    a = np.maximum(a, max(floor * top, 1e-300))
    return (r - 1.0) * a ** (r - 2.0) / h


def tridiag_solve(c: np.ndarray, rhs: np.ndarray, diag_shift=0.0) -> np.ndarray:
    """Solve K x = rhs for the Dirichlet stiffness matrix with edge weights ``c``.

    ``K[i, i] = c[i] + c[i+1] + diag_shift[i]`` and ``K[i, i+1] = -c[i+1]``.
    ``rhs`` may be a vector or an (n, k) block.
    """
    n = c.shape[0] - 1
    ab = np.empty((3, n))
    ab[0, 0] = 0.0
    ab[0, 1:] = -c[1:n]
    ab[1] = c[:-1] + c[1:] + diag_shift
    ab[2, :-1] = -c[1:n]
    ab[2, -1] = 0.0
    return solve_banded((1, 1), ab, rhs, check_finite=False)


def tridiag_matvec(c: np.ndarray, x: np.ndarray, diag_shift=0.0) -> np.ndarray:
    """Product with the same stiffness matrix as ``tridiag_solve``."""
    flux = c * np.diff(pad(x))
    return flux[:-1] - flux[1:] + diag_shift * x
