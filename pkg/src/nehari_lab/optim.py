"""Preconditioned descent with Armijo backtracking.

Every minimization in the package (Rayleigh quotients, the penalized curve
problem, fibered functionals, the energy itself) goes through
``armijo_descent``.  Directions are ``-P(x)^{-1} grad f(x)`` where ``P`` is a
positive definite tridiagonal stiffness matrix built from the current
iterate, so the inner products are Sobolev-type and the iteration count does
not blow up under mesh refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import NonConvergence


@dataclass(frozen=True)
class SolverOptions:
    tol_rel: float = 1e-10
    tol_grad: float = 1e-8
    max_iters: int = 200_000
    armijo_c: float = 1e-4
    shrink: float = 0.5
    abs_every: int = 50
    precond_floor: float = 1e-3
    boundary_band: float = 1e-6
    divergence_threshold: float = 1e6
    penalty_start: float = 1.0
    penalty_stop: float = 1e8
    penalty_factor: float = 10.0

    def with_(self, **changes) -> "SolverOptions":
        return replace(self, **changes)


@dataclass
class DescentResult:
    x: np.ndarray
    f: float
    iterations: int
    converged: bool
    residual: float
    history: list = field(default_factory=list)
    stalled: bool = False


def armijo_descent(
    fun: Callable[[np.ndarray], tuple],
    x0: np.ndarray,
    precond: Callable[[np.ndarray, np.ndarray], np.ndarray],
    opts: SolverOptions,
    *,
    residual: Optional[Callable[[np.ndarray, np.ndarray], float]] = None,
    retract: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    admissible: Optional[Callable[[np.ndarray], bool]] = None,
    every: Optional[tuple] = None,
    f_floor: Optional[float] = None,
    max_iters: Optional[int] = None,
    raise_on_failure: bool = True,
    window: int = 50,
) -> DescentResult:
    """Minimize ``fun`` from ``x0``.

    Args:
        fun: returns ``(f, grad)``.
        precond: returns ``P(x)^{-1} g``.
        residual: relative stationarity measure ``(x, grad) -> float``.
            Convergence needs ``residual <= tol_grad`` and a relative decrease
            below ``tol_rel`` on the last step.  Without it the squared
            Newton decrement plays the same role.
        retract: applied to every trial point (e.g. renormalization).
        admissible: trial points failing this are rejected and the step halved.
        every: ``(k, g)`` applies ``x <- g(x)`` every k iterations.
        f_floor: stop (not converged) once ``f`` drops below this value;
            used as a divergence guard.

    The loop also ends, flagged ``stalled``, when ``f`` has moved by less than
    ``tol_rel`` (relative) over the last ``window`` accepted steps: at that
    point the residual sits on the rounding floor of ``f`` and more
    iterations cannot lower it.
    """
    max_iters = opts.max_iters if max_iters is None else max_iters
    x = np.array(x0, dtype=float)
    f, g = fun(x)
    f_prev = f
    step = 1.0
    res = math.inf
    history = []
    it = 0
    for it in range(1, max_iters + 1):
        d = -precond(x, g)
        slope = float(g @ d)
        if not slope < 0.0:
            d = -g
            slope = -float(g @ g)
        res = residual(x, g) if residual is not None else -slope / max(abs(f), 1e-300)
        if res <= opts.tol_grad and it > 1 and abs(f_prev - f) <= opts.tol_rel * max(abs(f), 1e-300):
            return DescentResult(x, f, it, True, res, history)
        if slope == 0.0:
            return DescentResult(x, f, it, res <= opts.tol_grad, res, history)

        t = min(1.0, 2.0 * step)
        accepted = False
        while t > 1e-18:
            xn = x + t * d
            if retract is not None:
                xn = retract(xn)
            if admissible is None or admissible(xn):
                fn, gn = fun(xn)
                if np.isfinite(fn) and fn <= f + opts.armijo_c * t * slope:
                    accepted = True
                    break
            t *= opts.shrink
        if not accepted:
            return DescentResult(x, f, it, res <= opts.tol_grad, res, history, stalled=True)
        step = t
        f_prev = f
        x, f, g = xn, fn, gn
        if every is not None and it % every[0] == 0:
            x = every[1](x)
            f, g = fun(x)
        history.append(f)
        if f_floor is not None and f < f_floor:
            return DescentResult(x, f, it, False, res, history)
        if len(history) > window and history[-window - 1] - f <= opts.tol_rel * max(abs(f), 1e-300):
            return DescentResult(x, f, it, res <= opts.tol_grad, res, history, stalled=True)

    if raise_on_failure:
        raise NonConvergence(f"no convergence after {max_iters} iterations (residual {res:.3e})",
                             best=x, value=f, iterations=it)
    return DescentResult(x, f, it, False, res, history)
