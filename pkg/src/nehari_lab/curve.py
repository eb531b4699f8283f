"""The threshold curve beta*(alpha) and its Lagrange-multiplier certificate.

    beta*(alpha) = inf { ||u'||_q^q / ||u||_q^q : u != 0, H_alpha(u) <= 0 }

is computed by an exterior penalty on the scale-free constraint ratio
``c(u) = H_alpha(u) / ||u'||_p^p`` with the penalty weight escalated by a
factor 10 from 1 to 1e8, iterates kept on the sphere ``||u||_q = 1``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .eigen import first_eigen, rayleigh, _check_pq
from .energy import (
    EnergyParams,
    energy,
    g_gradient,
    h_gradient,
    hg_values,
    pde_residual,
)
from .errors import Infeasible, NehariLabError, NonConvergence
from .mesh import (
    Field,
    Mesh,
    grad_power,
    grad_power_gradient,
    mass_power,
    mass_power_gradient,
    slopes,
    tridiag_solve,
)
from .optim import SolverOptions, armijo_descent

log = logging.getLogger(__name__)


@dataclass
class CurveSample:
    alpha: float
    beta_star_alpha: float
    minimizer: Field
    constraint_value: float
    kkt_residual: float
    active: bool = True
    iterations: int = 0


@dataclass
class KKTReport:
    residual: float
    t: float
    energy: float
    constraint_activity: float
    active: bool


def _edge_weights(v, h, r, floor):
    a = np.abs(slopes(v, h))
    a = np.maximum(a, max(floor * float(a.max()), 1e-300))
    return (r - 1.0) * a ** (r - 2.0) / h


def _penalized_minimize(mesh, p, q, alpha, seed, opts, *, equality=False):
    """Run the penalty continuation from ``seed``; returns (v, iterations)."""
    h = mesh.h
    floor = opts.precond_floor

    def normalize(v):
        return v / mass_power(v, h, q) ** (1.0 / q)

    v = normalize(np.asarray(seed, dtype=float))
    iters = 0
    mu = opts.penalty_start
    while mu <= opts.penalty_stop * (1 + 1e-12):

        def parts(v, mu=mu):
            Nq, Lq = grad_power(v, h, q), mass_power(v, h, q)
            Np, Lp = grad_power(v, h, p), mass_power(v, h, p)
            Rq = Nq / Lq
            c = 1.0 - alpha * Lp / Np
            cp = c if equality else max(c, 0.0)
            gR = q * (grad_power_gradient(v, h, q) - Rq * mass_power_gradient(v, h, q)) / Lq
            gc = alpha * p * (Lp * grad_power_gradient(v, h, p)
                              - Np * mass_power_gradient(v, h, p)) / Np ** 2
            return Rq, c, cp, gR, gc, Np, Lq

        def fun(v, mu=mu):
            Rq, c, cp, gR, gc, _, _ = parts(v)
            return Rq + mu * cp * cp, gR + 2.0 * mu * cp * gc

        def precond(v, g, mu=mu):
            Rq, c, cp, gR, gc, Np, Lq = parts(v)
            w = q * _edge_weights(v, h, q, floor) / Lq
            if cp > 0:
                w = w + 2.0 * mu * cp * p * _edge_weights(v, h, p, floor) / Np
            if cp != 0.0 or equality:
                u = np.sqrt(2.0 * mu) * gc
                sol = tridiag_solve(w, np.column_stack([g, u]))
                ag, au = sol[:, 0], sol[:, 1]
                return ag - au * (u @ ag) / (1.0 + u @ au)
            return tridiag_solve(w, g)

        def residual(v, g, mu=mu):
            Rq, c, cp, gR, gc, _, Lq = parts(v)
            scale = (q * np.linalg.norm(grad_power_gradient(v, h, q)) / Lq
                     + q * Rq * np.linalg.norm(mass_power_gradient(v, h, q)) / Lq
                     + 2.0 * mu * abs(cp) * np.linalg.norm(gc))
            return float(np.linalg.norm(g) / scale)

        res = armijo_descent(fun, v, precond, opts, residual=residual, retract=normalize,
                             every=(opts.abs_every, np.abs))
        v = res.x
        iters += res.iterations
        mu *= opts.penalty_factor
    return np.abs(v), iters


def _seed(mesh, p, q, alpha, opts):
    """phi_q when admissible, else the first admissible point on the segment to phi_p."""
    h = mesh.h
    phq = first_eigen(mesh, q, opts).phi.values
    php = first_eigen(mesh, p, opts).phi.values
    a = phq / mass_power(phq, h, q) ** (1 / q)
    b = php / mass_power(php, h, q) ** (1 / q)

    def H(s):
        v = (1 - s) * a + s * b
        return grad_power(v, h, p) - alpha * mass_power(v, h, p)

    if H(0.0) <= 0:
        return a
    if H(1.0) > 0:
        # at alpha = lambda_1(p) the value H(phi_p) is zero up to rounding
        if H(1.0) <= 1e-10 * grad_power(b, h, p):
            return b
        raise Infeasible(f"no admissible point on the seed segment for alpha={alpha}")
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if H(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return (1 - hi) * a + hi * b


def multiplier_fit(v, h, P: EnergyParams):
    """Best s >= 0 with g'(v) + s h'(v) ~ 0 in the least-squares sense.

    Returns (s, relative residual).  Here g' and h' are the gradients of
    G/q and H/p; the residual is relative to the sizes of their operator terms.
    """
    gg = g_gradient(v, h, P)
    hh = h_gradient(v, h, P)
    s = max(-(gg @ hh) / (hh @ hh), 0.0) if hh @ hh > 0 else 0.0
    r = gg + s * hh
    # measure against the individual operator terms, not against gg itself,
    # which vanishes when the minimizer is an eigenfunction (alpha = alpha*)
    scale = (np.linalg.norm(grad_power_gradient(v, h, P.q))
             + abs(P.beta) * np.linalg.norm(mass_power_gradient(v, h, P.q))
             + s * (np.linalg.norm(grad_power_gradient(v, h, P.p))
                    + abs(P.alpha) * np.linalg.norm(mass_power_gradient(v, h, P.p))))
    return s, float(np.linalg.norm(r) / scale) if scale > 0 else 0.0


def beta_star_curve(mesh: Mesh, p: float, q: float, alpha: float,
                    opts: Optional[SolverOptions] = None, *, seed: Optional[Field] = None,
                    equality: bool = False) -> CurveSample:
    """One point (alpha, beta*(alpha)) of the threshold curve with its minimizer.

    With ``equality=True`` the constraint is ``H_alpha(u) = 0`` instead of
    ``<= 0``; the two problems agree for alpha <= alpha*.

    Raises:
        Infeasible: alpha below the discrete lambda_1(p) by more than the
            boundary band.
    """
    _check_pq(p, q)
    opts = opts or SolverOptions()
    lam_p = first_eigen(mesh, p, opts).lambda1
    if alpha < lam_p * (1 - opts.boundary_band):
        raise Infeasible(f"alpha={alpha} < lambda1(p)={lam_p}: the admissible set is empty")
    alpha_eff = max(alpha, lam_p)
    h = mesh.h
    s0 = seed.values if seed is not None else _seed(mesh, p, q, alpha_eff, opts)
    try:
        v, iters = _penalized_minimize(mesh, p, q, alpha_eff, s0, opts, equality=equality)
    except NonConvergence as exc:
        raise NonConvergence(f"beta*({alpha}): {exc}", best=Field(mesh, np.abs(exc.best)),
                             value=exc.value, iterations=exc.iterations) from None
    u = Field(mesh, v)
    beta = rayleigh(u, q)
    P = EnergyParams(p, q, alpha_eff, beta)
    H, G, Np, _ = hg_values(v, h, P)
    active = H / Np > -1e-4
    if active:
        _, kkt = multiplier_fit(v, h, P)
    else:
        gg = g_gradient(v, h, P)
        kkt = float(np.linalg.norm(gg) / (np.linalg.norm(grad_power_gradient(v, h, q))
                                          + beta * np.linalg.norm(mass_power_gradient(v, h, q))))
    return CurveSample(alpha=float(alpha), beta_star_alpha=beta, minimizer=u,
                       constraint_value=H, kkt_residual=kkt, active=active, iterations=iters)


def verify_kkt(sample: CurveSample, P: EnergyParams) -> KKTReport:
    """Scale the curve minimizer into a solution of the (p,q) equation and measure it.

    The scale ``t`` comes from the multiplier: ``t^(p-q) = s`` where
    ``g'(u0) + s h'(u0) = 0`` is fitted in least squares.  The returned
    residual is ``pde_residual(t u0)`` at ``(alpha, beta*(alpha))``.
    ``active`` is False when ``H_alpha(u0)`` is clearly negative, which
    cannot happen at a genuine minimizer for alpha < alpha*.
    """
    u0 = sample.minimizer
    v, h = u0.values, u0.mesh.h
    _, _, Np, _ = hg_values(v, h, P)
    activity = sample.constraint_value / Np
    active = activity > -1e-4
    if not active:
        log.warning("curve minimizer at alpha=%g has an inactive constraint (H/|u'|^p=%.3e)",
                    sample.alpha, activity)
    s, _ = multiplier_fit(v, h, P)
    if s <= 0:
        raise NehariLabError("multiplier has the wrong sign; no positive scaling exists")
    t = s ** (1.0 / (P.p - P.q))
    w = t * u0
    return KKTReport(residual=pde_residual(w, P), t=t, energy=energy(w, P),
                     constraint_activity=abs(activity), active=active)


@dataclass
class CurveTrace:
    samples: List[CurveSample]
    failures: List[tuple] = field(default_factory=list)
    lambda_p: float = float("nan")
    lambda_q: float = float("nan")
    alpha_star: float = float("nan")
    beta_star: float = float("nan")

    @property
    def monotone(self) -> bool:
        b = [s.beta_star_alpha for s in self.samples]
        return all(b[i + 1] <= b[i] + 1e-9 * max(1.0, abs(b[i])) for i in range(len(b) - 1))


def curve_alphas(lam_p: float, alpha_star: float, n_samples: int) -> np.ndarray:
    return np.linspace(lam_p, 1.2 * alpha_star, n_samples)


def trace_curve(mesh: Mesh, p: float, q: float, n_samples: int,
                opts: Optional[SolverOptions] = None, jobs: int = 1) -> CurveTrace:
    """Sample beta*(alpha) uniformly on [lambda1(p), 1.2 alpha*].

    Samples are independent solves keyed by index; failures are collected
    rather than aborting the trace.
    """
    from .parallel import ordered_map

    _check_pq(p, q)
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    opts = opts or SolverOptions()
    lam_p = first_eigen(mesh, p, opts).lambda1
    lam_q = first_eigen(mesh, q, opts).lambda1
    a_star = rayleigh(first_eigen(mesh, q, opts).phi, p)
    b_star = rayleigh(first_eigen(mesh, p, opts).phi, q)
    alphas = curve_alphas(lam_p, a_star, n_samples)
    results = ordered_map(_curve_task, [(mesh, p, q, float(a), opts) for a in alphas], jobs)
    samples, failures = [], []
    for a, res in zip(alphas, results):
        if isinstance(res, Exception):
            failures.append((float(a), repr(res)))
        else:
            samples.append(res)
    return CurveTrace(samples, failures, lam_p, lam_q, a_star, b_star)


def _curve_task(args):
    mesh, p, q, alpha, opts = args
    try:
        return beta_star_curve(mesh, p, q, alpha, opts)
    except NehariLabError as exc:
        return exc
