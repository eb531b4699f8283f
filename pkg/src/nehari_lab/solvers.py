"""Global minimum m(alpha, beta), least energy d(alpha, beta) on the Nehari set, and probes.

Every decision starts from the region tests built on the discrete landmarks
(lambda_1(p), lambda_1(q), alpha*, beta*, beta*(alpha)); numbers are then
produced by preconditioned descent (global minimizers), cone-constrained
minimization of the fibered functional J (ground states), or explicit probe
families when the value is -infinity.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .curve import CurveSample, beta_star_curve, verify_kkt
from .eigen import _check_pq, first_eigen, rayleigh
from .energy import (
    EnergyParams,
    SignClass,
    energy,
    energy_gradient_array,
    fibered_gradient_array,
    fibered_value,
    g_gradient,
    h_gradient,
    hg_values,
    pde_residual,
    residual_scale,
    strictly_separated,
)
from .errors import NehariLabError, NonConvergence, SignError
from .mesh import (
    Field,
    Mesh,
    grad_norm,
    lp_norm,
    mass_power,
    slopes,
    stiffness_weights,
    tridiag_solve,
)
from .optim import SolverOptions, armijo_descent

log = logging.getLogger(__name__)


# -- result types ----------------------------------------------------------


class ValueKind(enum.Enum):
    Finite = "finite"
    MinusInfinity = "-inf"
    PlusInfinity = "+inf"


@dataclass
class ExtendedValue:
    """A value in R u {-inf, +inf} with attainment status and evidence.

    ``attained`` is None when attainment is an open question (p = 2q at the
    corner (lambda_1(p), beta*)).  ``probe`` holds the energies of the
    sequence that demonstrated divergence; ``code`` is a short machine tag.
    """

    kind: ValueKind
    value: float
    attained: Optional[bool] = False
    witness: Optional[Field] = None
    residual: float = float("nan")
    probe: List[float] = field(default_factory=list)
    code: str = "ok"
    notes: List[str] = field(default_factory=list)

    @classmethod
    def finite(cls, value, attained=True, witness=None, **kw) -> "ExtendedValue":
        return cls(ValueKind.Finite, float(value), attained, witness, **kw)

    @classmethod
    def minus_infinity(cls, probe, **kw) -> "ExtendedValue":
        return cls(ValueKind.MinusInfinity, -math.inf, False, None, probe=list(probe), **kw)

    @classmethod
    def plus_infinity(cls, **kw) -> "ExtendedValue":
        return cls(ValueKind.PlusInfinity, math.inf, False, None, **kw)

    @property
    def is_finite(self) -> bool:
        return self.kind is ValueKind.Finite

    def summary(self) -> dict:
        return {
            "kind": self.kind.value,
            "value": self.value if self.is_finite else None,
            "attained": self.attained,
            "residual": None if math.isnan(self.residual) else self.residual,
            "code": self.code,
            "notes": list(self.notes),
            "probe_min": min(self.probe) if self.probe else None,
        }


@dataclass
class GroundStateReport:
    d_value: ExtendedValue
    u1: Optional[Field] = None
    u2: Optional[Field] = None
    pde_residual_u1: float = float("nan")
    pde_residual_u2: float = float("nan")
    region: str = ""
    failures: List[str] = field(default_factory=list)


@dataclass
class ProbeReport:
    p: float
    q: float
    alpha: float
    beta: float
    eps: List[float]
    values: List[float]
    slope: float
    verdict: str
    expected: str

    @property
    def min_value(self) -> float:
        return min(self.values) if self.values else float("nan")


@dataclass
class SweepPoint:
    alpha: float
    beta: float
    energy: float = float("nan")
    norm_p: float = float("nan")
    grad_norm_p: float = float("nan")
    dist_phi_p: float = float("nan")
    dist_phi_q: float = float("nan")
    dist_limit: float = float("nan")
    residual: float = float("nan")
    error: Optional[str] = None


@dataclass
class SweepReport:
    kind: str
    points: List[SweepPoint]
    trend: str
    final_distance: float
    survived: float


# -- landmarks -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Landmarks:
    """Discrete critical values for one (mesh, p, q); immutable once built."""

    mesh: Mesh
    p: float
    q: float
    lam_p: float
    lam_q: float
    phi_p: Field
    phi_q: Field
    alpha_star: float
    beta_star: float
    opts: SolverOptions

    def band(self, x: float) -> float:
        return self.opts.boundary_band * max(1.0, abs(x))

    def near(self, x: float, target: float) -> bool:
        return abs(x - target) <= self.band(target)

    def threshold(self, alpha: float) -> CurveSample:
        """Minimizer of R_q on {H_alpha = 0}; equals the beta*(alpha) minimizer for alpha <= alpha*."""
        a = self.lam_p if self.near(alpha, self.lam_p) else float(alpha)
        return _threshold_sample(self.mesh, self.p, self.q, a, self.opts)

    def beta_star_at(self, alpha: float) -> float:
        """beta*(alpha): +inf left of lambda_1(p), beta* on it, lambda_1(q) from alpha* on."""
        if self.near(alpha, self.lam_p):
            return self.beta_star
        if alpha < self.lam_p:
            return math.inf
        if alpha >= self.alpha_star - self.band(self.alpha_star):
            return self.lam_q
        return self.threshold(alpha).beta_star_alpha


@lru_cache(maxsize=16)
def landmarks(mesh: Mesh, p: float, q: float, opts: Optional[SolverOptions] = None) -> Landmarks:
    _check_pq(p, q)
    opts = opts or SolverOptions()
    ep, eq = first_eigen(mesh, p, opts), first_eigen(mesh, q, opts)
    return Landmarks(mesh, float(p), float(q), ep.lambda1, eq.lambda1, ep.phi, eq.phi,
                     rayleigh(eq.phi, p), rayleigh(ep.phi, q), opts)


@lru_cache(maxsize=512)
def _threshold_sample(mesh, p, q, alpha, opts):
    return beta_star_curve(mesh, p, q, alpha, opts, equality=True)


def predicted_region(lm: Landmarks, alpha: float, beta: float) -> Tuple[str, List[str]]:
    """Region label A/B/C/D of the (alpha, beta) plane plus boundary tags.

    A: alpha < alpha*, lambda_1(q) < beta <= beta*(alpha)   (d < 0)
    B: alpha <= lambda_1(p), beta <= lambda_1(q)             (d = +inf)
    C: alpha > lambda_1(p), beta <= lambda_1(q)              (d >= 0)
    D: alpha >= lambda_1(p), beta > beta*(alpha)             (d = -inf)
    Points within the boundary band of a separating line count as on it.
    """
    tags = []
    on_lp, on_lq = lm.near(alpha, lm.lam_p), lm.near(beta, lm.lam_q)
    if on_lp:
        tags.append("alpha=lambda1(p)")
    if on_lq:
        tags.append("beta=lambda1(q)")
    if lm.near(alpha, lm.alpha_star):
        tags.append("alpha=alpha*")
    if beta <= lm.lam_q or on_lq:
        return ("B" if alpha <= lm.lam_p or on_lp else "C"), tags
    thr = lm.beta_star_at(alpha)
    if math.isfinite(thr) and lm.near(beta, thr):
        tags.append("beta=beta*(alpha)")
        return ("A" if alpha < lm.alpha_star - lm.band(lm.alpha_star) else "D"), tags
    if beta < thr:
        return "A", tags
    return "D", tags


# -- numerical kernels -----------------------------------------------------


def _power_increment(a: np.ndarray, b: np.ndarray, r: float) -> np.ndarray:
    """|a + b|^r - |a|^r without cancellation when |b| << |a|."""
    out = np.abs(a + b) ** r - np.abs(a) ** r
    small = np.abs(b) < 0.5 * np.abs(a)
    x = b[small] / a[small]
    out[small] = np.abs(a[small]) ** r * np.expm1(r * np.log1p(x))
    return out


def _hg_increment(v, d, h, P: EnergyParams):
    """H(v + d) - H(v) and G(v + d) - G(v), summed with fsum."""
    s, ds = slopes(v, h), slopes(d, h)
    dh = (math.fsum(h * _power_increment(s, ds, P.p))
          - P.alpha * math.fsum(h * _power_increment(v, d, P.p)))
    dg = (math.fsum(h * _power_increment(s, ds, P.q))
          - P.beta * math.fsum(h * _power_increment(v, d, P.q)))
    return dh, dg


def _in_cone(H, G, scale_h, scale_g, cone: SignClass) -> bool:
    if not strictly_separated(H, G, scale_h, scale_g):
        return False
    return (H > 0) if cone is SignClass.BMinus else (H < 0)


def _hg_scales(v, h, P):
    H, G, Np, Nq = hg_values(v, h, P)
    return H, G, Np + abs(P.alpha) * mass_power(v, h, P.p), Nq + abs(P.beta) * mass_power(v, h, P.q)


def _combined_weights(v, h, P, floor, t=1.0):
    """Edge weights of the principal part of E'' at t*v."""
    return (t ** P.p * stiffness_weights(v, h, P.p, floor)
            + t ** P.q * stiffness_weights(v, h, P.q, floor))


@dataclass
class FiberedResult:
    direction: Field
    value: float
    t: float
    witness: Field
    residual: float
    iterations: int
    converged: bool
    vanishing: bool


def fibered_minimize(mesh: Mesh, P: EnergyParams, seed: Field, cone: SignClass,
                     opts: Optional[SolverOptions] = None) -> FiberedResult:
    """Minimize J over the cone B- or B+ on the sphere ||u||_p = 1.

    Trial steps leaving the cone are rejected and halved.  In B+ the run
    stops early once J falls below 1e-24: that only happens along a
    vanishing sequence (t -> 0), which is then reported via ``vanishing``.

    Raises:
        SignError: the seed is not strictly inside the cone.
        NonConvergence: iteration cap reached.
    """
    opts = opts or SolverOptions()
    if cone not in (SignClass.BMinus, SignClass.BPlus):
        raise ValueError("cone must be BMinus or BPlus")
    h, p, q = mesh.h, P.p, P.q
    floor = opts.precond_floor

    def normalize(v):
        return v / mass_power(v, h, p) ** (1.0 / p)

    def admissible(v):
        return _in_cone(*_hg_scales(v, h, P), cone)

    def fun(v):
        H, G, _, _ = hg_values(v, h, P)
        return fibered_value(H, G, P), fibered_gradient_array(v, h, P, H, G)

    def t_of(v):
        H, G, _, _ = hg_values(v, h, P)
        return (-G / H) ** (1.0 / (p - q))

    def precond(v, g):
        t = t_of(v)
        return tridiag_solve(_combined_weights(v, h, P, floor, t), g)

    def residual(v, g):
        t = t_of(v)
        return float(np.linalg.norm(g) / (t * residual_scale(t * v, h, P)))

    def fold(v):
        w = np.abs(v)
        if admissible(w) and fun(w)[0] <= fun(v)[0]:
            return w
        return v

    v0 = normalize(np.asarray(seed.values, dtype=float))
    if not admissible(v0):
        raise SignError(f"seed is not inside {cone.value}")
    f_floor = 1e-24 if cone is SignClass.BPlus else None
    res = armijo_descent(fun, v0, precond, opts, residual=residual, retract=normalize,
                         admissible=admissible, every=(opts.abs_every, fold), f_floor=f_floor)
    v = fold(res.x)
    J, _ = fun(v)
    t = t_of(v)
    w = Field(mesh, t * v)
    vanishing = cone is SignClass.BPlus and t < 1e-4 and abs(J) < 1e-8
    return FiberedResult(Field(mesh, v), J, t, w, pde_residual(w, P), res.iterations,
                         res.converged, vanishing)


def _descend_energy(mesh: Mesh, P: EnergyParams, seed: np.ndarray, opts: SolverOptions,
                    guard: Optional[float] = None):
    h, floor = mesh.h, opts.precond_floor
    guard = opts.divergence_threshold if guard is None else guard

    def fun(v):
        H, G, _, _ = hg_values(v, h, P)
        return H / P.p + G / P.q, energy_gradient_array(v, h, P)

    def precond(v, g):
        # Newton step with the (tridiagonal) Hessian when it gives descent,
        # else the positive definite principal part alone
        c = _combined_weights(v, h, P, floor)
        a = np.abs(v)
        a = np.maximum(a, max(floor * float(a.max()), 1e-300))
        shift = -h * (P.alpha * (P.p - 1) * a ** (P.p - 2) + P.beta * (P.q - 1) * a ** (P.q - 2))
        try:
            d = tridiag_solve(c, g, shift)
            if np.all(np.isfinite(d)) and g @ d > 0:
                return d
        except (np.linalg.LinAlgError, ValueError):
            pass
        return tridiag_solve(c, g)

    def residual(v, g):
        s = residual_scale(v, h, P)
        return float(np.linalg.norm(g) / s) if s > 0 else 0.0

    return armijo_descent(fun, seed, precond, opts, residual=residual,
                          every=(opts.abs_every, np.abs), f_floor=-guard)


def _ray_probe(u: Field, P: EnergyParams, threshold: float, k_max: int = 80) -> List[float]:
    """Energies E(2^k u), k = 0, 1, ... until one falls below -threshold."""
    out = []
    for k in range(k_max):
        e = energy(u * 2.0 ** k, P)
        out.append(e)
        if e < -threshold:
            break
    return out


def _nehari_seeds(lm: Landmarks, P: EnergyParams):
    """Eigenfunctions lying in B-, each scaled onto the Nehari set, best J first."""
    h = lm.mesh.h
    seeds = []
    for phi in (lm.phi_q, lm.phi_p):
        H, G, sh, sg = _hg_scales(phi.values, h, P)
        if _in_cone(H, G, sh, sg, SignClass.BMinus):
            t = (-G / H) ** (1.0 / (P.p - P.q))
            seeds.append((fibered_value(H, G, P), phi * t))
    seeds.sort(key=lambda s: s[0])
    return [s[1] for s in seeds]


# -- global minimum --------------------------------------------------------


def global_min(mesh: Mesh, P: EnergyParams, opts: Optional[SolverOptions] = None, *,
               lm: Optional[Landmarks] = None) -> ExtendedValue:
    """m(alpha, beta) = inf E over the whole space.

    Analytic region tests decide the infinite and trivial cases, each with a
    probe sequence as evidence; the remaining cases run preconditioned
    descent on E from the best Nehari-projected eigenfunction, guarded
    against divergence.
    """
    opts = opts or SolverOptions()
    lm = lm or landmarks(mesh, P.p, P.q, opts)
    a, b = P.alpha, P.beta
    thr = opts.divergence_threshold
    on_lp, on_lq = lm.near(a, lm.lam_p), lm.near(b, lm.lam_q)

    if a > lm.lam_p and not on_lp:
        probe = _ray_probe(lm.phi_p, P, thr)
        return ExtendedValue.minus_infinity(probe, code="ray-phi_p")
    if b <= lm.lam_q or on_lq:
        tag = "boundary" if on_lp or on_lq else "ok"
        return ExtendedValue.finite(0.0, True, mesh.zeros(), residual=0.0, code=tag)
    if on_lp:
        Pl = P.with_(alpha=lm.lam_p)
        if b > lm.beta_star and not lm.near(b, lm.beta_star):
            probe = _ray_probe(lm.phi_p, Pl, thr)
            return ExtendedValue.minus_infinity(probe, code="ray-phi_p")
        if lm.near(b, lm.beta_star):
            if P.p < 2 * P.q:
                rep = dichotomy_probe(mesh, P.p, P.q, opts, lm=lm, stop_below=-thr)
                return ExtendedValue.minus_infinity(rep.values, code="dichotomy")
            val = _global_descent(mesh, Pl, lm, opts)
            if P.p == 2 * P.q and val.is_finite:
                val.attained = None
                val.code = "open-case"
            return val
        return _global_descent(mesh, Pl, lm, opts)
    return _global_descent(mesh, P, lm, opts)


def _global_descent(mesh, P, lm, opts) -> ExtendedValue:
    seeds = _nehari_seeds(lm, P)
    if not seeds:
        raise NehariLabError("no eigenfunction seed lies in B-; the global minimum is not negative here")
    # the seed energy sets the scale: a finite minimum deep below
    # -divergence_threshold is legitimate when the seed already is
    guard = max(opts.divergence_threshold, 1e3 * abs(energy(seeds[0], P)))
    try:
        res = _descend_energy(mesh, P, seeds[0].values, opts, guard)
    except NonConvergence as exc:
        raise NonConvergence(f"global descent at alpha={P.alpha}, beta={P.beta}: {exc}",
                             best=Field(mesh, exc.best), value=exc.value,
                             iterations=exc.iterations) from None
    if res.f < -guard:
        return ExtendedValue.minus_infinity(res.history, code="descent-diverged")
    w = Field(mesh, np.abs(res.x))
    e = energy(w, P)
    if e > 0:
        raise NehariLabError(f"descent ended at positive energy {e}; zero is lower")
    code = "ok" if res.converged else "stalled"
    return ExtendedValue.finite(e, True, w, residual=pde_residual(w, P), code=code)


# -- ground states ---------------------------------------------------------


def _fibered_value(mesh, P, seed, cone, opts, *, attained_code="ok") -> Tuple[ExtendedValue, FiberedResult]:
    r = fibered_minimize(mesh, P, seed, cone, opts)
    if r.vanishing:
        ev = ExtendedValue.finite(0.0, False, None, code="vanishing")
        ev.notes.append(f"minimizing sequence vanishes: t={r.t:.3e}, J={r.value:.3e}")
        return ev, r
    code = attained_code if r.converged else "stalled"
    return ExtendedValue.finite(r.value, True, r.witness, residual=r.residual, code=code), r


def nehari_probe(u0: Field, P: EnergyParams, opts: Optional[SolverOptions] = None,
                 k_max: int = 60) -> List[float]:
    """J along u0 + s theta with H -> 0+ while G stays negative.

    ``u0`` should satisfy H(u0) ~ 0 < -G(u0).  theta is the Sobolev gradient
    of H at u0, so H increases along it; the zero of H on the line is located
    by bisection and J is sampled at geometrically shrinking offsets past it.
    Returns the probe values in sampling order (undefined points skipped).
    """
    opts = opts or SolverOptions()
    v0, h = u0.values, u0.mesh.h
    theta = tridiag_solve(stiffness_weights(v0, h, P.p, opts.precond_floor), h_gradient(v0, h, P))
    theta *= np.abs(v0).max() / max(np.abs(theta).max(), 1e-300)
    H0, G0, _, _ = hg_values(v0, h, P)

    def hg(s):
        dh, dg = _hg_increment(v0, s * theta, h, P)
        return H0 + dh, G0 + dg

    d1 = P.p * float(h_gradient(v0, h, P) @ theta)
    if not d1 > 0:
        return []
    s0 = -H0 / d1
    width = 1e-3 * abs(s0) + 1e-12
    lo, hi = s0 - width, s0 + width
    for _ in range(200):
        if hg(lo)[0] <= 0 < hg(hi)[0]:
            break
        width *= 2
        lo, hi = s0 - width, s0 + width
    else:
        return []
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if hg(mid)[0] <= 0:
            lo = mid
        else:
            hi = mid
    out = []
    step = 1e-2
    for k in range(1, k_max + 1):
        H, G = hg(hi + step * 2.0 ** (-k))
        if H > 0 > G:
            out.append(fibered_value(H, G, P))
            if out[-1] < -opts.divergence_threshold:
                break
    return out


def ground_state(mesh: Mesh, P: EnergyParams, opts: Optional[SolverOptions] = None, *,
                 lm: Optional[Landmarks] = None) -> GroundStateReport:
    """d(alpha, beta) = inf E over the Nehari set, by region.

    B: Nehari set empty, +inf.  C: minimize J over B+ from phi_p (d > 0).
    beta = lambda_1(q): positive and attained below alpha*, 0 attained by
    phi_q at alpha*, 0 not attained beyond (vanishing sequence detected).
    A: minimize J over B- from phi_q (d < 0).  D: the probe family along the
    beta*(alpha) minimizer drives J below -divergence_threshold.  The corner
    (lambda_1(p), beta*) follows the p vs 2q dichotomy.
    """
    opts = opts or SolverOptions()
    lm = lm or landmarks(mesh, P.p, P.q, opts)
    region, tags = predicted_region(lm, P.alpha, P.beta)
    rep = GroundStateReport(d_value=None, region=region)
    a, b = P.alpha, P.beta
    on_lp, on_lq = lm.near(a, lm.lam_p), lm.near(b, lm.lam_q)
    boundary = "boundary" if tags else "ok"

    if region == "B":
        rep.d_value = ExtendedValue.plus_infinity(code="empty-nehari")
        return rep

    if region == "C":
        if on_lq and lm.near(a, lm.alpha_star):
            w = lm.phi_q
            ev = ExtendedValue.finite(0.0, True, w, residual=pde_residual(w, P), code="phi_q")
            ev.notes.append("attained by multiples of phi_q, which do not solve the equation")
            rep.d_value = ev
            return rep
        ev, r = _fibered_value(mesh, P, lm.phi_p, SignClass.BPlus, opts, attained_code=boundary)
        if ev.attained:
            rep.u2, rep.pde_residual_u2 = r.witness, r.residual
        rep.d_value = ev
        return rep

    Pl = P.with_(alpha=lm.lam_p) if on_lp else P
    if region == "A":
        if on_lp and lm.near(b, lm.beta_star) and P.p < 2 * P.q:
            pr = dichotomy_probe(mesh, P.p, P.q, opts, lm=lm, stop_below=-opts.divergence_threshold)
            rep.d_value = ExtendedValue.minus_infinity(pr.values, code="dichotomy")
            return rep
        seeds = _nehari_seeds(lm, Pl)
        ev, r = _fibered_value(mesh, Pl, seeds[0], SignClass.BMinus, opts, attained_code=boundary)
        if on_lp and lm.near(b, lm.beta_star) and P.p == 2 * P.q:
            ev.attained = None
            ev.code = "open-case"
        rep.u1, rep.pde_residual_u1 = r.witness, r.residual
        rep.d_value = ev
        return rep

    # region D
    u0 = lm.phi_p if on_lp else lm.threshold(a).minimizer
    probe = nehari_probe(u0, Pl, opts)
    if probe and min(probe) < -opts.divergence_threshold:
        rep.d_value = ExtendedValue.minus_infinity(probe, code="probe" if not tags else "boundary")
        return rep
    # the probe could not leave the discrete threshold; report what the cones give
    thr_eq = lm.threshold(a).beta_star_alpha
    note = (f"discrete threshold inf{{R_q : H_alpha = 0}} = {thr_eq:.6g} is not below beta = {b:.6g}; "
            "the probe family has no point with H > 0 > G")
    seeds = _nehari_seeds(lm, Pl)
    if seeds:
        ev, r = _fibered_value(mesh, Pl, seeds[0], SignClass.BMinus, opts)
        if ev.attained:
            rep.u1, rep.pde_residual_u1 = r.witness, r.residual
    else:
        ev, r = _fibered_value(mesh, Pl, lm.phi_p, SignClass.BPlus, opts)
        if ev.attained:
            rep.u2, rep.pde_residual_u2 = r.witness, r.residual
    ev.code = "discrete-gap"
    ev.notes.append(note)
    ev.probe = probe
    rep.d_value = ev
    return rep


# -- dichotomy at (lambda_1(p), beta*) --------------------------------------


def dichotomy_direction(lm: Landmarks, P: EnergyParams) -> np.ndarray:
    """Direction theta with <G'(phi_p), theta> < 0 and <H'(phi_p), theta> = 0.

    Sobolev steepest descent direction of <G'(phi_p), .> restricted to the
    kernel of <H'(phi_p), .>, with sup norm matched to phi_p.
    """
    v, h = lm.phi_p.values, lm.mesh.h
    gg = g_gradient(v, h, P)
    hh = h_gradient(v, h, P)
    w = stiffness_weights(v, h, P.q, lm.opts.precond_floor)
    kg, kh = tridiag_solve(w, np.column_stack([gg, hh])).T
    # K-orthogonal projection keeps <G', theta> <= 0 (Cauchy-Schwarz)
    mu = (hh @ kg) / (hh @ kh) if hh @ kh > 0 else 0.0
    theta = -(kg - mu * kh)
    return theta * np.abs(v).max() / np.abs(theta).max()


def dichotomy_probe(mesh: Mesh, p: float, q: float, opts: Optional[SolverOptions] = None, *,
                    k_max: int = 40, lm: Optional[Landmarks] = None,
                    stop_below: Optional[float] = None) -> ProbeReport:
    """J(phi_p + eps theta) for eps = 2^-k at alpha = lambda_1(p), beta = beta*.

    Both H and G vanish at phi_p, so H grows like eps^2 and G falls like
    -eps, giving J ~ -eps^((p - 2q)/(p - q)).  The log-log slope of |J|
    against eps over the second half of the range decides the verdict:
    below -0.1 divergent, above 0.1 bounded, otherwise inconclusive.
    With ``stop_below`` the sequence is extended (k up to 60) until J drops
    below that value; this is how the -inf evidence for m and d is built.
    """
    opts = opts or SolverOptions()
    lm = lm or landmarks(mesh, p, q, opts)
    P = EnergyParams(p, q, lm.lam_p, lm.beta_star)
    v, h = lm.phi_p.values, mesh.h
    theta = dichotomy_direction(lm, P)
    eps, vals = [], []
    k_last = max(60, k_max) if stop_below is not None else k_max
    for k in range(1, k_last + 1):
        e = 2.0 ** (-k)
        H, G = _hg_increment(v, e * theta, h, P)
        if H > 0 > G:
            eps.append(e)
            vals.append(fibered_value(H, G, P))
            if stop_below is not None and k >= k_max and vals[-1] < stop_below:
                break
    fit = [(math.log(e), math.log(abs(j))) for e, j in zip(eps, vals)
           if e <= 2.0 ** (-(k_max // 2)) and e >= 2.0 ** (-k_max) and j != 0]
    slope = float(np.polyfit(*zip(*fit), 1)[0]) if len(fit) >= 2 else float("nan")
    if math.isnan(slope) or abs(slope) <= 0.1:
        verdict = "inconclusive"
    else:
        verdict = "divergent" if slope < 0 else "bounded"
    if p < 2 * q:
        expected = "divergent"
    elif p > 2 * q:
        expected = "bounded"
    else:
        expected = "open"
    return ProbeReport(p, q, P.alpha, P.beta, eps, vals, slope, verdict, expected)


# -- multiplicity ----------------------------------------------------------


def normalized_distance(u: Field, v: Field) -> float:
    """L^2 distance between u/||u||_2 and v/||v||_2 (sign aligned)."""
    a = u.values / lp_norm(u, 2.0)
    b = v.values / lp_norm(v, 2.0)
    if a @ b < 0:
        b = -b
    return lp_norm(Field(u.mesh, a - b), 2.0)


def multiplicity_search(mesh: Mesh, P: EnergyParams, opts: Optional[SolverOptions] = None, *,
                        lm: Optional[Landmarks] = None) -> GroundStateReport:
    """Two positive solutions for lambda_1(p) < alpha < alpha*, lambda_1(q) < beta <= beta*(alpha).

    u1 minimizes J over B- from phi_q (negative energy, the ground state);
    u2 minimizes J over B+ from phi_p (positive energy); on the curve
    beta = beta*(alpha) it is the curve minimizer scaled by its multiplier,
    which has zero energy.
    A failed search is recorded in ``failures``; nothing is substituted.
    """
    opts = opts or SolverOptions()
    lm = lm or landmarks(mesh, P.p, P.q, opts)
    a, b = P.alpha, P.beta
    if not (lm.lam_p < a < lm.alpha_star and lm.lam_q < b):
        raise ValueError("multiplicity needs lambda1(p) < alpha < alpha* and beta > lambda1(q)")
    thr = lm.beta_star_at(a)
    if b > thr and not lm.near(b, thr):
        raise ValueError(f"beta={b} lies above beta*(alpha)={thr}")
    rep = GroundStateReport(d_value=None, region="A")
    try:
        ev, r1 = _fibered_value(mesh, P, lm.phi_q, SignClass.BMinus, opts)
        rep.d_value = ev
        rep.u1, rep.pde_residual_u1 = r1.witness, r1.residual
    except NehariLabError as exc:
        rep.failures.append(f"u1 (B-): {exc}")
    if lm.near(b, thr):
        # on the curve the B+ infimum is 0, reached by the scaled curve minimizer
        try:
            kkt = verify_kkt(lm.threshold(a), P)
            rep.u2 = lm.threshold(a).minimizer * kkt.t
            rep.pde_residual_u2 = kkt.residual
        except NehariLabError as exc:
            rep.failures.append(f"u2 (curve): {exc}")
        return rep
    try:
        r2 = fibered_minimize(mesh, P, lm.phi_p, SignClass.BPlus, opts)
        if r2.vanishing:
            rep.failures.append("u2 (B+): minimizing sequence vanished")
        else:
            rep.u2, rep.pde_residual_u2 = r2.witness, r2.residual
    except NehariLabError as exc:
        rep.failures.append(f"u2 (B+): {exc}")
    return rep


def region_a_point(lm: Landmarks, samples: int = 32) -> Tuple[float, float]:
    """Area centroid of {lambda_1(p) < alpha < alpha*, lambda_1(q) < beta < beta*(alpha)}."""
    al = np.linspace(lm.lam_p, lm.alpha_star, samples + 1)
    mids = 0.5 * (al[1:] + al[:-1])
    w = np.array([lm.beta_star_at(a) - lm.lam_q for a in mids])
    area = w.sum()
    return float((mids * w).sum() / area), float(lm.lam_q + 0.5 * (w * w).sum() / area)


# -- boundary sweeps -------------------------------------------------------

SWEEP_KINDS = ("divergent", "vanishing", "bounded")


def sweep_path(lm: Landmarks, kind: str, n: int = 8) -> List[Tuple[float, float]]:
    """Default parameter paths approaching a boundary point geometrically.

    divergent: alpha_k = lambda_1(p) - 4^-k at beta = beta* + 1.
    vanishing: beta_k = lambda_1(q) + 2^-(k+1) at alpha = lambda_1(p) - 1.
    bounded:   alpha_k = lambda_1(p) + c 2^-k at the midpoint beta of
               (lambda_1(q), beta*), with c chosen below the curve.
    """
    if kind == "divergent":
        return [(lm.lam_p - 4.0 ** (-k), lm.beta_star + 1.0) for k in range(n)]
    if kind == "vanishing":
        return [(lm.lam_p - 1.0, lm.lam_q + 2.0 ** (-(k + 1))) for k in range(n)]
    if kind == "bounded":
        beta = 0.5 * (lm.lam_q + lm.beta_star)
        c = 0.5
        while lm.beta_star_at(lm.lam_p + c) <= beta and c > 1e-6:
            c *= 0.5
        return [(lm.lam_p + c * 2.0 ** (-k), beta) for k in range(n)]
    raise ValueError(f"unknown sweep kind {kind!r}; expected one of {SWEEP_KINDS}")


def _sweep_limit(mesh, lm, kind, path, opts) -> Optional[Field]:
    if kind == "divergent":
        return lm.phi_p / lp_norm(lm.phi_p, lm.p)
    if kind == "vanishing":
        return lm.phi_q / grad_norm(lm.phi_q, lm.q)
    val = global_min(mesh, EnergyParams(lm.p, lm.q, lm.lam_p, path[-1][1]), opts, lm=lm)
    return val.witness / lp_norm(val.witness, lm.p) if val.witness is not None else None


def _dist(u: Field, v: Field) -> float:
    return lp_norm(Field(u.mesh, u.values - v.values), 2.0)


def boundary_sweep(mesh: Mesh, p: float, q: float, path: Sequence[Tuple[float, float]],
                   opts: Optional[SolverOptions] = None, *, kind: str) -> SweepReport:
    """Follow witnesses along ``path`` and classify the trend.

    Each point uses the global minimizer where it is finite (alpha below
    lambda_1(p)), else the B- ground state.  ``kind`` names the expected
    limit: 'divergent' (E -> -inf, ||u||_p -> inf, profile -> phi_p),
    'vanishing' (E -> 0, ||u'||_p -> 0, profile -> phi_q) or 'bounded'
    (bounded energies, witnesses converge to the global minimizer at
    alpha = lambda_1(p)).  The observed trend is one of those three names or
    'unclassified'; at least 80% of the points must survive.
    """
    opts = opts or SolverOptions()
    if kind not in SWEEP_KINDS:
        raise ValueError(f"unknown sweep kind {kind!r}")
    lm = landmarks(mesh, p, q, opts)
    limit = _sweep_limit(mesh, lm, kind, path, opts)
    phi_p_n = lm.phi_p / lp_norm(lm.phi_p, p)
    phi_q_n = lm.phi_q / grad_norm(lm.phi_q, q)
    pts = []
    for a, b in path:
        pt = SweepPoint(float(a), float(b))
        P = EnergyParams(p, q, a, b)
        try:
            if a < lm.lam_p and not lm.near(a, lm.lam_p):
                val = global_min(mesh, P, opts, lm=lm)
            else:
                val = ground_state(mesh, P, opts, lm=lm).d_value
            if not val.is_finite or val.witness is None:
                raise NehariLabError(f"no witness ({val.kind.value}, {val.code})")
            u = val.witness.abs()
            pt.energy = energy(u, P)
            pt.norm_p = lp_norm(u, p)
            pt.grad_norm_p = grad_norm(u, p)
            pt.residual = val.residual
            pt.dist_phi_p = _dist(u / pt.norm_p, phi_p_n)
            pt.dist_phi_q = _dist(u / grad_norm(u, q), phi_q_n)
            if limit is not None:
                ref = u / pt.norm_p if kind != "vanishing" else u / grad_norm(u, q)
                pt.dist_limit = _dist(ref, limit)
        except NehariLabError as exc:
            pt.error = str(exc)
        pts.append(pt)
    ok = [pt for pt in pts if pt.error is None]
    survived = len(ok) / max(len(pts), 1)
    final = ok[-1].dist_limit if ok else float("nan")
    trend = _classify_trend(ok, opts) if survived >= 0.8 and len(ok) >= 3 else "unclassified"
    return SweepReport(kind, pts, trend, final, survived)


def _nonincreasing(xs, rel=1e-9):
    return all(b <= a + rel * max(1.0, abs(a)) for a, b in zip(xs, xs[1:]))


def _classify_trend(pts: List[SweepPoint], opts: SolverOptions) -> str:
    E = [pt.energy for pt in pts]
    Np = [pt.norm_p for pt in pts]
    Gp = [pt.grad_norm_p for pt in pts]
    dp = [pt.dist_phi_p for pt in pts]
    dq = [pt.dist_phi_q for pt in pts]
    if (_nonincreasing(E) and _nonincreasing([-x for x in Np])
            and E[-1] < -opts.divergence_threshold and dp[-1] < dp[0]):
        return "divergent"
    if (_nonincreasing([abs(e) for e in E]) and _nonincreasing(Gp)
            and abs(E[-1]) < 1e-2 * abs(E[0]) and dq[-1] < dq[0]):
        return "vanishing"
    steps = [_abs_diff(a, b) for a, b in zip(pts, pts[1:])]
    if (max(abs(e) for e in E) < opts.divergence_threshold and max(Np) < 10 * min(Np)
            and steps[-1] < steps[0]):
        return "bounded"
    return "unclassified"


def _abs_diff(a: SweepPoint, b: SweepPoint) -> float:
    return abs(a.dist_limit - b.dist_limit) + abs(a.energy - b.energy)
