"""Variational solvers for the 1D (p,q)-Laplacian with two spectral parameters.

The package discretizes

    -Delta_p u - Delta_q u = alpha |u|^(p-2) u + beta |u|^(q-2) u   on (a, b),  u = 0 on the boundary,

with P1 finite elements and computes first eigenpairs, the threshold curve
beta*(alpha), the global minimum m(alpha, beta), the Nehari least energy
d(alpha, beta), and the phase diagram those two values induce.
"""

from .curve import (
    CurveSample,
    CurveTrace,
    KKTReport,
    beta_star_curve,
    trace_curve,
    verify_kkt,
)
from .eigen import (
    EigenPair,
    compute_alpha_star,
    compute_beta_star,
    first_eigen,
    linear_independence_check,
    rayleigh,
    solve_first_eigen,
)
from .energy import (
    EnergyParams,
    SignClass,
    energy,
    energy_gradient,
    fibered_j,
    fibered_j_gradient,
    g_beta,
    h_alpha,
    nehari_residual,
    on_nehari,
    pde_residual,
    sign_class,
    t_projection,
)
from .errors import (
    Infeasible,
    InvalidExponent,
    MeshMismatch,
    NehariLabError,
    NonConvergence,
    SignError,
    ZeroFieldError,
)
from .mesh import Field, Mesh, grad_norm, l2_distance, lp_norm
from .optim import SolverOptions
from .oracle import PExactEigen, exact_lambda1, pi_r, shoot_lambda1
from .phase import PhaseCell, ScanResult, classify, full_audit, scan
from .solvers import (
    ExtendedValue,
    GroundStateReport,
    Landmarks,
    ProbeReport,
    SweepReport,
    ValueKind,
    boundary_sweep,
    dichotomy_probe,
    global_min,
    ground_state,
    landmarks,
    multiplicity_search,
    predicted_region,
    region_a_point,
    sweep_path,
)

__version__ = "0.1.0"
