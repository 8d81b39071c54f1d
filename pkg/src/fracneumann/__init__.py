"""
Spectral solver and diagnostics for the singularly perturbed fractional
Neumann problem ``(-eps Lap_N)^s u + u = u_+^p`` on intervals and rectangles.
"""

from __future__ import annotations

__version__ = "0.1.0"

from ._backend import BACKEND
from .diagnostics import (
    CoverSpec,
    SweepRow,
    cube_cover,
    fit_scaling,
    harnack_ratio,
    run_sweep,
    sup_bound_check,
    ultracontractivity_check,
)
from .extension import (
    ExtensionField,
    RhoProfile,
    cs_constant,
    cylinder_energy,
    dtn,
    extend,
    rho_derivative,
    rho_eval,
    rho_ode_oracle,
    trace_constant_Cs,
)
from .fractional import FracParams, apply_frac, frac_seminorm_sq, frac_symbol, heat_semigroup, resolvent
from .solver import (
    SemilinearProblem,
    SolutionReport,
    SolverConfig,
    classify,
    energy,
    gradient,
    nehari_scale,
    residual_norm,
    solve_fixed_point,
    solve_from,
    solve_mountain_pass,
    solve_newton,
    spike_competitor,
)
from .spectral_core import (
    BasisSpec,
    GridField,
    ModelDomain,
    QuadratureGrid,
    SpectralField,
    analyze,
    build_basis,
    lp_norm,
    midpoint_grid,
    project_function,
    synthesize,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
