"""
Sweep experiments and numerical checks of the qualitative results:
energy and mass scaling in ``eps``, uniform sup bounds, Harnack ratios,
concentration in few cubes of side ``sqrt(eps)`` and heat-semigroup
ultracontractivity.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from .fractional import FracParams, frac_symbol, heat_semigroup
from .solver import SemilinearProblem, SolutionReport, SolverConfig, solve_mountain_pass
from .spectral_core import BasisSpec, GridField, QuadratureGrid, SpectralField, midpoint_grid, synthesize

log = logging.getLogger(__name__)

__all__ = [
    "SweepRow",
    "CoverSpec",
    "diagnostic_grid",
    "run_sweep",
    "attach_cover",
    "fit_scaling",
    "sup_bound_check",
    "cube_cover",
    "harnack_ratio",
    "max_point_spread",
    "heat_kernel_constant",
    "ultracontractivity_check",
]

ROW_COLUMNS = (
    "eps", "s", "p", "classification", "positive", "converged", "energy",
    "L1", "L2", "Lp1", "Linf", "mass", "mean_gap", "cube_count", "harnack", "max_spread",
    "residual", "iterations", "newton_iterations",
)


@dataclass(frozen=True)
class SweepRow:
    """One solve of a sweep and its diagnostics. ``cube_count`` is -1 until a level is set."""

    eps: float
    s: float
    p: float
    classification: str
    energy: float
    L1: float
    L2: float
    Lp1: float
    Linf: float
    residual: float
    converged: bool = True
    positive: bool = True
    mass: float = float("nan")
    mean_gap: float = float("nan")
    cube_count: int = -1
    harnack: float = float("nan")
    max_spread: float = float("nan")
    iterations: int = 0
    newton_iterations: int = 0
    report: SolutionReport | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        for name in ("L1", "L2", "Lp1", "Linf"):
            if getattr(self, name) < 0:
                raise ValueError(f"norm {name} must be nonnegative")

    @property
    def nonconstant(self) -> bool:
        return self.classification == "nonconstant"

    def as_record(self) -> dict:
        return {c: getattr(self, c) for c in ROW_COLUMNS}


@dataclass(frozen=True)
class CoverSpec:
    """Level ``eta`` and cube side ``l = sqrt(eps)``, lattice anchored at the origin."""

    eta: float
    side: float

    def __post_init__(self) -> None:
        if not self.eta > 0:
            raise ValueError("level eta must be positive")
        if not self.side > 0:
            raise ValueError("cube side must be positive")

    @classmethod
    def for_eps(cls, eps: float, eta: float) -> "CoverSpec":
        return cls(eta, math.sqrt(eps))


def diagnostic_grid(basis: BasisSpec, eps: float, nodes_per_ball: int = 8) -> QuadratureGrid:
    """Midpoint grid at least as fine as the basis grid, with spacing at most ``sqrt(eps)/nodes_per_ball``."""
    root = math.sqrt(eps)
    shape = tuple(max(n, math.ceil(nodes_per_ball * L / root))
                  for n, L in zip(basis.grid.shape, basis.domain.lengths))
    return midpoint_grid(basis.domain, shape)


def _grid_of(u: GridField) -> QuadratureGrid:
    return u.grid if u.grid is not None else u.basis.grid


def _points(grid: QuadratureGrid) -> np.ndarray:
    """Node coordinates as an (npts, n) array."""
    c = grid.coords
    return c.reshape(-1, 1) if grid.domain.dimension == 1 else c.reshape(-1, grid.domain.dimension)


def cube_cover(u: GridField, eps: float, eta: float) -> int:
    """Number of cubes ``|x_i - l k_i| <= l/2``, ``l = sqrt(eps)``, meeting the grid set ``{u > eta}``."""
    spec = CoverSpec.for_eps(eps, eta)
    above = np.asarray(u.values).ravel() > spec.eta
    if not above.any():
        return 0
    idx = np.floor(_points(_grid_of(u))[above] / spec.side + 0.5).astype(np.int64)
    return int(np.unique(idx, axis=0).shape[0])


def _ball_footprint(spacing: Sequence[float], radius: float) -> np.ndarray:
    half = [int(math.floor(radius / h)) for h in spacing]
    axes = np.meshgrid(*[np.arange(-m, m + 1) * h for m, h in zip(half, spacing)], indexing="ij")
    return sum(a**2 for a in axes) <= radius**2 * (1 + 1e-12)


def harnack_ratio(u: GridField, eps: float, centers: Iterable[Sequence[float]] | None = None) -> float:
    """
    Largest ``sup/inf`` of ``u`` over the balls ``B(x0, sqrt(n eps))`` cut with the domain.

    With ``centers=None`` every grid node is a center. ``u`` must be positive.
    """
    grid = _grid_of(u)
    vals = np.asarray(u.values, dtype=float).reshape(grid.shape)
    if not vals.min() > 0:
        raise ValueError("Harnack ratio needs a positive function on the grid")
    n = grid.domain.dimension
    radius = math.sqrt(n * eps)
    if centers is None:
        foot = _ball_footprint(grid.spacing, radius)
        hi = ndimage.maximum_filter(vals, footprint=foot, mode="constant", cval=-np.inf)
        lo = ndimage.minimum_filter(vals, footprint=foot, mode="constant", cval=np.inf)
        return float(np.max(hi / lo))
    pts = _points(grid)
    flat = vals.ravel()
    best = 1.0
    for c in centers:
        c = np.atleast_1d(np.asarray(c, dtype=float))
        inside = np.sum((pts - c) ** 2, axis=1) <= radius**2
        if inside.any():
            sel = flat[inside]
            best = max(best, float(sel.max() / sel.min()))
    return best


def max_point_spread(u: GridField, rel_tol: float = 1e-9) -> float:
    """Diameter of the set of grid nodes where ``u`` attains its maximum (up to ``rel_tol``)."""
    vals = np.asarray(u.values).ravel()
    top = vals.max()
    pts = _points(_grid_of(u))[vals >= top - rel_tol * abs(top)]
    if len(pts) < 2:
        return 0.0
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    if len(pts) > 2000:
        return float(np.linalg.norm(hi - lo))
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((diff**2).sum(-1)).max())


def _row_from_report(rep: SolutionReport, prob: SemilinearProblem) -> SweepRow:
    harn = float("nan")
    spread = float("nan")
    if rep.nonconstant:
        fine = synthesize(rep.solution, diagnostic_grid(prob.basis, prob.eps))
        spread = max_point_spread(fine)
        if fine.values.min() > 0:
            harn = harnack_ratio(fine, prob.eps)
    elif rep.positive:
        harn = 1.0 if np.ptp(synthesize(rep.solution).values) == 0 else harnack_ratio(
            synthesize(rep.solution, diagnostic_grid(prob.basis, prob.eps)), prob.eps)
    return SweepRow(
        eps=prob.eps,
        s=prob.params.s,
        p=prob.p,
        classification=rep.classification,
        energy=rep.energy,
        L1=rep.norms["L1"],
        L2=rep.norms["L2"],
        Lp1=rep.norms["Lp1"],
        Linf=rep.norms["Linf"],
        residual=rep.residual,
        converged=rep.converged,
        positive=rep.positive,
        mass=rep.mass,
        mean_gap=rep.mean_identity_gap,
        harnack=harn,
        max_spread=spread,
        iterations=rep.iterations,
        newton_iterations=rep.newton_iterations,
        report=rep,
    )


def run_sweep(template: SemilinearProblem, eps_list: Sequence[float], config: SolverConfig | None = None,
              threads: int = 1, eta: float | None = None) -> list[SweepRow]:
    """
    Solve at each ``eps`` and collect diagnostics, one row per ``eps``.

    Unconverged solves are kept and flagged. Cube counts use ``eta`` when
    given, otherwise half the maximum of the solution at the largest ``eps``.
    Rows are independent; ``threads > 1`` computes them concurrently with
    results identical to the serial run.
    """
    eps_list = [float(e) for e in eps_list]
    if any(not e > 0 for e in eps_list):
        raise ValueError("eps values must be positive")
    if any(b < a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps values must be sorted increasingly")
    if not eps_list:
        return []
    config = SolverConfig() if config is None else config

    def work(eps: float) -> SweepRow:
        prob = template.with_eps(eps)
        rep = solve_mountain_pass(prob, config)
        if not rep.converged:
            log.warning("eps=%g did not converge (residual %.3e)", eps, rep.residual)
        return _row_from_report(rep, prob.with_oversample(config.oversample))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(work, eps_list))
    else:
        rows = [work(e) for e in eps_list]
    return attach_cover(rows, template.basis, eta)


def attach_cover(rows: list[SweepRow], basis: BasisSpec, eta: float | None = None) -> list[SweepRow]:
    """Fill ``cube_count`` for every row with a stored solution."""
    if not rows:
        return rows
    if eta is None:
        top = rows[-1].report
        if top is None:
            return rows
        eta = 0.5 * float(synthesize(top.solution).values.max())
    if not eta > 0:
        return rows
    out = []
    for r in rows:
        if r.report is None:
            out.append(r)
            continue
        fine = synthesize(r.report.solution, diagnostic_grid(basis, r.eps))
        out.append(replace(r, cube_count=cube_cover(fine, r.eps, eta)))
    return out


_QUANTITIES = {
    "energy": lambda r: r.energy,
    "L1": lambda r: r.L1,
    "L2": lambda r: r.L2**2,
    "Lq": lambda r: r.Lp1 ** (r.p + 1),
    "mass": lambda r: r.mass,
}


def fit_scaling(rows: Sequence, quantity: str = "energy") -> float:
    """
    Least-squares slope of ``log Q`` against ``log eps`` over nonconstant rows.

    ``quantity`` is one of ``energy``, ``L1`` (``||u||_1``), ``L2``
    (``||u||_2^2``), ``Lq`` (``||u||_{p+1}^{p+1}``) or ``mass`` (``int u``).
    """
    if quantity not in _QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}; choose from {sorted(_QUANTITIES)}")
    use = [r for r in rows if getattr(r, "classification", "nonconstant") == "nonconstant"]
    if len(use) < 4:
        raise ValueError(f"need at least 4 nonconstant rows, got {len(use)}")
    x = np.log([r.eps for r in use])
    q = np.array([_QUANTITIES[quantity](r) for r in use], dtype=float)
    if np.any(q <= 0):
        raise ValueError(f"{quantity} must be positive to fit a power law")
    slope, _ = np.polyfit(x, np.log(q), 1)
    return float(slope)


def sup_bound_check(rows: Sequence, factor: float = 10.0) -> dict:
    """``max ||u||_inf / median ||u||_inf`` against ``factor``."""
    if not rows:
        return {"max": float("nan"), "median": float("nan"), "ratio": float("nan"), "factor": factor, "passed": True}
    sup = np.array([r.Linf for r in rows], dtype=float)
    ratio = float(sup.max() / np.median(sup))
    return {"max": float(sup.max()), "median": float(np.median(sup)), "ratio": ratio,
            "factor": factor, "passed": bool(ratio <= factor)}


def _kernel_diagonal(basis: BasisSpec, P: FracParams, t: float, grid: QuadratureGrid | None = None) -> np.ndarray:
    M = basis.mode_matrix(grid)
    return (M**2) @ np.exp(-t * frac_symbol(basis, P))


def heat_kernel_constant(basis: BasisSpec, P: FracParams, ts: Sequence[float],
                         grid: QuadratureGrid | None = None) -> float:
    """``max_t sup_x K_t(x,x) t^{n/2s} e^{-t}`` for the truncated kernel, sup over grid nodes."""
    n = basis.dimension
    return max(float(_kernel_diagonal(basis, P, t, grid).max()) * t ** (n / (2 * P.s)) * math.exp(-t) for t in ts)


def _norm(vals: np.ndarray, weight: float, q: float) -> float:
    a = np.abs(vals)
    if math.isinf(q):
        return float(a.max())
    return float((a**q).sum() * weight) ** (1.0 / q)


def ultracontractivity_check(u: SpectralField, P: FracParams, ts: Sequence[float], p: float, q: float,
                             grid: QuadratureGrid | None = None, slack: float = 1e-8) -> dict:
    """
    Table of ``||S_t u||_q / (e^{t(1/p-1/q)} t^{-(n/2s)(1/p-1/q)} ||u||_p)``.

    The bound is ``C^{1/p-1/q}`` with ``C`` from :func:`heat_kernel_constant`
    over the same ``t`` list; it is 1 when ``p == q``. Norms are quadrature
    sums on ``grid`` (``max`` for ``q = inf``).
    """
    if not 1 <= p <= q:
        raise ValueError("need 1 <= p <= q")
    basis = u.basis
    grid = basis.grid if grid is None else grid
    theta = (0.0 if math.isinf(p) else 1.0 / p) - (0.0 if math.isinf(q) else 1.0 / q)
    n = basis.dimension
    up = _norm(synthesize(u, grid).values, grid.weight, p)
    ratios = []
    for t in ts:
        st = synthesize(heat_semigroup(u, t, P), grid).values
        denom = math.exp(t * theta) * t ** (-(n / (2 * P.s)) * theta) * up
        ratios.append(_norm(st, grid.weight, q) / denom)
    C = heat_kernel_constant(basis, P, ts, grid) if theta > 0 else 1.0
    bound = C**theta
    worst = max(ratios) if ratios else 0.0
    return {
        "t": [float(t) for t in ts],
        "ratio": [float(r) for r in ratios],
        "max_ratio": float(worst),
        "bound": float(bound),
        "passed": bool(np.all(np.isfinite(ratios)) and worst <= bound * (1 + slack)),
    }
