"""
Trace energy, its gradient and Hessian, and the solvers for

    (-eps Lap_N)^s u + u = u_+^p   in Omega,   Neumann on the boundary.

The energy is written on the trace with the ``c_s = 1`` normalisation:

    J(u) = 1/2 sum_k ((eps lambda_k)^s + 1) u_k^2 - 1/(p+1) int u_+^{p+1},

with the nonlinear integral taken on an oversampled midpoint grid so that
the gradient is the exact derivative of the discrete energy.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Sequence

import numpy as np

from .fractional import FracParams, frac_symbol
from .spectral_core import (
    BasisSpec,
    GridField,
    QuadratureGrid,
    SpectralField,
    analyze,
    midpoint_grid,
    project_function,
    synthesize,
)

log = logging.getLogger(__name__)

__all__ = [
    "SemilinearProblem",
    "SolverConfig",
    "SolutionReport",
    "energy",
    "gradient",
    "hessian",
    "residual_norm",
    "nehari_scale",
    "nehari_project",
    "spike_profile",
    "spike_competitor",
    "default_centers",
    "perturbed_constant",
    "classify",
    "solve_newton",
    "solve_fixed_point",
    "solve_from",
    "solve_mountain_pass",
]


def default_oversample(p: float) -> int:
    return max(2, math.ceil(p))


@dataclass(frozen=True, eq=False)
class SemilinearProblem:
    """Basis, fractional parameters and the exponent ``p``."""

    basis: BasisSpec
    params: FracParams
    p: float
    oversample: int | None = None

    def __post_init__(self) -> None:
        if not self.p > 1:
            raise ValueError(f"exponent p must exceed 1, got {self.p}")
        n, s = self.basis.dimension, self.params.s
        if n > 2 * s and not self.p < (n + 2 * s) / (n - 2 * s):
            raise ValueError(f"p={self.p} is not subcritical: need p < {(n + 2 * s) / (n - 2 * s):.6g}")
        if self.oversample is None:
            object.__setattr__(self, "oversample", default_oversample(self.p))
        if self.oversample < 2:
            raise ValueError("oversampling factor must be at least 2")

    @property
    def eps(self) -> float:
        return self.params.eps

    def with_oversample(self, factor: int | None) -> "SemilinearProblem":
        if factor is None or factor == self.oversample:
            return self
        return replace(self, oversample=factor)

    def with_eps(self, eps: float) -> "SemilinearProblem":
        return replace(self, params=FracParams(eps, self.params.s))

    @cached_property
    def stiffness(self) -> np.ndarray:
        """``(eps lambda_k)^s + 1``."""
        return frac_symbol(self.basis, self.params) + 1.0

    @cached_property
    def nl_grid(self) -> QuadratureGrid:
        return midpoint_grid(self.basis.domain, tuple(self.oversample * m for m in self.basis.axis_modes))

    @cached_property
    def nl_matrix(self) -> np.ndarray:
        return self.basis.mode_matrix(self.nl_grid)

    def values(self, u: SpectralField) -> np.ndarray:
        """``u`` on the nonlinear quadrature grid."""
        return synthesize(u, self.nl_grid).values

    def project(self, values: np.ndarray) -> SpectralField:
        return analyze(GridField(self.basis, values, self.nl_grid))

    def integrate(self, values: np.ndarray) -> float:
        return float(values.sum() * self.nl_grid.weight)


@dataclass(frozen=True)
class SolverConfig:
    """Iteration limits, tolerances and multistart settings."""

    max_iter: int = 3000
    newton_max_iter: int = 60
    tol: float = 1e-9
    switch_tol: float = 1e-4
    step: float = 1.0
    backtrack: float = 0.5
    min_step: float = 1e-10
    oversample: int | None = None
    tau: float = 1e-3
    centers: tuple[tuple[float, ...], ...] | None = None
    n_random: int = 0
    random_amplitude: float = 0.2
    random_modes: int = 8
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("tol", "switch_tol", "step", "min_step", "tau", "random_amplitude"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if self.oversample is not None and self.oversample < 2:
            raise ValueError("oversampling factor must be at least 2")
        if self.max_iter < 0 or self.newton_max_iter < 0 or self.n_random < 0:
            raise ValueError("iteration counts must be nonnegative")


@dataclass(frozen=True, eq=False)
class SolutionReport:
    solution: SpectralField
    residual: float
    energy: float
    classification: str
    positive: bool
    norms: dict[str, float]
    mass: float
    mean_identity_gap: float
    iterations: int
    newton_iterations: int
    converged: bool
    label: str = ""
    history: tuple[float, ...] = ()
    notes: tuple[str, ...] = ()
    starts: tuple[dict, ...] = field(default=(), repr=False)

    @property
    def nonconstant(self) -> bool:
        return self.classification == "nonconstant"

    def to_dict(self, include_solution: bool = True) -> dict:
        out = {
            "label": self.label,
            "converged": self.converged,
            "residual": self.residual,
            "energy": self.energy,
            "classification": self.classification,
            "positive": self.positive,
            "norms": dict(self.norms),
            "mass": self.mass,
            "mean_identity_gap": self.mean_identity_gap,
            "iterations": self.iterations,
            "newton_iterations": self.newton_iterations,
            "notes": list(self.notes),
            "starts": list(self.starts),
        }
        if include_solution:
            out["coefficients"] = [float(c) for c in self.solution.coeffs]
        return out


def energy(u: SpectralField, prob: SemilinearProblem) -> float:
    """Trace energy ``J(u)`` (``c_s = 1``)."""
    quad = 0.5 * float(np.sum(prob.stiffness * u.coeffs**2))
    v = np.maximum(prob.values(u), 0.0)
    return quad - prob.integrate(v ** (prob.p + 1)) / (prob.p + 1)


def gradient(u: SpectralField, prob: SemilinearProblem) -> SpectralField:
    """Coefficients ``((eps lambda_k)^s + 1) u_k - <u_+^p, phi_k>``."""
    v = np.maximum(prob.values(u), 0.0)
    return SpectralField(u.basis, prob.stiffness * u.coeffs - prob.project(v**prob.p).coeffs)


def hessian(u: SpectralField, prob: SemilinearProblem) -> np.ndarray:
    """Galerkin Hessian ``diag(stiffness) - p <u_+^{p-1} phi_j phi_k>``."""
    v = np.maximum(prob.values(u), 0.0).ravel()
    M = prob.nl_matrix
    H = -prob.p * (M.T * (v ** (prob.p - 1) * prob.nl_grid.weight)) @ M
    H[np.diag_indices_from(H)] += prob.stiffness
    return H


def residual_norm(u: SpectralField, prob: SemilinearProblem) -> float:
    return gradient(u, prob).l2_norm()


def nehari_scale(u: SpectralField, prob: SemilinearProblem) -> float:
    """The ``t* > 0`` maximising ``t -> J(t u)``."""
    quad = float(np.sum(prob.stiffness * u.coeffs**2))
    nl = prob.integrate(np.maximum(prob.values(u), 0.0) ** (prob.p + 1))
    if not nl > 0:
        raise ValueError("u has no positive part; the Nehari scaling is undefined")
    return (quad / nl) ** (1.0 / (prob.p - 1.0))


def nehari_project(u: SpectralField, prob: SemilinearProblem) -> SpectralField:
    return nehari_scale(u, prob) * u


def spike_profile(x: np.ndarray, center: Sequence[float], eps: float) -> np.ndarray:
    """
    Tent of height ``eps^{-n/2}`` supported on the ball of radius ``sqrt(eps)``.

    ``x`` is an array of points with the coordinate on the last axis (or a
    plain array in 1-d).
    """
    x = np.asarray(x, dtype=float)
    c = np.atleast_1d(np.asarray(center, dtype=float))
    n = c.size
    if n == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    r = np.sqrt(np.sum((x - c) ** 2, axis=-1))
    root = math.sqrt(eps)
    return np.where(r < root, eps ** (-n / 2.0) * (1.0 - r / root), 0.0)


def spike_competitor(prob: SemilinearProblem, center: Sequence[float]) -> SpectralField:
    """Project the tent at ``center`` onto the basis, sampling at least 8 nodes per ``sqrt(eps)``."""
    basis = prob.basis
    root = math.sqrt(prob.eps)
    shape = tuple(max(n, math.ceil(8 * L / root)) for n, L in zip(basis.grid.shape, basis.domain.lengths))
    dim = basis.dimension

    def tent(x):
        return spike_profile(x if dim > 1 else x[..., None], center, prob.eps)

    return project_function(basis, tent, shape)


def default_centers(basis: BasisSpec) -> tuple[tuple[float, ...], ...]:
    """An interior point at a quarter of each side, and the corner/end at the origin."""
    return (tuple(0.25 * L for L in basis.domain.lengths), tuple(0.0 for _ in basis.domain.lengths))


def perturbed_constant(basis: BasisSpec, rng: np.random.Generator, amplitude: float = 0.2,
                       n_modes: int = 8) -> SpectralField:
    """``1`` plus a random combination of the first few nonconstant modes."""
    c = SpectralField.constant(basis, 1.0).coeffs.copy()
    m = min(n_modes, basis.K - 1)
    if m > 0:
        c[1:m + 1] += amplitude * rng.standard_normal(m) / np.sqrt(m)
    return SpectralField(basis, c)


def classify(u: SpectralField, tau: float = 1e-3, grid: QuadratureGrid | None = None) -> tuple[str, bool]:
    """
    ``("nonconstant" | "constant", positive)``.

    Non-constant when the mean-free part exceeds ``tau`` times the L2 norm;
    positive when the grid minimum is strictly positive.
    """
    total = u.l2_norm()
    fluct = float(np.linalg.norm(u.coeffs[1:]))
    kind = "nonconstant" if fluct > tau * total else "constant"
    positive = bool(synthesize(u, grid).values.min() > 0)
    return kind, positive


def _make_report(u: SpectralField, prob: SemilinearProblem, config: SolverConfig, *, iterations: int,
                 newton_iterations: int, history: Sequence[float], notes: Sequence[str], label: str) -> SolutionReport:
    g = gradient(u, prob)
    res = g.l2_norm()
    vals = prob.values(u)
    absv = np.abs(vals)
    w = prob.nl_grid.weight
    p = prob.p
    norms = {
        "L1": float(absv.sum() * w),
        "L2": float(np.sqrt((absv**2).sum() * w)),
        "Lp1": float(((absv ** (p + 1)).sum() * w) ** (1.0 / (p + 1))),
        "Linf": float(synthesize(u).values.__abs__().max()),
    }
    mass = prob.integrate(vals)
    source = prob.integrate(np.maximum(vals, 0.0) ** p)
    kind, positive = classify(u, config.tau)
    return SolutionReport(
        solution=u,
        residual=res,
        energy=energy(u, prob),
        classification=kind,
        positive=positive,
        norms=norms,
        mass=mass,
        mean_identity_gap=abs(mass - source),
        iterations=iterations,
        newton_iterations=newton_iterations,
        converged=bool(res <= config.tol),
        label=label,
        history=tuple(float(h) for h in history),
        notes=tuple(notes),
    )


def _newton(u: SpectralField, prob: SemilinearProblem, config: SolverConfig):
    notes: list[str] = []
    g = gradient(u, prob)
    r = g.l2_norm()
    history = [r]
    it = 0
    while r > config.tol and it < config.newton_max_iter:
        it += 1
        H = hessian(u, prob)
        try:
            step = np.linalg.solve(H, g.coeffs)
            if not np.all(np.isfinite(step)):
                raise np.linalg.LinAlgError("non-finite Newton step")
        except np.linalg.LinAlgError:
            notes.append(f"singular Hessian at Newton step {it}; took a gradient step")
            step = g.coeffs / prob.stiffness
        lam, accepted = 1.0, False
        while lam >= 1.0 / 1024:
            v = SpectralField(u.basis, u.coeffs - lam * step)
            gv = gradient(v, prob)
            rv = gv.l2_norm()
            if rv < (1.0 - 1e-4 * lam) * r:
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            notes.append(f"Newton line search stalled at residual {r:.3e}")
            break
        u, g, r = v, gv, rv
        history.append(r)
    return u, it, history, notes


def _require_positive_part(u0: SpectralField, prob: SemilinearProblem) -> None:
    if not np.any(prob.values(u0) > 0):
        raise ValueError("start has no positive part; it can only reach the trivial solution")


def _nehari_descent(u: SpectralField, prob: SemilinearProblem, config: SolverConfig):
    """Preconditioned gradient descent with every iterate rescaled onto the Nehari set."""
    u = nehari_project(u, prob)
    J = energy(u, prob)
    step = config.step
    history = []
    it = 0
    notes: list[str] = []
    while it < config.max_iter:
        g = gradient(u, prob)
        r = g.l2_norm()
        history.append(r)
        if r <= config.switch_tol:
            break
        d = g.coeffs / prob.stiffness
        tau = min(config.step, 2.0 * step)
        while tau >= config.min_step:
            try:
                v = nehari_project(SpectralField(u.basis, u.coeffs - tau * d), prob)
            except ValueError:
                tau *= config.backtrack
                continue
            Jv = energy(v, prob)
            if Jv <= J + 1e-14 * abs(J):
                break
            tau *= config.backtrack
        else:
            notes.append(f"descent stalled at residual {r:.3e}")
            break
        u, J, step = v, Jv, tau
        it += 1
    return u, it, history, notes


def solve_newton(prob: SemilinearProblem, u0: SpectralField, config: SolverConfig | None = None,
                 label: str = "newton") -> SolutionReport:
    """Damped Newton on ``gradient = 0`` from ``u0``."""
    config = SolverConfig() if config is None else config
    prob = prob.with_oversample(config.oversample)
    u, it, history, notes = _newton(u0, prob, config)
    return _make_report(u, prob, config, iterations=0, newton_iterations=it, history=history, notes=notes, label=label)


def solve_fixed_point(prob: SemilinearProblem, u0: SpectralField, config: SolverConfig | None = None,
                      label: str = "fixed-point") -> SolutionReport:
    """
    Stabilised fixed-point iteration ``u <- M^g A^{-1} P(u_+^p)``.

    ``A`` is the diagonal ``(eps lambda_k)^s + 1``, ``M = <Au, u> / int u_+^{p+1}``
    and ``g = p/(p-1)``; the factor removes the unstable scaling direction
    of the plain iteration. Fixed points with ``M = 1`` are exactly the
    critical points. Uses ``config.max_iter`` and ``config.tol``.
    """
    config = SolverConfig() if config is None else config
    prob = prob.with_oversample(config.oversample)
    gam = prob.p / (prob.p - 1.0)
    _require_positive_part(u0, prob)
    u = u0
    history = [residual_norm(u, prob)]
    notes: list[str] = []
    it = 0
    while history[-1] > config.tol and it < config.max_iter:
        v = np.maximum(prob.values(u), 0.0)
        nl = prob.integrate(v ** (prob.p + 1))
        if not nl > 0:
            raise ValueError("u has no positive part; the fixed-point map is undefined")
        M = float(np.sum(prob.stiffness * u.coeffs**2)) / nl
        u = SpectralField(u.basis, M**gam * prob.project(v**prob.p).coeffs / prob.stiffness)
        it += 1
        history.append(residual_norm(u, prob))
        if not np.isfinite(history[-1]):
            notes.append("fixed-point iteration diverged")
            break
    return _make_report(u, prob, config, iterations=it, newton_iterations=0, history=history, notes=notes, label=label)


def solve_from(prob: SemilinearProblem, u0: SpectralField, config: SolverConfig | None = None,
               label: str = "") -> SolutionReport:
    """Nehari descent from ``u0`` followed by a Newton polish."""
    config = SolverConfig() if config is None else config
    prob = prob.with_oversample(config.oversample)
    _require_positive_part(u0, prob)
    u, it, hist_d, notes_d = _nehari_descent(u0, prob, config)
    u, nit, hist_n, notes_n = _newton(u, prob, config)
    return _make_report(u, prob, config, iterations=it, newton_iterations=nit,
                        history=hist_d + hist_n[1:], notes=notes_d + notes_n, label=label)


def solve_mountain_pass(prob: SemilinearProblem, config: SolverConfig | None = None) -> SolutionReport:
    """
    Multistart mountain-pass solve.

    Each start is a spike competitor at one of ``config.centers`` (default:
    an interior point and the origin), plus ``config.n_random`` random
    perturbations of the constant 1. The converged run with the lowest
    energy is returned; with none converged, the one with the smallest
    residual comes back with ``converged=False``.
    """
    config = SolverConfig() if config is None else config
    prob = prob.with_oversample(config.oversample)
    centers = config.centers or default_centers(prob.basis)
    starts: list[tuple[str, SpectralField]] = []
    for c in centers:
        starts.append((f"spike@{','.join(f'{v:g}' for v in c)}", spike_competitor(prob, c)))
    rng = np.random.default_rng(config.seed)
    for i in range(config.n_random):
        starts.append((f"random{i}", perturbed_constant(prob.basis, rng, config.random_amplitude, config.random_modes)))

    reports = []
    for label, u0 in starts:
        rep = solve_from(prob, u0, config, label=label)
        log.debug("start %s: residual %.3e energy %.6g %s", label, rep.residual, rep.energy, rep.classification)
        reports.append(rep)
    summary = tuple(
        {"label": r.label, "converged": r.converged, "residual": r.residual, "energy": r.energy,
         "classification": r.classification, "positive": r.positive}
        for r in reports
    )
    converged = [r for r in reports if r.converged]
    if converged:
        best = min(converged, key=lambda r: r.energy)
    else:
        best = min(reports, key=lambda r: r.residual)
    return replace(best, starts=summary)
