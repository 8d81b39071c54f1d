"""
The extension profile rho, its constants, and the half-cylinder extension.

Each Neumann mode extends into the cylinder Omega x (0, inf) as
``rho(sqrt(eps lambda_k) y) phi_k(x)``, where rho solves

    rho'' + (1 - 2s)/t rho' = rho,   rho(0) = 1,   rho(inf) = 0,

i.e. ``rho(t) = 2^{1-s}/Gamma(s) t^s K_s(t)``.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp, trapezoid

from . import _backend
from .fractional import FracParams, frac_symbol
from .spectral_core import GridField, QuadratureGrid, SpectralField, BasisSpec

__all__ = [
    "RhoProfile",
    "ExtensionField",
    "ConvergenceWarning",
    "TruncationWarning",
    "rho_eval",
    "rho_derivative",
    "cs_constant",
    "trace_constant_Cs",
    "rho_ode_oracle",
    "default_y_grid",
    "extend",
    "dtn",
    "cylinder_energy",
    "write_rho_table",
]


class ConvergenceWarning(RuntimeWarning):
    pass


class TruncationWarning(RuntimeWarning):
    pass


def _check_order(s: float) -> None:
    if not 0.0 < s < 1.0:
        raise ValueError(f"order s must lie in (0, 1), got {s}")


def rho_eval(t, s: float) -> np.ndarray:
    """Extension profile ``rho(t; s)`` for ``t >= 0``."""
    _check_order(s)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("rho is defined for t >= 0")
    if s == 0.5:
        return np.exp(-t)
    rho, _ = _backend.rho_and_derivative(s, t.ravel())
    return rho.reshape(t.shape)


def rho_derivative(t, s: float) -> np.ndarray:
    """``rho'(t; s)``, from ``d/dt [t^s K_s(t)] = -t^s K_{1-s}(t)``."""
    _check_order(s)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("rho is defined for t >= 0")
    if s == 0.5:
        return -np.exp(-t)
    _, drho = _backend.rho_and_derivative(s, t.ravel())
    return drho.reshape(t.shape)


def cs_constant(s: float) -> float:
    """
    ``c_s = -lim_{t->0} t^{1-2s} rho'(t)``.

    Near zero ``rho = 1 - Gamma(1-s)/Gamma(1+s) (t/2)^{2s} + O(t^2)``, so
    ``c_s = 2^{1-2s} Gamma(1-s) / Gamma(s)``.
    """
    _check_order(s)
    if s == 0.5:
        return 1.0
    return 2.0 ** (1.0 - 2.0 * s) * math.gamma(1.0 - s) / math.gamma(s)


def _tanh_sinh(func, upper: float, level: int, tau_max: float = 4.0) -> float:
    # nodes t = upper / (1 + exp(-pi sinh tau)); dense near both ends of [0, upper]
    h = 2.0 ** (-level)
    n = int(round(tau_max / h))
    tau = h * np.arange(-n, n + 1)
    e = np.exp(-np.pi * np.sinh(tau))
    t = upper / (1.0 + e)
    w = upper * np.pi * np.cosh(tau) * e / (1.0 + e) ** 2
    keep = (t > 0) & (w > 0)
    return float(h * np.sum(w[keep] * func(t[keep])))


def trace_constant_Cs(s: float, level: int = 6, t_max: float = 40.0, tol: float = 1e-10,
                      exact_half: bool = True) -> float:
    """
    ``C_s = int_0^inf (rho^2 + rho'^2) t^{1-2s} dt`` by tanh-sinh quadrature on ``[0, t_max]``.

    The integrand has an algebraic endpoint singularity at 0 for every
    ``s != 1/2``; tanh-sinh absorbs it. ``level`` sets the step ``2^-level``;
    a warning is raised if halving the step moves the value by more than
    ``tol`` (relative).
    """
    _check_order(s)
    if s == 0.5 and exact_half:
        return 1.0
    a = 1.0 - 2.0 * s

    def integrand(t):
        rho, drho = _backend.rho_and_derivative(s, t)
        return (rho * rho + drho * drho) * t**a

    fine = _tanh_sinh(integrand, t_max, level)
    coarse = _tanh_sinh(integrand, t_max, level - 1)
    if not np.isfinite(fine) or abs(fine - coarse) > tol * abs(fine):
        warnings.warn(f"C_s quadrature not converged for s={s}: {coarse!r} vs {fine!r}", ConvergenceWarning)
    return fine


def _frobenius(t: float, s: float, terms: int = 10) -> tuple[float, float, float, float]:
    """Regular (exponent 0) and singular (exponent 2s) series solutions and their derivatives."""
    a = 1.0 - 2.0 * s
    E = dE = 0.0
    F = dF = 0.0
    e = f = 1.0
    for j in range(terms):
        if j > 0:
            e /= (2 * j) * (2 * j - 1 + a)
            f /= (2 * s + 2 * j) * (2 * s + 2 * j - 1 + a)
        E += e * t ** (2 * j)
        dE += e * 2 * j * t ** (2 * j - 1) if j > 0 else 0.0
        F += f * t ** (2 * s + 2 * j)
        dF += f * (2 * s + 2 * j) * t ** (2 * s + 2 * j - 1)
    return E, dE, F, dF


def rho_ode_oracle(t, s: float, t0: float = 1e-2, rtol: float = 1e-12) -> tuple[np.ndarray, float]:
    """
    Independent route to rho by integrating the profile ODE numerically.

    Works with ``v = rho e^t`` and integrates *backward* from far out,
    where the decaying solution is the dominant one; near ``t0`` the
    numerical solution is matched to the two Frobenius series, which fixes
    the normalisation ``rho(0) = 1`` and gives ``c_s = -2s B / A``.

    Returns ``(rho(t), c_s)``.
    """
    _check_order(s)
    t = np.asarray(t, dtype=float)
    a = 1.0 - 2.0 * s
    T = max(float(np.max(t, initial=0.0)), t0) + 25.0

    def rhs(x, y):
        v, dv = y
        return [dv, 2.0 * dv - (a / x) * (dv - v)]

    # any start is fine: the other solution ~ e^{2t} dies off going backward
    y_T = [T ** (s - 0.5), (s - 0.5) * T ** (s - 1.5)]
    sol = solve_ivp(rhs, (T, t0), y_T, method="DOP853", rtol=rtol, atol=1e-14, dense_output=True)
    if not sol.success:
        raise RuntimeError(f"profile ODE integration failed: {sol.message}")
    v0, dv0 = sol.y[:, -1]
    r0 = v0 * math.exp(-t0)
    dr0 = (dv0 - v0) * math.exp(-t0)
    E, dE, F, dF = _frobenius(t0, s)
    A, B = np.linalg.solve([[E, F], [dE, dF]], [r0, dr0])

    out = np.empty(t.shape)
    near = t < t0
    if near.any():
        for idx in np.flatnonzero(near.ravel()):
            ti = t.flat[idx]
            E_i, _, F_i, _ = _frobenius(ti, s)
            out.flat[idx] = E_i + (B / A) * F_i
    far = ~near
    if far.any():
        v = sol.sol(t[far])[0]
        out[far] = v * np.exp(-t[far]) / A
    return out, float(-2.0 * s * B / A)


@dataclass(frozen=True)
class RhoProfile:
    """rho(.; s) together with ``c_s`` and ``C_s``."""

    s: float

    def __post_init__(self) -> None:
        _check_order(self.s)

    def __call__(self, t) -> np.ndarray:
        return rho_eval(t, self.s)

    def derivative(self, t) -> np.ndarray:
        return rho_derivative(t, self.s)

    @cached_property
    def c_s(self) -> float:
        return cs_constant(self.s)

    @cached_property
    def C_s(self) -> float:
        return trace_constant_Cs(self.s)

    def tail_fraction(self, T) -> np.ndarray:
        """Share of ``C_s`` beyond ``t = T``; integrating by parts gives ``-T^a rho(T) rho'(T) / c_s``."""
        T = np.asarray(T, dtype=float)
        a = 1.0 - 2.0 * self.s
        with np.errstate(invalid="ignore", over="ignore"):
            frac = -(T**a) * self(T) * self.derivative(T) / self.c_s
        return np.where(T > 0, frac, 1.0)


@dataclass(frozen=True, eq=False)
class ExtensionField:
    """Values ``U(x_i, y_j)``; the last axis runs over ``y``."""

    basis: BasisSpec
    params: FracParams
    y: np.ndarray
    values: np.ndarray
    grid: QuadratureGrid

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 1 or y.size < 3 or y[0] != 0.0 or np.any(np.diff(y) <= 0):
            raise ValueError("y grid must start at 0 and increase strictly")
        if self.values.shape != self.grid.shape + (y.size,):
            raise ValueError("values do not match grid x y-grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("extension values must be finite")
        object.__setattr__(self, "y", y)

    def trace(self) -> GridField:
        return GridField(self.basis, self.values[..., 0], self.grid)

    def with_values(self, values: np.ndarray) -> "ExtensionField":
        return ExtensionField(self.basis, self.params, self.y, np.asarray(values, dtype=float), self.grid)


def _slowest_rate(basis: BasisSpec, P: FracParams) -> float:
    pos = basis.eigenvalues[basis.eigenvalues > 0]
    if pos.size == 0:
        return 1.0
    return float(np.sqrt(P.eps * pos.min()))


def default_y_grid(basis: BasisSpec, P: FracParams, n: int = 400, y_max: float | None = None,
                   first_ratio: float = 1e-14) -> np.ndarray:
    """``0`` followed by ``n - 1`` geometric nodes from ``first_ratio * y_max`` to ``y_max = 20/sqrt(eps lambda_1)``."""
    if y_max is None:
        y_max = 20.0 / _slowest_rate(basis, P)
    return np.concatenate([[0.0], np.geomspace(first_ratio * y_max, y_max, n - 1)])


def extend(u: SpectralField, P: FracParams, y_grid=None, grid: QuadratureGrid | None = None,
           profile: RhoProfile | None = None) -> ExtensionField:
    """
    ``U(x, y) = u_0 phi_0 + sum_{k>=1} rho(sqrt(eps lambda_k) y) u_k phi_k(x)``.

    The mean is carried unchanged to every height, the non-constant part
    decays with the profile.
    """
    basis = u.basis
    grid = basis.grid if grid is None else grid
    y = default_y_grid(basis, P) if y_grid is None else np.asarray(y_grid, dtype=float)
    profile = RhoProfile(P.s) if profile is None else profile
    rates = np.sqrt(P.eps * basis.eigenvalues)
    coeff = profile(np.outer(rates, y)) * u.coeffs[:, None]
    coeff[0, :] = u.coeffs[0]
    values = basis.mode_matrix(grid) @ coeff
    return ExtensionField(basis, P, y, values.reshape(grid.shape + (y.size,)), grid)


def dtn(u: SpectralField, P: FracParams, c_s: float | None = None) -> SpectralField:
    """``-lim y^a U_y`` in closed form: coefficients ``c_s (eps lambda_k)^s u_k``."""
    c = cs_constant(P.s) if c_s is None else c_s
    return SpectralField(u.basis, c * frac_symbol(u.basis, P) * u.coeffs)


def _dz(c: np.ndarray, z: np.ndarray) -> np.ndarray:
    """d/dz along the last axis: 4th-order on a uniform z grid, 2nd-order otherwise."""
    dz = np.diff(z)
    if dz.size >= 4 and np.allclose(dz, dz[0], rtol=1e-9, atol=0.0):
        h = dz[0]
        d = np.empty_like(c)
        d[..., 2:-2] = (c[..., :-4] - 8 * c[..., 1:-3] + 8 * c[..., 3:-1] - c[..., 4:]) / (12 * h)
        d[..., :2] = np.gradient(c[..., :3], h, axis=-1, edge_order=2)[..., :2]
        d[..., -2:] = np.gradient(c[..., -3:], h, axis=-1, edge_order=2)[..., -2:]
        return d
    return np.gradient(c, z, axis=-1, edge_order=2)


def cylinder_energy(U: ExtensionField, P: FracParams | None = None, tail_tol: float = 1e-6) -> float:
    """
    ``1/2 iint (eps |grad_x U|^2 + U_y^2) y^a dx dy`` by quadrature.

    x-derivatives are spectral (Parseval on each height), y-derivatives are
    finite differences in ``z = log y`` and the y-integral is the
    trapezoid rule in ``z``. The first cell ``[0, y_1]`` uses the exact
    weight integral ``y_1^{1+a} / (1 + a)``.
    """
    P = U.params if P is None else P
    basis, y = U.basis, U.y
    a = P.a
    M = basis.mode_matrix(U.grid)
    flat = U.values.reshape(U.grid.size, y.size)
    coeff = (M.T @ flat) * U.grid.weight  # (K, Ny)

    lam = basis.eigenvalues
    profile = RhoProfile(P.s)
    live = np.abs(coeff[1:, 0]) > 1e-14 * max(np.abs(coeff[:, 0]).max(), 1e-300)
    if live.any():
        tails = profile.tail_fraction(np.sqrt(P.eps * lam[1:][live]) * y[-1])
        if np.max(tails) > tail_tol:
            warnings.warn(f"y grid truncates {np.max(tails):.2e} of a mode's energy", TruncationWarning)

    yy, cc = y[1:], coeff[:, 1:]
    z = np.log(yy)
    grad_x = P.eps * (lam[:, None] * cc**2).sum(axis=0)
    dc = _dz(cc, z)
    grad_y = (dc**2).sum(axis=0) / yy**2
    body = trapezoid((grad_x + grad_y) * yy ** (1.0 + a), z)

    w0 = yy[0] ** (1.0 + a) / (1.0 + a)
    first_x = P.eps * np.sum(lam * 0.5 * (coeff[:, 0] ** 2 + coeff[:, 1] ** 2)) * w0
    first_y = np.sum(((coeff[:, 1] - coeff[:, 0]) / yy[0]) ** 2) * w0
    return 0.5 * float(body + first_x + first_y)


def write_rho_table(path: str | Path, s: float, t) -> Path:
    """Dump ``t, rho(t), rho'(t)`` as CSV."""
    t = np.asarray(t, dtype=float)
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "rho", "drho"])
        for ti, r, d in zip(t, rho_eval(t, s), rho_derivative(t, s)):
            w.writerow([repr(float(ti)), repr(float(r)), repr(float(d))])
    return path
