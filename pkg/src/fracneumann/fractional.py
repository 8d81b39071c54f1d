"""Diagonal spectral realisations of (-eps Lap_N)^s, its resolvent and heat semigroup."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral_core import BasisSpec, SpectralField

__all__ = [
    "FracParams",
    "frac_symbol",
    "apply_frac",
    "frac_seminorm_sq",
    "resolvent",
    "heat_semigroup",
]


@dataclass(frozen=True)
class FracParams:
    """Diffusion parameter ``eps > 0`` and fractional order ``0 < s < 1``."""

    eps: float
    s: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.eps) and self.eps > 0):
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not 0 < self.s < 1:
            raise ValueError(f"s must lie in (0, 1), got {self.s}")

    @property
    def a(self) -> float:
        """Weight exponent ``1 - 2s`` of the extension variable."""
        return 1.0 - 2.0 * self.s


def frac_symbol(basis: BasisSpec, P: FracParams, s: float | None = None) -> np.ndarray:
    """``(eps lambda_k)^s`` per mode, with the zero eigenvalue mapped to exactly 0."""
    s = P.s if s is None else s
    lam = basis.eigenvalues
    out = np.zeros_like(lam)
    pos = lam > 0
    out[pos] = np.exp(s * np.log(P.eps * lam[pos]))
    return out


def apply_frac(u: SpectralField, P: FracParams, s: float | None = None) -> SpectralField:
    """Multiply each coefficient by ``(eps lambda_k)^s``; ``s`` overrides ``P.s``."""
    return SpectralField(u.basis, frac_symbol(u.basis, P, s) * u.coeffs)


def frac_seminorm_sq(u: SpectralField, P: FracParams) -> float:
    """``sum_{k>=1} (eps lambda_k)^s u_k^2``."""
    return float(np.sum(frac_symbol(u.basis, P) * u.coeffs**2))


def resolvent(f: SpectralField, P: FracParams) -> SpectralField:
    """Solve ``(-eps Lap_N)^s u + u = f`` in the truncated basis.

    The mean mode is kept with divisor 1: constants are admissible test
    functions, so the k = 0 equation reads ``u_0 = f_0``.
    """
    return SpectralField(f.basis, f.coeffs / (1.0 + frac_symbol(f.basis, P)))


def heat_semigroup(u: SpectralField, t: float, P: FracParams, literal_exponent: bool = False) -> SpectralField:
    """
    Fractional heat semigroup ``exp(-t (-eps Lap_N)^s) u``.

    ``literal_exponent=True`` switches to ``exp(-t^2 (eps lambda_k)^s)``, the
    reading with the time variable doubled; it is not a semigroup and is
    only there to compare against.
    """
    if not t >= 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    tt = t * t if literal_exponent else t
    return SpectralField(u.basis, np.exp(-tt * frac_symbol(u.basis, P)) * u.coeffs)
