"""
Vectorised NumPy kernels for K_nu and the extension profile rho.

Small arguments (x <= 1) use the power series of I_{+-nu} and the
reflection formula K_nu = pi/(2 sin nu pi) (I_{-nu} - I_nu); larger
arguments use Steed's continued fraction (Temme's CF2) for the pair
K_mu, K_{mu+1} with |mu| <= 1/2, returned scaled by exp(x).
"""

from __future__ import annotations

import math

import numpy as np

SERIES_CUTOFF = 1.0
_SERIES_TERMS = 30
_CF_MAXIT = 10000
_CF_EPS = 1e-16


def _gamma_series(h: np.ndarray, c: float) -> np.ndarray:
    """sum_j h^j / (j! Gamma(j + c)) for c > 0."""
    term = np.full_like(h, 1.0 / math.gamma(c))
    total = term.copy()
    for j in range(1, _SERIES_TERMS):
        term = term * h / (j * (j - 1 + c))
        total += term
    return total


def _steed_cf2(mu: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """exp(x) K_mu(x) and exp(x) K_{mu+1}(x) for x >= 1, |mu| <= 1/2."""
    x = np.asarray(x, dtype=float)
    a1 = 0.25 - mu * mu
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    delh = d.copy()
    h = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    q = np.full_like(x, a1)
    c = a1
    a = -a1
    ssum = 1.0 + q * delh
    active = np.ones(x.shape, dtype=bool)
    for i in range(2, _CF_MAXIT):
        a -= 2 * (i - 1)
        c = -a * c / i
        if a == 0.0:
            break
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        dels = q * delh
        # frozen entries keep their converged values
        h = np.where(active, h + delh, h)
        ssum = np.where(active, ssum + dels, ssum)
        active &= np.abs(dels / ssum) >= _CF_EPS
        if not active.any():
            break
    h = a1 * h
    kmu = np.sqrt(np.pi / (2.0 * x)) / ssum
    k1 = kmu * (mu + x + 0.5 - h) / x
    return kmu, k1


def besselk(nu: float, x) -> np.ndarray:
    """Modified Bessel function of the second kind K_nu(x) for 0 < nu < 1, x > 0."""
    if not 0.0 < nu < 1.0:
        raise ValueError("order must lie in (0, 1)")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x <= 0):
        raise ValueError("argument must be positive")
    out = np.empty_like(x)
    small = x <= SERIES_CUTOFF
    if small.any():
        xs = x[small]
        hh = 0.25 * xs * xs
        half = 0.5 * xs
        i_neg = half ** (-nu) * _gamma_series(hh, 1.0 - nu)
        i_pos = half**nu * _gamma_series(hh, 1.0 + nu)
        out[small] = np.pi / (2.0 * math.sin(nu * np.pi)) * (i_neg - i_pos)
    if (~small).any():
        xl = x[~small]
        if nu <= 0.5:
            ke, _ = _steed_cf2(nu, xl)
        else:
            _, ke = _steed_cf2(nu - 1.0, xl)
        out[~small] = ke * np.exp(-xl)
    return out


def rho_and_derivative(s: float, t) -> tuple[np.ndarray, np.ndarray]:
    """
    rho(t) = 2^{1-s}/Gamma(s) t^s K_s(t) and its derivative.

    rho'(0) is reported as -inf for s < 1/2, -1 at s = 1/2 and 0 for s > 1/2.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    rho = np.empty_like(t)
    drho = np.empty_like(t)
    zero = 0.5 * t == 0.0  # subnormal t behaves as 0
    small = ~zero & (t <= SERIES_CUTOFF)
    large = t > SERIES_CUTOFF

    rho[zero] = 1.0
    drho[zero] = -np.inf if s < 0.5 else (-1.0 if s == 0.5 else 0.0)

    if small.any():
        ts = t[small]
        half = 0.5 * ts
        hh = half * half
        g = math.gamma(1.0 - s)
        q = half ** (2.0 * s)
        A = _gamma_series(hh, 1.0 - s)
        dA = _gamma_series(hh, 2.0 - s)
        B = _gamma_series(hh, 1.0 + s)
        dB = _gamma_series(hh, 2.0 + s)
        rho[small] = g * (A - q * B)
        drho[small] = g * (half * dA - s * q / half * B - q * half * dB)

    if large.any():
        tl = t[large]
        pref = 2.0 ** (1.0 - s) / math.gamma(s)
        if s <= 0.5:
            ks, ks1 = _steed_cf2(s, tl)
            k_1ms = ks1 - (2.0 * s / tl) * ks
        else:
            k_1ms, ks = _steed_cf2(s - 1.0, tl)
        scale = pref * np.exp(s * np.log(tl) - tl)
        rho[large] = scale * ks
        drho[large] = -scale * k_1ms
    return rho, drho
