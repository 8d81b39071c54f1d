# cython: language_level=3
"""Compiled point-wise kernels for K_nu and the extension profile rho.

Same algorithms and branch points as ``_kernels_py``: reflection series
for x <= 1, Steed's continued fraction above.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs, log, pow, sin, sqrt, tgamma, INFINITY, M_PI

cnp.import_array()

cdef double SERIES_CUTOFF = 1.0
cdef int SERIES_TERMS = 30
cdef int CF_MAXIT = 10000
cdef double CF_EPS = 1e-16


cdef inline double _gamma_series(double h, double c, double inv_gamma_c) noexcept nogil:
    cdef double term = inv_gamma_c
    cdef double total = term
    cdef int j
    for j in range(1, SERIES_TERMS):
        term = term * h / (j * (j - 1 + c))
        total += term
    return total


cdef inline void _steed_cf2(double mu, double x, double* kmu, double* k1) noexcept nogil:
    """exp(x) K_mu(x), exp(x) K_{mu+1}(x) for x >= 1, |mu| <= 1/2."""
    cdef double a1 = 0.25 - mu * mu
    cdef double b = 2.0 * (1.0 + x)
    cdef double d = 1.0 / b
    cdef double delh = d
    cdef double h = d
    cdef double q1 = 0.0
    cdef double q2 = 1.0
    cdef double q = a1
    cdef double c = a1
    cdef double a = -a1
    cdef double ssum = 1.0 + q * delh
    cdef double qnew, dels
    cdef int i
    for i in range(2, CF_MAXIT):
        a -= 2 * (i - 1)
        c = -a * c / i
        if a == 0.0:
            break
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        ssum += dels
        if fabs(dels / ssum) < CF_EPS:
            break
    h = a1 * h
    kmu[0] = sqrt(M_PI / (2.0 * x)) / ssum
    k1[0] = kmu[0] * (mu + x + 0.5 - h) / x


def besselk(double nu, x):
    """Modified Bessel function of the second kind K_nu(x) for 0 < nu < 1, x > 0."""
    if not (0.0 < nu < 1.0):
        raise ValueError("order must lie in (0, 1)")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xa = np.atleast_1d(np.asarray(x, dtype=np.float64)).ravel()
    cdef Py_ssize_t n = xa.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
    cdef double g_neg = 1.0 / tgamma(1.0 - nu)
    cdef double g_pos = 1.0 / tgamma(1.0 + nu)
    cdef double refl = M_PI / (2.0 * sin(nu * M_PI))
    cdef double xi, half, hh, kmu, k1
    cdef Py_ssize_t i
    for i in range(n):
        if xa[i] <= 0.0:
            raise ValueError("argument must be positive")
    with nogil:
        for i in range(n):
            xi = xa[i]
            if xi <= SERIES_CUTOFF:
                half = 0.5 * xi
                hh = half * half
                out[i] = refl * (pow(half, -nu) * _gamma_series(hh, 1.0 - nu, g_neg)
                                 - pow(half, nu) * _gamma_series(hh, 1.0 + nu, g_pos))
            else:
                if nu <= 0.5:
                    _steed_cf2(nu, xi, &kmu, &k1)
                    out[i] = kmu * exp(-xi)
                else:
                    _steed_cf2(nu - 1.0, xi, &kmu, &k1)
                    out[i] = k1 * exp(-xi)
    return out


def rho_and_derivative(double s, t):
    """rho(t) = 2^{1-s}/Gamma(s) t^s K_s(t) and rho'(t); see the NumPy twin for t = 0."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ta = np.atleast_1d(np.asarray(t, dtype=np.float64)).ravel()
    cdef Py_ssize_t n = ta.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rho = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] drho = np.empty(n)
    cdef double g = tgamma(1.0 - s)
    cdef double iA = 1.0 / tgamma(1.0 - s)
    cdef double idA = 1.0 / tgamma(2.0 - s)
    cdef double iB = 1.0 / tgamma(1.0 + s)
    cdef double idB = 1.0 / tgamma(2.0 + s)
    cdef double pref = pow(2.0, 1.0 - s) / tgamma(s)
    cdef double d0
    if s < 0.5:
        d0 = -INFINITY
    elif s == 0.5:
        d0 = -1.0
    else:
        d0 = 0.0
    cdef double ti, half, hh, q, A, dA, B, dB, ks, ks1, k1ms, scale
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            ti = ta[i]
            if 0.5 * ti == 0.0:
                rho[i] = 1.0
                drho[i] = d0
            elif ti <= SERIES_CUTOFF:
                half = 0.5 * ti
                hh = half * half
                q = pow(half, 2.0 * s)
                A = _gamma_series(hh, 1.0 - s, iA)
                dA = _gamma_series(hh, 2.0 - s, idA)
                B = _gamma_series(hh, 1.0 + s, iB)
                dB = _gamma_series(hh, 2.0 + s, idB)
                rho[i] = g * (A - q * B)
                drho[i] = g * (half * dA - s * q / half * B - q * half * dB)
            else:
                if s <= 0.5:
                    _steed_cf2(s, ti, &ks, &ks1)
                    k1ms = ks1 - (2.0 * s / ti) * ks
                else:
                    _steed_cf2(s - 1.0, ti, &k1ms, &ks)
                scale = pref * exp(s * log(ti) - ti)
                rho[i] = scale * ks
                drho[i] = -scale * k1ms
    return rho, drho
