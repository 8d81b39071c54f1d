from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracneumann import extension
from fracneumann.extension import (
    RhoProfile,
    TruncationWarning,
    cs_constant,
    cylinder_energy,
    default_y_grid,
    dtn,
    extend,
    rho_derivative,
    rho_eval,
    rho_ode_oracle,
    trace_constant_Cs,
    write_rho_table,
)
from fracneumann.fractional import FracParams, frac_symbol
from fracneumann.spectral_core import ModelDomain, SpectralField, build_basis

# 30-digit mpmath evaluations of 2^{1-s}/Gamma(s) t^s K_s(t) and its derivative
T_POINTS = (0.1, 1.0, 2.0, 2.5, 10.0)
FROZEN_RHO = {
    0.25: (0.70042410648624275, 0.19980502117429668, 0.06364627180613659, 0.036756592526791459, 1.4710259124614881e-5),
    0.75: (0.96584164285270577, 0.50053476184578457, 0.20875018003569869, 0.13239262060446822, 9.9669823997220656e-5),
}
FROZEN_DRHO = {
    0.25: (-1.4599018019328717, -0.23925000891467053, -0.07055528965713022, -0.040023170840347398, -1.5065425758833751e-5),
    0.75: (-0.4633864886026201, -0.41801193296814994, -0.18830864082193368, -0.12158710834092161, -9.7320113043879472e-5),
}
# 2^{1-2s} Gamma(1-s)/Gamma(s) in mpmath; scipy.quad of the weighted Dirichlet integral agrees to 1e-15
FROZEN_CS = {0.25: 0.477988797486125, 0.75: 2.0920992401062033}


@pytest.mark.parametrize("s", [0.25, 0.75])
def test_rho_against_frozen_values(s):
    assert np.allclose(rho_eval(np.array(T_POINTS), s), FROZEN_RHO[s], rtol=1e-13, atol=0)
    assert np.allclose(rho_derivative(np.array(T_POINTS), s), FROZEN_DRHO[s], rtol=1e-13, atol=0)


@pytest.mark.parametrize("s", [0.25, 0.75])
def test_constants_against_frozen_values(s):
    assert cs_constant(s) == pytest.approx(FROZEN_CS[s], rel=1e-14)
    assert trace_constant_Cs(s) == pytest.approx(FROZEN_CS[s], rel=1e-12)


def test_rho_boundary_behaviour():
    for s in (0.2, 0.5, 0.8):
        assert rho_eval(0.0, s) == 1.0
        assert rho_eval(60.0, s) < 1e-24
    assert rho_derivative(0.0, 0.25) == -np.inf
    assert rho_derivative(0.0, 0.75) == 0.0
    with pytest.raises(ValueError):
        rho_eval(-1.0, 0.5)
    with pytest.raises(ValueError):
        rho_eval(1.0, 1.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(1e-3, 30.0))
def test_rho_solves_ode(s, t):
    # rho'' + (1-2s)/t rho' = rho, checked with a central difference of rho'
    h = 1e-5 * t
    d2 = (rho_derivative(t + h, s) - rho_derivative(t - h, s)) / (2 * h)
    drift = (1 - 2 * s) / t * rho_derivative(t, s)
    scale = max(abs(d2), abs(drift), float(rho_eval(t, s)))
    assert abs(d2 + drift - rho_eval(t, s)) <= 1e-6 * scale


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.0, 40.0), st.floats(0.0, 5.0))
def test_rho_decreasing_and_bounded(s, t, dt):
    a, b = rho_eval(t, s), rho_eval(t + dt, s)
    assert 0.0 <= b <= a <= 1.0


@pytest.mark.parametrize("s", [0.25, 0.75])
def test_ode_oracle(s):
    t = np.linspace(0.05, 15.0, 60)
    rho, cs = rho_ode_oracle(t, s)
    assert np.max(np.abs(rho - rho_eval(t, s))) < 1e-10
    assert cs == pytest.approx(cs_constant(s), rel=1e-9)


def test_half_closed_forms():
    t = np.linspace(0, 20, 501)
    assert np.allclose(rho_eval(t, 0.5), np.exp(-t), rtol=0, atol=1e-15)
    assert cs_constant(0.5) == 1.0
    assert trace_constant_Cs(0.5, exact_half=False) == pytest.approx(1.0, abs=1e-12)


def test_tail_fraction_matches_direct_quadrature():
    prof = RhoProfile(0.3)
    T = 3.0
    direct = extension._tanh_sinh(lambda t: (prof(t + T) ** 2 + prof.derivative(t + T) ** 2) * (t + T) ** 0.4, 40.0, 7)
    assert prof.tail_fraction(T) == pytest.approx(direct / prof.C_s, rel=1e-8)
    assert prof.tail_fraction(0.0) == 1.0


def test_extension_trace_and_profile():
    b = build_basis(ModelDomain.interval(1.0), 16)
    P = FracParams(0.04, 0.25)
    u = SpectralField.mode(b, 3, 0.7) + SpectralField.constant(b, 2.0)
    U = extend(u, P)
    assert np.allclose(U.trace().values, (SpectralField.mode(b, 3, 0.7) + SpectralField.constant(b, 2.0)).coeffs @ b.mode_matrix().T)
    coeff = (b.mode_matrix().T @ U.values) * b.grid.weight
    rate = math.sqrt(P.eps * b.eigenvalues[3])
    assert np.allclose(coeff[3], 0.7 * rho_eval(rate * U.y, 0.25), atol=1e-13)
    assert np.allclose(coeff[0], u.coeffs[0], atol=1e-13)


def test_constant_trace_gives_constant_sheet_with_zero_energy():
    b = build_basis(ModelDomain.rectangle(1.0, 0.5), 6)
    P = FracParams(0.5, 0.6)
    U = extend(SpectralField.constant(b, 1.5), P)
    assert np.allclose(U.values, 1.5, atol=1e-14)
    assert abs(cylinder_energy(U)) < 1e-14


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("eps", [1.0, 1e-2])
def test_energy_identity_modes(s, eps):
    b = build_basis(ModelDomain.interval(1.0), 12)
    P = FracParams(eps, s)
    sym = frac_symbol(b, P)
    for k in (1, 4, 10):
        E = cylinder_energy(extend(SpectralField.mode(b, k), P))
        assert E == pytest.approx(0.5 * cs_constant(s) * sym[k], rel=1e-5)


def test_energy_identity_rectangle_mixture():
    b = build_basis(ModelDomain.rectangle(1.0, 0.5), 6)
    P = FracParams(0.1, 0.4)
    rng = np.random.default_rng(1)
    u = SpectralField(b, rng.standard_normal(b.K) / (1 + np.arange(b.K)))
    E = cylinder_energy(extend(u, P))
    assert E == pytest.approx(0.5 * cs_constant(0.4) * float(np.sum(frac_symbol(b, P) * u.coeffs**2)), rel=1e-5)


def test_truncated_height_warns():
    b = build_basis(ModelDomain.interval(1.0), 8)
    P = FracParams(1.0, 0.5)
    with pytest.warns(TruncationWarning):
        cylinder_energy(extend(SpectralField.mode(b, 1), P, default_y_grid(b, P, y_max=1.0)))


def test_dtn_matches_one_sided_flux():
    b = build_basis(ModelDomain.interval(1.0), 8)
    P = FracParams(0.3, 0.7)
    u = SpectralField.mode(b, 2)
    y = np.array([0.0, 1e-7, 2e-7])
    U = extend(u, P, y)
    coeff = (b.mode_matrix().T @ U.values) * b.grid.weight
    # U - U(0) ~ y^{2s} near the base, so the secant quotient is the flux over 2s
    flux = -2 * P.s * (y[1] ** P.a) * (coeff[2, 1] - coeff[2, 0]) / y[1]
    assert flux == pytest.approx(dtn(u, P).coeffs[2], rel=1e-3)


def test_rho_table(tmp_path):
    path = write_rho_table(tmp_path / "rho.csv", 0.25, [0.0, 1.0])
    lines = path.read_text().splitlines()
    assert lines[0] == "t,rho,drho" and lines[1].startswith("0.0,1.0,")


def test_canonical_extension_minimises_energy():
    b = build_basis(ModelDomain.interval(1.0), 8)
    P = FracParams(0.2, 0.35)
    u = SpectralField.mode(b, 1) + SpectralField.mode(b, 3, 0.4)
    U = extend(u, P)
    E0 = cylinder_energy(U)
    phi = b.mode_matrix(U.grid)
    y = U.y
    bump = y * np.exp(-y)  # vanishes on the base, so the trace is unchanged
    for k, delta in ((1, 0.05), (3, -0.02), (0, 0.1)):
        V = U.with_values(U.values + delta * np.outer(phi[:, k], bump).reshape(U.values.shape))
        assert np.allclose(V.trace().values, U.trace().values)
        assert cylinder_energy(V) > E0
