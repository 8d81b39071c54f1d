from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracneumann.spectral_core import (
    GridField,
    ModelDomain,
    SpectralField,
    analyze,
    build_basis,
    lp_norm,
    midpoint_grid,
    project_function,
    synthesize,
)


def test_domain_parse_and_geometry():
    d = ModelDomain.parse("rectangle:2,0.5")
    assert d.dimension == 2 and d.measure == 1.0
    assert d.diameter == pytest.approx(math.hypot(2, 0.5))
    assert ModelDomain.parse("interval").lengths == (1.0,)
    assert ModelDomain.parse(d.describe()) == d
    for bad in ("disk:1", "interval:-1", "rectangle:1", "interval:x"):
        with pytest.raises(ValueError):
            ModelDomain.parse(bad)


def test_eigenvalues_interval_and_rectangle():
    b = build_basis(ModelDomain.interval(2.0), 6)
    assert np.allclose(b.eigenvalues, (np.arange(6) * np.pi / 2.0) ** 2, rtol=1e-15)
    r = build_basis(ModelDomain.rectangle(1.0, 0.5), 4)
    expected = sorted((i * np.pi) ** 2 + (j * np.pi / 0.5) ** 2 for i in range(4) for j in range(4))
    assert r.K == 16
    assert np.allclose(r.eigenvalues, expected, rtol=1e-15)
    assert r.eigenvalues[0] == 0.0 and tuple(r.indices[0]) == (0, 0)


def test_grid_must_resolve_modes():
    with pytest.raises(ValueError):
        build_basis(ModelDomain.interval(1.0), 16, grid_size=20)


def test_mode_matrix_orthonormal(interval_basis, rectangle_basis):
    for b in (interval_basis, rectangle_basis):
        M = b.mode_matrix()
        gram = (M.T @ M) * b.grid.weight
        assert np.allclose(gram, np.eye(b.K), atol=1e-13)


def test_constant_and_first_mode_values(interval_basis):
    b = interval_basis
    one = synthesize(SpectralField.constant(b, 1.0)).values
    assert np.allclose(one, 1.0, atol=1e-15)
    x = b.grid.axes[0]
    phi1 = synthesize(SpectralField.mode(b, 1)).values
    assert np.allclose(phi1, np.sqrt(2.0) * np.cos(np.pi * x), atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=64, max_size=64), st.sampled_from([1, 2]))
def test_analyze_inverts_synthesize(values, dim):
    b = build_basis(ModelDomain.interval(1.3), 64) if dim == 1 else build_basis(ModelDomain.rectangle(1.0, 0.7), 8)
    c = np.asarray(values[: b.K])
    u = SpectralField(b, c)
    back = analyze(synthesize(u))
    assert np.allclose(back.coeffs, c, atol=1e-12)
    fine = midpoint_grid(b.domain, tuple(3 * n for n in b.grid.shape))
    assert np.allclose(analyze(synthesize(u, fine)).coeffs, c, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=16, max_size=16))
def test_parseval(values):
    b = build_basis(ModelDomain.interval(1.0), 16)
    u = SpectralField(b, np.asarray(values))
    g = synthesize(u)
    assert lp_norm(g, 2) == pytest.approx(u.l2_norm(), rel=1e-12, abs=1e-12)


def test_field_algebra(interval_basis):
    b = interval_basis
    u, v = SpectralField.mode(b, 1, 2.0), SpectralField.constant(b, 3.0)
    assert (u + v - v).coeffs.tolist() == u.coeffs.tolist()
    assert (2 * u).dot(u) == 8.0
    assert v.mean() == pytest.approx(3.0)
    with pytest.raises(ValueError):
        SpectralField(b, np.full(b.K, np.nan))
    other = build_basis(ModelDomain.interval(1.0), 32)
    with pytest.raises(ValueError):
        u + SpectralField.zeros(other)


def test_project_function_recovers_cosine(rectangle_basis):
    b = rectangle_basis
    Lx, Ly = b.domain.lengths
    f = project_function(b, lambda c: 2.0 * np.cos(np.pi * c[..., 0] / Lx) * np.cos(2 * np.pi * c[..., 1] / Ly))
    k = [i for i, idx in enumerate(b.indices) if tuple(idx) == (1, 2)][0]
    expected = np.zeros(b.K)
    expected[k] = np.sqrt(Lx * Ly)
    assert np.allclose(f.coeffs, expected, atol=1e-13)


def test_grid_integrate_and_lp():
    b = build_basis(ModelDomain.interval(2.0), 8)
    g = GridField(b, np.full(b.grid.shape, -3.0))
    assert g.integrate() == pytest.approx(-6.0)
    assert lp_norm(g, np.inf) == 3.0
    with pytest.raises(ValueError):
        lp_norm(g, 0.5)
