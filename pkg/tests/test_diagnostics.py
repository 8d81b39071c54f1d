from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracneumann.diagnostics import (
    CoverSpec,
    SweepRow,
    cube_cover,
    diagnostic_grid,
    fit_scaling,
    harnack_ratio,
    heat_kernel_constant,
    max_point_spread,
    run_sweep,
    sup_bound_check,
    ultracontractivity_check,
)
from fracneumann.fractional import FracParams
from fracneumann.solver import SemilinearProblem, SolverConfig
from fracneumann.spectral_core import GridField, ModelDomain, SpectralField, build_basis, midpoint_grid, synthesize


def _row(eps, energy=1.0, **kw):
    base = dict(eps=eps, s=0.5, p=2.0, classification="nonconstant", energy=energy,
                L1=1.0, L2=1.0, Lp1=1.0, Linf=1.0, residual=0.0)
    base.update(kw)
    return SweepRow(**base)


@pytest.fixture(scope="module")
def basis():
    return build_basis(ModelDomain.interval(1.0), 32)


def test_fit_scaling_recovers_exact_power_laws():
    eps = np.geomspace(1e-5, 1e-2, 6)
    rows = [_row(e, energy=e, L1=3 * e**0.5, L2=e**0.25, Lp1=e ** (1 / 3), mass=e) for e in eps]
    assert fit_scaling(rows, "energy") == pytest.approx(1.0, abs=1e-12)
    assert fit_scaling(rows, "L1") == pytest.approx(0.5, abs=1e-12)
    assert fit_scaling(rows, "L2") == pytest.approx(0.5, abs=1e-12)
    assert fit_scaling(rows, "Lq") == pytest.approx(1.0, abs=1e-12)
    assert fit_scaling(rows, "mass") == pytest.approx(1.0, abs=1e-12)


def test_fit_scaling_rejections():
    rows = [_row(e) for e in (1e-3, 1e-2, 1e-1)]
    with pytest.raises(ValueError):
        fit_scaling(rows, "energy")
    rows = [_row(e) for e in (1e-4, 1e-3, 1e-2, 1e-1)] + [_row(1.0, classification="constant")]
    assert fit_scaling(rows, "energy") == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        fit_scaling(rows, "L7")


def test_sweep_row_invariants():
    with pytest.raises(ValueError):
        _row(1e-3, L1=-1.0)
    assert _row(1e-3).cube_count == -1


def test_cover_spec_validation():
    assert CoverSpec.for_eps(0.04, 1.0).side == pytest.approx(0.2)
    with pytest.raises(ValueError):
        CoverSpec(0.0, 1.0)
    with pytest.raises(ValueError):
        CoverSpec(1.0, 0.0)


@pytest.mark.parametrize("eps", [1e-2, 1e-3, 3e-4])
def test_cube_cover_of_constant(basis, eps):
    one = synthesize(SpectralField.constant(basis, 1.0), diagnostic_grid(basis, eps))
    assert cube_cover(one, eps, 2.0) == 0
    assert abs(cube_cover(one, eps, 0.5) - math.ceil(1 / math.sqrt(eps))) <= 1


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(0.05, 2.0), st.floats(1e-4, 1e-1))
def test_cube_cover_monotone(eta1, eta2, eps):
    b = build_basis(ModelDomain.rectangle(1.0, 0.5), 6)
    u = SpectralField.constant(b, 1.0) + SpectralField.mode(b, 1, 0.6) + SpectralField.mode(b, 4, 0.3)
    g = synthesize(u, midpoint_grid(b.domain, 40))
    lo, hi = sorted((eta1, eta2))
    assert cube_cover(g, eps, lo) >= cube_cover(g, eps, hi)


def test_harnack_constant_and_bounds(basis):
    one = synthesize(SpectralField.constant(basis, 2.0))
    assert harnack_ratio(one, 1e-2) == 1.0
    u = synthesize(SpectralField.constant(basis, 2.0) + SpectralField.mode(basis, 2, 0.5), midpoint_grid(basis.domain, 4000))
    r_big, r_small = harnack_ratio(u, 1e-2), harnack_ratio(u, 1e-9)
    assert r_big >= r_small >= 1.0
    assert r_small == pytest.approx(1.0, abs=1e-3)
    with pytest.raises(ValueError):
        harnack_ratio(synthesize(SpectralField.mode(basis, 1)), 1e-2)


def test_harnack_explicit_centres_match_filter(basis):
    b = build_basis(ModelDomain.rectangle(1.0, 0.5), 6)
    u = synthesize(SpectralField.constant(b, 3.0) + SpectralField.mode(b, 3, 0.8), midpoint_grid(b.domain, 30))
    pts = u.grid.coords.reshape(-1, 2)
    assert harnack_ratio(u, 2e-3, centers=pts) == pytest.approx(harnack_ratio(u, 2e-3), rel=1e-14)


def test_max_point_spread(basis):
    g = GridField(basis, np.where(np.arange(basis.grid.shape[0]) % 16 == 0, 2.0, 1.0))
    pts = basis.grid.axes[0][::16]
    assert max_point_spread(g) == pytest.approx(pts[-1] - pts[0])
    assert max_point_spread(synthesize(SpectralField.mode(basis, 1))) == 0.0


def test_sup_bound_check():
    assert sup_bound_check([_row(1.0, Linf=1.0)])["ratio"] == 1.0
    rep = sup_bound_check([_row(1.0, Linf=1.0), _row(2.0, Linf=1.0), _row(3.0, Linf=50.0)], factor=10)
    assert rep["ratio"] == 50.0 and not rep["passed"]
    assert sup_bound_check([])["passed"]


def test_ultracontractivity(basis):
    P = FracParams(0.5, 0.5)
    ts = np.geomspace(0.01, 10, 15)
    u = SpectralField.constant(basis, 1.0) + SpectralField.mode(basis, 1, 0.7)
    same = ultracontractivity_check(u, P, ts, 2.0, 2.0)
    assert same["bound"] == 1.0 and same["passed"] and same["max_ratio"] <= 1.0 + 1e-12
    rep = ultracontractivity_check(SpectralField.mode(basis, 1), P, ts, 2.0, math.inf)
    assert rep["passed"] and rep["bound"] == pytest.approx(heat_kernel_constant(basis, P, ts) ** 0.5)
    late = ultracontractivity_check(u, P, [40.0, 80.0], 2.0, math.inf)["ratio"]
    assert late[1] < late[0] < 1e-6
    with pytest.raises(ValueError):
        ultracontractivity_check(u, P, ts, 3.0, 2.0)


def test_run_sweep_edge_cases(basis):
    tmpl = SemilinearProblem(basis, FracParams(1.0, 0.5), 2.0)
    assert run_sweep(tmpl, []) == []
    with pytest.raises(ValueError):
        run_sweep(tmpl, [1.0, 0.1])
    with pytest.raises(ValueError):
        run_sweep(tmpl, [-1.0])


def test_run_sweep_large_eps_and_threads(basis):
    tmpl = SemilinearProblem(basis, FracParams(1.0, 0.5), 2.0)
    cfg = SolverConfig(n_random=2, seed=1)
    rows = run_sweep(tmpl, [100.0, 1000.0], cfg)
    assert all(r.classification == "constant" and r.converged for r in rows)
    assert all(r.Linf == pytest.approx(1.0) and r.harnack == pytest.approx(1.0, abs=1e-9) for r in rows)
    par = run_sweep(tmpl, [100.0, 1000.0], cfg, threads=2)
    assert repr([r.as_record() for r in rows]) == repr([r.as_record() for r in par])


def test_run_sweep_small_eps_rows():
    b = build_basis(ModelDomain.interval(1.0), 128)
    tmpl = SemilinearProblem(b, FracParams(1e-3, 0.5), 2.0)
    eps = np.geomspace(1e-4, 1e-2, 4)
    rows = run_sweep(tmpl, eps)
    assert all(r.nonconstant and r.positive and r.converged for r in rows)
    assert all(r.cube_count >= 1 and 1.0 <= r.harnack < 20 for r in rows)
    assert all(r.max_spread <= math.sqrt(r.eps) * r.cube_count for r in rows)
    assert fit_scaling(rows, "energy") == pytest.approx(0.5, abs=0.1)
