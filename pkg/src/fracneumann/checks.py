"""
The acceptance suite as plain functions.

Each ``check_NN`` returns a :class:`CheckResult`; :func:`run_checks` runs a
selection and shares the small-``eps`` sweep between the criteria that
inspect it. Runtime limits are part of each verdict.
"""

from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import extension
from ._backend import rho_and_derivative
from .diagnostics import SweepRow, fit_scaling, run_sweep, sup_bound_check, ultracontractivity_check
from .extension import cs_constant, cylinder_energy, extend, rho_ode_oracle, trace_constant_Cs
from .fractional import FracParams, frac_symbol, heat_semigroup, resolvent
from .solver import SemilinearProblem, SolverConfig, gradient, energy, residual_norm, solve_mountain_pass, solve_newton
from .spectral_core import ModelDomain, SpectralField, build_basis

__all__ = ["CheckResult", "CheckContext", "CHECKS", "run_checks", "format_table"]

SMALL_EPS = tuple(float(e) for e in np.geomspace(1e-5, 1e-3, 8))
LARGE_EPS = (10.0, 100.0, 1000.0)


@dataclass(frozen=True)
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    elapsed: float
    limit: float | None

    def line(self) -> str:
        lim = "" if self.limit is None else f" (limit {self.limit:g}s)"
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name}: {self.detail} [{self.elapsed:.2f}s{lim}]"


@dataclass
class CheckContext:
    """Shared settings and the cached small-``eps`` sweep."""

    K: int = 256
    threads: int = 1
    sweep_rows: list[SweepRow] | None = None
    sweep_seconds: float | None = None
    extras: dict = field(default_factory=dict)

    def small_sweep(self) -> list[SweepRow]:
        if self.sweep_rows is None:
            basis = build_basis(ModelDomain.interval(1.0), self.K)
            tmpl = SemilinearProblem(basis, FracParams(SMALL_EPS[0], 0.5), 2.0)
            t0 = time.perf_counter()
            self.sweep_rows = run_sweep(tmpl, SMALL_EPS, SolverConfig(), threads=self.threads)
            self.sweep_seconds = time.perf_counter() - t0
        return self.sweep_rows


def _verdict(number, name, ok, detail, t0, limit) -> CheckResult:
    elapsed = time.perf_counter() - t0
    within = limit is None or elapsed <= limit
    if not within:
        detail += f"; runtime {elapsed:.1f}s over limit"
    return CheckResult(number, name, bool(ok and within), detail, elapsed, limit)


def check_01(ctx: CheckContext) -> CheckResult:
    t0 = time.perf_counter()
    worst, leak = 0.0, 0.0
    setups = [(ModelDomain.interval(1.0), 64), (ModelDomain.interval(2.5), 64), (ModelDomain.rectangle(1.0, 0.5), 12)]
    for dom, K in setups:
        b = build_basis(dom, K)
        lam = sum((b.indices[:, i] * math.pi / L) ** 2 for i, L in enumerate(dom.lengths))
        for eps in (1e-4, 1.0, 100.0):
            for s in (0.25, 0.5, 0.75):
                P = FracParams(eps, s)
                for k in range(b.K):
                    r = resolvent(SpectralField.mode(b, k), P).coeffs
                    exact = 1.0 / (1.0 + (eps * lam[k]) ** s)
                    worst = max(worst, abs(r[k] - exact) / exact)
                    leak = max(leak, float(np.abs(np.delete(r, k)).max()))
    ok = worst <= 1e-14 and leak == 0.0
    return _verdict(1, "spectral exactness", ok, f"max rel err {worst:.2e} (tol 1e-14), off-mode {leak:.1e}", t0, 1.0)


def check_02(ctx: CheckContext) -> CheckResult:
    t0 = time.perf_counter()
    b = build_basis(ModelDomain.interval(1.0), 16)
    worst = 0.0
    for s in (0.25, 0.5, 0.75):
        Cs = trace_constant_Cs(s, exact_half=False)
        for eps in (1.0, 0.01):
            P = FracParams(eps, s)
            sym = frac_symbol(b, P)
            for k in range(1, 11):
                E = cylinder_energy(extend(SpectralField.mode(b, k), P))
                target = 0.5 * Cs * sym[k]
                worst = max(worst, abs(E - target) / target)
    return _verdict(2, "extension consistency", worst <= 1e-4, f"max rel err {worst:.2e} (tol 1e-4)", t0, 10.0)


def check_03(ctx: CheckContext) -> CheckResult:
    t0 = time.perf_counter()
    t = np.linspace(0.0, 20.0, 4001)
    general, _ = rho_and_derivative(0.5, t)
    d_rho = max(float(np.abs(general - np.exp(-t)).max()), float(np.abs(extension.rho_eval(t, 0.5) - np.exp(-t)).max()))
    d_c = abs(cs_constant(0.5) - 1.0)
    d_C = abs(trace_constant_Cs(0.5, exact_half=False) - 1.0)
    ok = d_rho <= 1e-10 and d_c <= 1e-8 and d_C <= 1e-8
    return _verdict(3, "s=1/2 closed forms", ok, f"|rho-e^-t| {d_rho:.1e}, |c-1| {d_c:.1e}, |C-1| {d_C:.1e}", t0, 1.0)


def check_04(ctx: CheckContext) -> CheckResult:
    t0 = time.perf_counter()
    t = np.linspace(0.05, 15.0, 300)
    worst = 0.0
    for s in (0.25, 0.75):
        oracle, _ = rho_ode_oracle(t, s)
        worst = max(worst, float(np.abs(extension.rho_eval(t, s) - oracle).max()))
    return _verdict(4, "rho cross-validation", worst <= 1e-6, f"max |Bessel - ODE| {worst:.2e} (tol 1e-6)", t0, 5.0)


def check_05(ctx: CheckContext) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240605)
    worst = 0.0
    cases = [(0.01, 0.5, 2.0), (0.05, 0.75, 3.0), (1e-3, 0.25, 2.0), (1.0, 0.5, 1.5)]
    b = build_basis(ModelDomain.interval(1.0), 48)
    decay = 1.0 / (1.0 + np.arange(b.K)) ** 1.5
    for i in range(20):
        eps, s, p = cases[i % len(cases)]
        prob = SemilinearProblem(b, FracParams(eps, s), p)
        u = SpectralField(b, rng.standard_normal(b.K) * decay + np.eye(b.K)[0])
        v = SpectralField(b, rng.standard_normal(b.K) * decay)
        h = 1e-6 * u.l2_norm() / v.l2_norm()
        fd = (energy(u + v * h, prob) - energy(u - v * h, prob)) / (2 * h)
        an = gradient(u, prob).dot(v)
        worst = max(worst, abs(fd - an) / max(abs(an), 1e-12))
    return _verdict(5, "gradient correctness", worst <= 1e-5, f"20 directions, max rel err {worst:.2e} (tol 1e-5)", t0, 5.0)


def check_06(ctx: CheckContext) -> CheckResult:
    t0 = time.perf_counter()
    worst = 0.0
    setups = [(build_basis(ModelDomain.interval(1.0), 64), (2.0, 2.5)),
              (build_basis(ModelDomain.rectangle(1.0, 0.5), 12), (1.5,))]
    for b, ps in setups:
        for eps in (1e-4, 1.0, 100.0):
            for s in (0.25, 0.5, 0.75):
                for p in ps:
                    prob = SemilinearProblem(b, FracParams(eps, s), p)
                    for c in (0.0, 1.0):
                        worst = max(worst, residual_norm(SpectralField.constant(b, c), prob))
    b = build_basis(ModelDomain.interval(1.0), ctx.K)
    prob = SemilinearProblem(b, FracParams(100.0, 0.5), 2.0)
    u0 = SpectralField.constant(b, 1.0) + SpectralField.mode(b, 1, 1e-3)
    rep = solve_newton(prob, u0)
    dev = (rep.solution - SpectralField.constant(b, 1.0)).l2_norm()
    ok = worst <= 1e-13 and rep.converged and dev <= 1e-10
    return _verdict(6, "constant solutions", ok,
                    f"max residual of 0,1 {worst:.1e} (tol 1e-13); Newton ||u-1|| {dev:.1e} (tol 1e-10)", t0, 5.0)


def check_07(ctx: CheckContext) -> CheckResult:
    t0 = time.perf_counter()
    rows = ctx.small_sweep()
    bad = [f"{r.eps:.2e}({'conv' if r.converged else 'unconv'},{r.classification},{'pos' if r.positive else 'nonpos'})"
           for r in rows if not (r.converged and r.nonconstant and r.positive)]
    try:
        slope = fit_scaling(rows, "energy")
    except ValueError:
        slope = float("nan")
    ok = not bad and abs(slope - 0.5) <= 0.1
    detail = f"energy slope {slope:.4f} (0.50 +- 0.10); "
    detail += "all rows nonconstant positive" if not bad else f"failing rows: {', '.join(bad)}"
    return _verdict(7, "existence + energy scaling", ok, detail, t0, 120.0)


def check_08(ctx: CheckContext) -> CheckResult:
    t0 = time.perf_counter()
    b = build_basis(ModelDomain.interval(1.0), ctx.K)
    cfg = SolverConfig(n_random=3, seed=7)
    problems, n_conv = [], 0
    for eps in LARGE_EPS:
        rep = solve_mountain_pass(SemilinearProblem(b, FracParams(eps, 0.5), 2.0), cfg)
        starts = rep.starts
        n_conv += sum(st["converged"] for st in starts)
        wrong = [st["label"] for st in starts if st["converged"] and st["classification"] != "constant"]
        dev = (rep.solution - SpectralField.constant(b, 1.0)).l2_norm()
        if wrong or len(starts) != 5 or not rep.converged or dev > 1e-8:
            problems.append(f"eps={eps:g}: nonconstant {wrong}, ||u-1||={dev:.1e}")
    ok = not problems
    detail = f"{n_conv}/15 starts converged, all to u=1" if ok else "; ".join(problems)
    return _verdict(8, "nonexistence regime", ok, detail, t0, 60.0)


def check_09(ctx: CheckContext) -> CheckResult:
    t0 = time.perf_counter()
    rep = sup_bound_check(ctx.small_sweep(), 10.0)
    return _verdict(9, "uniform L-infinity", rep["passed"], f"max/median sup {rep['ratio']:.4f} (<= 10)", t0, None)


def check_10(ctx: CheckContext) -> CheckResult:
    t0 = time.perf_counter()
    rows = ctx.small_sweep()
    slopes = {}
    for q in ("mass", "L2", "Lq"):
        try:
            slopes[q] = fit_scaling(rows, q)
        except ValueError:
            slopes[q] = float("nan")
    gap = max(r.mean_gap for r in rows)
    ok = all(abs(v - 0.5) <= 0.1 for v in slopes.values()) and gap <= 1e-8
    detail = (f"slopes int u {slopes['mass']:.4f}, int u^2 {slopes['L2']:.4f}, int u^(p+1) {slopes['Lq']:.4f}; "
              f"max |int u - int u^p| {gap:.1e}")
    return _verdict(10, "mass scaling", ok, detail, t0, None)


def check_11(ctx: CheckContext) -> CheckResult:
    rows = ctx.small_sweep()
    t0 = time.perf_counter()
    m = [r.cube_count for r in rows]
    spread_ok = all(r.max_spread <= math.sqrt(r.eps) * r.cube_count for r in rows)
    ok = min(m) > 0 and max(m) / min(m) <= 3 and spread_ok
    ratio = max(m) / min(m) if min(m) > 0 else float("inf")
    return _verdict(11, "concentration", ok,
                    f"cube counts {m}, max/min {ratio:.2f} (<= 3), maxima clustered: {spread_ok}", t0, 10.0)


def check_12(ctx: CheckContext) -> CheckResult:
    rows = ctx.small_sweep()
    t0 = time.perf_counter()
    h = [r.harnack for r in rows]
    rejected = [f"{r.eps:.2e}" for r in rows if not np.isfinite(r.harnack)]
    finite = [v for v in h if np.isfinite(v)]
    ratio = max(finite) / min(finite) if finite else float("nan")
    ok = not rejected and ratio <= 3
    detail = f"ratios {[round(v, 3) for v in finite]}, max/min {ratio:.3f} (<= 3)"
    if rejected:
        detail += f"; rejected nonpositive rows {rejected}"
    return _verdict(12, "Harnack", ok, detail, t0, 30.0)


def check_13(ctx: CheckContext) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    b = build_basis(ModelDomain.interval(1.0), 64)
    P = FracParams(0.1, 0.5)
    u = SpectralField(b, rng.standard_normal(b.K) / (1.0 + np.arange(b.K)))
    semi = 0.0
    for t1, t2 in ((0.01, 0.02), (0.3, 1.7), (2.0, 5.0)):
        a = heat_semigroup(heat_semigroup(u, t1, P), t2, P).coeffs
        c = heat_semigroup(u, t1 + t2, P).coeffs
        semi = max(semi, float(np.abs(a - c).max() / np.abs(c).max()))
    ts = np.geomspace(0.01, 10.0, 25)
    contract = max(heat_semigroup(u, t, P).l2_norm() / u.l2_norm() for t in ts)
    ultra = [ultracontractivity_check(v, P, ts, 2.0, math.inf) for v in (SpectralField.mode(b, 1), u)]
    ok = semi <= 1e-15 and contract <= 1.0 and all(r["passed"] for r in ultra)
    detail = (f"|S_t1 S_t2 - S_(t1+t2)| {semi:.1e}; L2 ratio max {contract:.6f}; "
              f"(2,inf) ratio max {max(r['max_ratio'] for r in ultra):.4f} <= bound {ultra[0]['bound']:.4f}")
    return _verdict(13, "semigroup laws", ok, detail, t0, 5.0)


def check_14(ctx: CheckContext) -> CheckResult:
    from .cli import main

    ctx.small_sweep()
    reference = ctx.sweep_seconds or 1.0
    t0 = time.perf_counter()
    blobs = []
    times = []
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "sweep"
        for _ in range(2):
            t1 = time.perf_counter()
            code = main(["sweep", "--preset", "small-eps", "--K", str(ctx.K), "--seed", "3",
                         "--threads", str(ctx.threads), "--out", str(out), "--quiet"])
            times.append(time.perf_counter() - t1)
            blobs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())} if code in (0, 1) else None)
    same = blobs[0] is not None and blobs[0] == blobs[1]
    fast = max(times) <= 2 * reference
    ok = same and fast
    detail = (f"{len(blobs[0] or {})} files byte-identical: {same}; "
              f"runs {times[0]:.1f}s/{times[1]:.1f}s vs sweep {reference:.1f}s (x2 limit)")
    return _verdict(14, "determinism", ok, detail, t0, None)


CHECKS: dict[int, Callable[[CheckContext], CheckResult]] = {
    1: check_01, 2: check_02, 3: check_03, 4: check_04, 5: check_05, 6: check_06, 7: check_07,
    8: check_08, 9: check_09, 10: check_10, 11: check_11, 12: check_12, 13: check_13, 14: check_14,
}


def run_checks(select=None, ctx: CheckContext | None = None, echo: Callable[[str], None] | None = None) -> list[CheckResult]:
    ctx = CheckContext() if ctx is None else ctx
    results = []
    for n in sorted(CHECKS if select is None else select):
        res = CHECKS[n](ctx)
        if echo is not None:
            echo(res.line())
        results.append(res)
    return results


def format_table(results: list[CheckResult]) -> str:
    lines = [r.line() for r in results]
    lines.append(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    return "\n".join(lines)
