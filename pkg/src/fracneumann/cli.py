"""
Command-line front end: ``solve``, ``sweep``, ``extend`` and ``check``.

Every CSV starts with ``#`` header lines echoing the version and the full
configuration; every JSON document carries the same under ``"header"``.
Outputs contain no timestamps, so identical configurations give
byte-identical files.

Exit codes: 0 success, 1 a check or solve failed, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, build_config, load_config_file, parse_eps_text
from .diagnostics import ROW_COLUMNS, cube_cover, diagnostic_grid, fit_scaling, run_sweep, sup_bound_check
from .extension import cs_constant, cylinder_energy, default_y_grid, extend
from .fractional import FracParams, frac_symbol
from .solver import solve_mountain_pass
from .spectral_core import SpectralField, synthesize

log = logging.getLogger("fracneumann")

SCHEMA_VERSION = 1
ROWS_FILE = "sweep_rows.csv"
SUMMARY_FILE = "sweep_summary.json"


def _clean(obj: Any) -> Any:
    """JSON-safe copy: NaN/inf to None, numpy scalars to Python."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _header(command: str, cfg: RunConfig) -> dict:
    return {"artifact": "fracneumann", "version": __version__, "command": command, "config": cfg.echo()}


def _json_text(command: str, cfg: RunConfig, body: dict) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "header": _header(command, cfg), **body}
    return json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n"


def _fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _csv_text(command: str, cfg: RunConfig, columns: Sequence[str], rows) -> str:
    buf = io.StringIO()
    buf.write(f"# fracneumann {__version__}\n# command = {command}\n")
    for k, v in cfg.echo().items():
        buf.write(f"# {k} = {json.dumps(_clean(v))}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _write_all(out: Path, files: dict[str, str]) -> None:
    """Write each file via a temporary name so no half-written artifact is left behind."""
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        tmp = out / f".{name}.tmp"
        tmp.write_text(text)
        tmp.replace(out / name)


def _error(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message}, sort_keys=True))
    return code


def _grid_columns(dim: int) -> list[str]:
    return ["x"] if dim == 1 else ["x", "y"]


def _grid_points(grid) -> np.ndarray:
    c = grid.coords
    return c.reshape(-1, 1) if grid.domain.dimension == 1 else c.reshape(-1, grid.domain.dimension)


def cmd_solve(cfg: RunConfig) -> int:
    eps = cfg.single_eps()
    prob = cfg.problem(eps)
    rep = solve_mountain_pass(prob, cfg.solver_config())
    values = synthesize(rep.solution)
    pts = _grid_points(values.basis.grid)
    rows = [list(pt) + [v] for pt, v in zip(pts, values.values.ravel())]
    body = {"eps": eps, "report": rep.to_dict()}
    _write_all(Path(cfg.out), {
        "solution.json": _json_text("solve", cfg, body),
        "solution.csv": _csv_text("solve", cfg, _grid_columns(prob.basis.dimension) + ["u"], rows),
    })
    log.info("eps=%g: %s, positive=%s, energy=%.8g, residual=%.2e",
             eps, rep.classification, rep.positive, rep.energy, rep.residual)
    if not rep.converged:
        return _error("nonconvergence", f"residual {rep.residual:.3e} above tolerance {cfg.tol:g}", 1)
    return 0


def _sweep_summary(cfg: RunConfig, rows) -> dict:
    nonconst = [r for r in rows if r.nonconstant]
    slopes = {}
    for q in ("energy", "L1", "L2", "Lq", "mass"):
        try:
            slopes[q] = fit_scaling(rows, q)
        except ValueError:
            slopes[q] = None
    sup = sup_bound_check(rows, cfg.sup_factor)
    counts = [r.cube_count for r in rows if r.nonconstant and r.cube_count >= 0]
    harn = [r.harnack for r in nonconst if np.isfinite(r.harnack)]
    n_dim = rows[0].report.solution.basis.dimension if rows and rows[0].report else 1
    checks: dict[str, bool] = {"all_converged": all(r.converged for r in rows), "sup_bound": sup["passed"]}
    if len(nonconst) >= 4:
        checks["all_nonconstant_positive"] = all(r.nonconstant and r.positive for r in rows)
        for q, v in slopes.items():
            checks[f"slope_{q}"] = v is not None and abs(v - n_dim / 2) <= 0.1
        checks["mean_identity"] = max(r.mean_gap for r in rows) <= 1e-8
        checks["cube_ratio"] = bool(counts) and min(counts) > 0 and max(counts) / min(counts) <= cfg.ratio_factor
        checks["maxima_clustered"] = all(r.max_spread <= math.sqrt(r.eps) * r.cube_count for r in nonconst)
        checks["harnack_ratio"] = len(harn) == len(nonconst) and max(harn) / min(harn) <= cfg.ratio_factor
    else:
        checks["all_constant"] = all(r.classification == "constant" for r in rows if r.converged)
    largest_nonconst = max((r.eps for r in nonconst), default=None)
    smallest_const = min((r.eps for r in rows if r.classification == "constant"), default=None)
    return {
        "n_rows": len(rows),
        "all_constant": all(r.classification == "constant" for r in rows),
        "slopes": slopes,
        "expected_slope": n_dim / 2,
        "sup_bound": sup,
        "cube_counts": counts,
        "cube_ratio": (max(counts) / min(counts)) if counts and min(counts) > 0 else None,
        "harnack": harn,
        "harnack_ratio": (max(harn) / min(harn)) if harn else None,
        "thresholds": {"largest_nonconstant_eps": largest_nonconst, "smallest_constant_eps": smallest_const},
        "checks": checks,
        "passed": all(checks.values()),
    }


def cmd_sweep(cfg: RunConfig) -> int:
    eps_list = cfg.eps_values()
    basis = cfg.basis()
    tmpl = cfg.problem(eps_list[0], basis)
    eta_levels = list(cfg.eta)
    rows = run_sweep(tmpl, eps_list, cfg.solver_config(), threads=cfg.threads,
                     eta=eta_levels[0] if eta_levels else None)
    summary = _sweep_summary(cfg, rows)
    if len(eta_levels) > 1:
        per_level = {}
        for eta in eta_levels:
            per_level[repr(eta)] = [cube_cover(synthesize(r.report.solution, diagnostic_grid(basis, r.eps)), r.eps, eta)
                                    for r in rows]
        summary["cube_counts_by_eta"] = per_level
    table = [[r.as_record()[c] for c in ROW_COLUMNS] for r in rows]
    _write_all(Path(cfg.out), {
        ROWS_FILE: _csv_text("sweep", cfg, ROW_COLUMNS, table),
        SUMMARY_FILE: _json_text("sweep", cfg, summary),
    })
    for r in rows:
        log.info("eps=%.3e %s positive=%s energy=%.6g m=%d harnack=%.3f",
                 r.eps, r.classification, r.positive, r.energy, r.cube_count, r.harnack)
    log.info("checks: %s", ", ".join(f"{k}={'pass' if v else 'FAIL'}" for k, v in summary["checks"].items()))
    if not all(r.converged for r in rows):
        return _error("nonconvergence", "some rows did not converge; see the rows file", 1)
    return 0


def _trace_field(cfg: RunConfig, basis) -> SpectralField:
    kind, _, arg = cfg.trace.partition(":")
    try:
        if kind == "mode":
            return SpectralField.mode(basis, int(arg or 1))
        if kind == "const":
            return SpectralField.constant(basis, float(arg or 1.0))
        if kind == "coeffs":
            vals = [float(v) for v in arg.split(",") if v.strip()]
            c = np.zeros(basis.K)
            c[: len(vals)] = vals
            return SpectralField(basis, c)
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"bad trace {cfg.trace!r}: {exc}") from exc
    raise ConfigError(f"bad trace {cfg.trace!r}; use mode:k, const:c or coeffs:c0,c1,...")


def cmd_extend(cfg: RunConfig) -> int:
    eps = cfg.single_eps()
    basis = cfg.basis()
    P = FracParams(eps, cfg.s)
    u = _trace_field(cfg, basis)
    U = extend(u, P, default_y_grid(basis, P, n=cfg.y_nodes))
    E = cylinder_energy(U)
    target = 0.5 * cs_constant(cfg.s) * float(np.sum(frac_symbol(basis, P) * u.coeffs**2))
    rel = abs(E - target) / target if target > 0 else abs(E)
    ok = rel <= 1e-4
    pts = _grid_points(U.grid)
    flat = U.values.reshape(U.grid.size, U.y.size)
    cols = _grid_columns(basis.dimension)
    rows = [list(pt) + [yj, flat[i, j]] for i, pt in enumerate(pts) for j, yj in enumerate(U.y)]
    body = {"eps": eps, "trace": cfg.trace, "cylinder_energy": E, "expected": target,
            "identity_rel_error": rel, "identity_tolerance": 1e-4, "identity_passed": ok}
    _write_all(Path(cfg.out), {
        "extension.csv": _csv_text("extend", cfg, cols + ["height", "U"], rows),
        "extension.json": _json_text("extend", cfg, body),
    })
    log.info("cylinder energy %.12g, expected %.12g, rel err %.2e", E, target, rel)
    return 0 if ok else 1


def cmd_check(cfg: RunConfig, select=None) -> int:
    from .checks import CheckContext, run_checks

    ctx = CheckContext(K=cfg.K, threads=cfg.threads)
    results = run_checks(select, ctx, echo=print)
    print(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    return 0 if all(r.passed for r in results) else 1


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat TOML file with run settings")
    common.add_argument("--eps", help="single value, comma list, or lo:hi:n log range")
    common.add_argument("--s", type=float, help="fractional order in (0, 1)")
    common.add_argument("--p", type=float, help="exponent p > 1")
    common.add_argument("--domain", help="interval:L or rectangle:Lx,Ly")
    common.add_argument("--K", type=int, help="modes per axis")
    common.add_argument("--grid", type=int, help="quadrature nodes per axis (default 2K)")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--eta", help="comma-separated levels for cube counts")
    common.add_argument("--seed", type=int, help="seed for random multistarts")
    common.add_argument("--threads", type=int, help="parallel sweep workers (env FRACNEUMANN_THREADS)")
    common.add_argument("--preset", help="small-eps or large-eps")
    common.add_argument("--tol", type=float, help="residual tolerance")
    common.add_argument("--quiet", action="store_true", help="log warnings only")

    parser = argparse.ArgumentParser(prog="fracneumann", description="Fractional Neumann semilinear problem toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="solve at a single eps")
    sub.add_parser("sweep", parents=[common], help="solve across an eps range with diagnostics")
    ext = sub.add_parser("extend", parents=[common], help="extend a trace into the half-cylinder")
    ext.add_argument("--trace", help="mode:k, const:c or coeffs:c0,c1,...")
    ext.add_argument("--y-nodes", type=int, dest="y_nodes", help="height nodes")
    chk = sub.add_parser("check", parents=[common], help="run the acceptance checks")
    chk.add_argument("--only", help="comma-separated check numbers")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    log.setLevel(logging.WARNING if args.quiet else logging.INFO)

    file_values: dict[str, Any] = {}
    if args.config is not None:
        try:
            file_values = load_config_file(args.config)
        except FileNotFoundError:
            parser.print_usage(sys.stderr)
            print(f"fracneumann: error: config file not found: {args.config}", file=sys.stderr)
            return 2
        except ConfigError as exc:
            return _error("config", str(exc), 2)

    overrides: dict[str, Any] = {k: getattr(args, k, None) for k in
                                 ("s", "p", "domain", "K", "grid", "out", "seed", "threads", "preset", "tol",
                                  "trace", "y_nodes")}
    select = None
    try:
        if args.eps is not None:
            overrides.update(parse_eps_text(args.eps))
        if args.eta is not None:
            overrides["eta"] = args.eta
        if args.command == "check" and args.only:
            select = [int(v) for v in args.only.split(",")]
        default_preset = "small-eps" if args.command == "sweep" else None
        if args.command == "sweep" and any(k in file_values or overrides.get(k) is not None
                                           for k in ("eps", "eps_list", "eps_min", "eps_max", "eps_count")):
            default_preset = None
        cfg = build_config(file_values, overrides, default_preset)
        if args.command in ("solve", "extend"):
            cfg.single_eps()
        if args.command == "sweep":
            cfg.eps_values()
    except (ConfigError, ValueError) as exc:
        return _error("config", str(exc), 2)

    commands = {"solve": cmd_solve, "sweep": cmd_sweep, "extend": cmd_extend}
    try:
        if args.command in commands:
            return commands[args.command](cfg)
        return cmd_check(cfg, select)
    except ConfigError as exc:
        return _error("config", str(exc), 2)


if __name__ == "__main__":
    raise SystemExit(main())
