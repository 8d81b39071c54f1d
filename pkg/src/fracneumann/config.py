"""
Run configuration: a flat TOML file, presets and command-line overrides.

Documented keys (all optional):

``domain``        ``"interval:L"`` or ``"rectangle:Lx,Ly"``
``s``, ``p``      fractional order and exponent
``eps``           a single ``eps`` (``solve``, ``extend``)
``eps_list``      explicit sweep values
``eps_min``, ``eps_max``, ``eps_count``, ``eps_spacing`` (``"log"``/``"linear"``)
``preset``        ``"small-eps"`` or ``"large-eps"``
``K``, ``grid``   modes and quadrature nodes per axis
``tol``, ``max_iter``, ``newton_max_iter``, ``oversample``, ``tau``, ``n_random``
``eta``           list of levels for cube counts (empty: half the peak at the largest ``eps``)
``out``, ``seed``, ``threads``
``trace``         ``"mode:k"``, ``"const:c"`` or ``"coeffs:c0,c1,..."`` (``extend``)
``y_nodes``       height nodes for ``extend``
``sup_factor``, ``ratio_factor``  uniformity thresholds in sweep summaries
"""

from __future__ import annotations

import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .fractional import FracParams
from .solver import SemilinearProblem, SolverConfig
from .spectral_core import BasisSpec, ModelDomain, build_basis

__all__ = ["ConfigError", "RunConfig", "PRESETS", "load_config_file", "build_config", "parse_eps_text"]


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""


PRESETS: dict[str, dict[str, Any]] = {
    "small-eps": {"eps_min": 1e-5, "eps_max": 1e-3, "eps_count": 8, "eps_spacing": "log"},
    "large-eps": {"eps_list": (10.0, 100.0, 1000.0), "n_random": 3},
}


@dataclass(frozen=True)
class RunConfig:
    domain: str = "interval:1"
    s: float = 0.5
    p: float = 2.0
    eps: float | None = None
    eps_list: tuple[float, ...] | None = None
    eps_min: float | None = None
    eps_max: float | None = None
    eps_count: int | None = None
    eps_spacing: str = "log"
    preset: str | None = None
    K: int = 256
    grid: int | None = None
    tol: float = 1e-9
    max_iter: int = 3000
    newton_max_iter: int = 60
    oversample: int | None = None
    tau: float = 1e-3
    n_random: int = 0
    eta: tuple[float, ...] = ()
    out: str = "out"
    seed: int = 0
    threads: int = 1
    trace: str = "mode:1"
    y_nodes: int = 400
    sup_factor: float = 10.0
    ratio_factor: float = 3.0

    def validate(self) -> "RunConfig":
        try:
            dom = ModelDomain.parse(self.domain)
            FracParams(1.0, self.s)
            if self.eps is not None:
                FracParams(self.eps, self.s)
            SemilinearProblem(build_basis(dom, 2), FracParams(1.0, self.s), self.p, self.oversample)
            self.solver_config()
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.K < 1 or (self.grid is not None and self.grid < 2 * self.K):
            raise ConfigError("K must be positive and grid at least 2K")
        if self.eps_spacing not in ("log", "linear"):
            raise ConfigError("eps_spacing must be 'log' or 'linear'")
        if self.threads < 1 or self.y_nodes < 3:
            raise ConfigError("threads must be >= 1 and y_nodes >= 3")
        if any(not e > 0 for e in self.eta):
            raise ConfigError("eta levels must be positive")
        if self.preset is not None and self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; choose from {sorted(PRESETS)}")
        return self

    @property
    def model_domain(self) -> ModelDomain:
        return ModelDomain.parse(self.domain)

    def basis(self) -> BasisSpec:
        return build_basis(self.model_domain, self.K, self.grid)

    def problem(self, eps: float, basis: BasisSpec | None = None) -> SemilinearProblem:
        basis = self.basis() if basis is None else basis
        return SemilinearProblem(basis, FracParams(eps, self.s), self.p, self.oversample)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(tol=self.tol, max_iter=self.max_iter, newton_max_iter=self.newton_max_iter,
                            oversample=self.oversample, tau=self.tau, n_random=self.n_random, seed=self.seed)

    def single_eps(self) -> float:
        if self.eps is None:
            raise ConfigError("this command needs a single eps")
        return self.eps

    def eps_values(self) -> list[float]:
        """Sweep values, sorted; an explicit list wins over a range."""
        if self.eps_list is not None:
            vals = sorted(float(e) for e in self.eps_list)
        elif self.eps_min is not None or self.eps_max is not None or self.eps_count is not None:
            if self.eps_min is None or self.eps_max is None or self.eps_count is None:
                raise ConfigError("an eps range needs eps_min, eps_max and eps_count")
            if self.eps_count < 1 or not 0 < self.eps_min <= self.eps_max:
                raise ConfigError("empty or invalid eps range")
            if self.eps_spacing == "log":
                vals = list(np.geomspace(self.eps_min, self.eps_max, self.eps_count))
            else:
                vals = list(np.linspace(self.eps_min, self.eps_max, self.eps_count))
        elif self.eps is not None:
            vals = [self.eps]
        else:
            raise ConfigError("no eps values given")
        if not vals:
            raise ConfigError("empty eps range")
        if any(not (v > 0 and math.isfinite(v)) for v in vals):
            raise ConfigError("eps values must be positive and finite")
        return [float(v) for v in vals]

    def echo(self) -> dict[str, Any]:
        """Plain dict of every field, for output headers."""
        out = asdict(self)
        for k, v in out.items():
            if isinstance(v, tuple):
                out[k] = list(v)
        return out


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, value: Any) -> Any:
    kind = _FIELD_TYPES[key]
    try:
        if value is None:
            return None
        if "tuple" in kind:
            if isinstance(value, str):
                value = [v for v in value.split(",") if v.strip()]
            elif not isinstance(value, (list, tuple)):
                value = [value]
            return tuple(float(v) for v in value)
        if kind.startswith("int"):
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError
            return int(value)
        if kind.startswith("float"):
            if isinstance(value, bool):
                raise ValueError
            return float(value)
        if kind.startswith("str"):
            if not isinstance(value, str):
                raise ValueError
            return value
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key!r}: {value!r}") from None
    return value


def load_config_file(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"config must be flat; found tables {nested}")
    return data


def parse_eps_text(text: str) -> dict[str, Any]:
    """``"1e-4"`` -> eps, ``"a,b,c"`` -> eps_list, ``"lo:hi:n"`` -> log range."""
    text = text.strip()
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            return {"eps_min": float(lo), "eps_max": float(hi), "eps_count": int(n), "eps_list": None}
        if "," in text:
            return {"eps_list": tuple(float(v) for v in text.split(",") if v.strip())}
        return {"eps": float(text)}
    except ValueError:
        raise ConfigError(f"cannot parse eps {text!r}") from None


def build_config(file_values: Mapping[str, Any] | None = None, overrides: Mapping[str, Any] | None = None,
                 default_preset: str | None = None) -> RunConfig:
    """Defaults, then the preset, then file values, then command-line overrides."""
    merged: dict[str, Any] = {}
    for src in (file_values or {}, overrides or {}):
        for k, v in src.items():
            if v is None:
                continue
            if k not in _FIELD_TYPES:
                raise ConfigError(f"unknown config key {k!r}")
            merged[k] = v
    preset = merged.get("preset", default_preset)
    values: dict[str, Any] = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        has_range = any(k in merged for k in ("eps", "eps_list", "eps_min", "eps_max", "eps_count"))
        base = PRESETS[preset]
        values.update({k: v for k, v in base.items() if not (has_range and k.startswith("eps"))})
        values["preset"] = preset
    values.update(merged)
    cfg = RunConfig(**{k: _coerce(k, v) for k, v in values.items()})
    if cfg.threads == 1 and "threads" not in merged and os.environ.get("FRACNEUMANN_THREADS"):
        try:
            cfg = replace(cfg, threads=int(os.environ["FRACNEUMANN_THREADS"]))
        except ValueError:
            raise ConfigError("FRACNEUMANN_THREADS must be an integer") from None
    return cfg.validate()
