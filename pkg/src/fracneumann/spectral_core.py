"""
Neumann eigenbasis on model domains and the grid <-> coefficient transforms.

The eigenpairs of the Neumann Laplacian on an interval or a rectangle are
closed-form cosines, so every transform here is a (scaled) DCT on a
midpoint grid. Midpoint weights integrate cosine products exactly as long
as the summed frequency stays below twice the node count, which makes the
basis orthonormal on the grid to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.fft as sfft

__all__ = [
    "ModelDomain",
    "QuadratureGrid",
    "BasisSpec",
    "SpectralField",
    "GridField",
    "midpoint_grid",
    "build_basis",
    "analyze",
    "synthesize",
    "lp_norm",
    "project_function",
]


@dataclass(frozen=True)
class ModelDomain:
    """An interval ``(0, L)`` or a rectangle ``(0, Lx) x (0, Ly)``."""

    kind: str
    lengths: tuple[float, ...]

    def __post_init__(self) -> None:
        expected = {"interval": 1, "rectangle": 2}
        if self.kind not in expected:
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if len(self.lengths) != expected[self.kind]:
            raise ValueError(f"{self.kind} needs {expected[self.kind]} side length(s)")
        lengths = tuple(float(v) for v in self.lengths)
        if not all(np.isfinite(v) and v > 0 for v in lengths):
            raise ValueError("side lengths must be finite and strictly positive")
        object.__setattr__(self, "lengths", lengths)

    @classmethod
    def interval(cls, length: float = 1.0) -> "ModelDomain":
        return cls("interval", (length,))

    @classmethod
    def rectangle(cls, lx: float = 1.0, ly: float = 1.0) -> "ModelDomain":
        return cls("rectangle", (lx, ly))

    @classmethod
    def parse(cls, text: str) -> "ModelDomain":
        """Parse ``interval``, ``interval:2``, ``rectangle:1,0.5`` ..."""
        kind, _, rest = text.strip().partition(":")
        kind = kind.strip().lower()
        if not rest:
            sides: tuple[float, ...] = (1.0,) if kind == "interval" else (1.0, 1.0)
        else:
            try:
                sides = tuple(float(v) for v in rest.split(","))
            except ValueError as exc:
                raise ValueError(f"bad domain spec {text!r}") from exc
        return cls(kind, sides)

    @property
    def dimension(self) -> int:
        return len(self.lengths)

    @property
    def measure(self) -> float:
        return float(np.prod(self.lengths))

    @property
    def diameter(self) -> float:
        return float(np.sqrt(sum(v * v for v in self.lengths)))

    def describe(self) -> str:
        return f"{self.kind}:" + ",".join(repr(v) for v in self.lengths)


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Tensor midpoint grid: node ``j`` on an axis of length ``L`` sits at ``(j + 1/2) L / N``."""

    domain: ModelDomain
    shape: tuple[int, ...]

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple((np.arange(n) + 0.5) * (L / n) for n, L in zip(self.shape, self.domain.lengths))

    @cached_property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for n, L in zip(self.shape, self.domain.lengths))

    @property
    def weight(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @cached_property
    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``grid.shape + (n,)``."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(mesh, axis=-1)


def midpoint_grid(domain: ModelDomain, n: int | Sequence[int]) -> QuadratureGrid:
    if np.isscalar(n):
        shape = (int(n),) * domain.dimension
    else:
        shape = tuple(int(v) for v in n)
    if len(shape) != domain.dimension or min(shape) < 1:
        raise ValueError(f"grid shape {shape} does not fit a {domain.dimension}-d domain")
    return QuadratureGrid(domain, shape)


def _axis_eigenvalues(n_modes: int, length: float) -> np.ndarray:
    return (np.arange(n_modes) * np.pi / length) ** 2


@dataclass(frozen=True, eq=False)
class BasisSpec:
    """
    Truncated Neumann eigenbasis with its default quadrature grid.

    Modes are ordered by nondecreasing eigenvalue with a lexicographic
    tie-break on the axis indices, so ``eigenvalues[0] == 0`` and mode 0 is
    the constant ``|Omega|**-1/2``.
    """

    domain: ModelDomain
    axis_modes: tuple[int, ...]
    grid: QuadratureGrid
    indices: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)

    @property
    def K(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def dimension(self) -> int:
        return self.domain.dimension

    def modes(self) -> list[tuple[int, float, tuple[int, ...]]]:
        """``(k, lambda_k, axis indices)`` for every retained mode."""
        return [(k, float(lam), tuple(int(i) for i in idx))
                for k, (lam, idx) in enumerate(zip(self.eigenvalues, self.indices))]

    def _axis_scale(self, axis: int, n_nodes: int) -> np.ndarray:
        # DCT-II -> <g, phi_k> on an axis of n_nodes midpoint nodes
        L = self.domain.lengths[axis]
        scale = np.full(self.axis_modes[axis], np.sqrt(2.0 / L) * L / (2.0 * n_nodes))
        scale[0] = L / (2.0 * n_nodes) / np.sqrt(L)
        return scale

    def _axis_amplitude(self, axis: int) -> np.ndarray:
        # coefficient -> DCT-III input
        L = self.domain.lengths[axis]
        amp = np.full(self.axis_modes[axis], np.sqrt(2.0 / L) / 2.0)
        amp[0] = 1.0 / np.sqrt(L)
        return amp

    def to_tensor(self, coeffs: np.ndarray) -> np.ndarray:
        out = np.zeros(self.axis_modes)
        out[tuple(self.indices.T)] = coeffs
        return out

    def from_tensor(self, tensor: np.ndarray) -> np.ndarray:
        return tensor[tuple(self.indices.T)]

    def check_grid(self, grid: QuadratureGrid) -> None:
        if grid.domain != self.domain:
            raise ValueError("grid belongs to a different domain")
        if any(n < m for n, m in zip(grid.shape, self.axis_modes)):
            raise ValueError(f"grid {grid.shape} cannot represent {self.axis_modes} modes per axis")

    def mode_matrix(self, grid: QuadratureGrid | None = None) -> np.ndarray:
        """Dense ``(grid.size, K)`` matrix of ``phi_k`` sampled at the nodes."""
        grid = self.grid if grid is None else grid
        tables = []
        for axis, (x, L) in enumerate(zip(grid.axes, self.domain.lengths)):
            k = np.arange(self.axis_modes[axis])
            t = np.sqrt(2.0 / L) * np.cos(np.outer(x, k) * (np.pi / L))
            t[:, 0] = 1.0 / np.sqrt(L)
            tables.append(t)
        if self.dimension == 1:
            return tables[0][:, self.indices[:, 0]]
        tx = tables[0][:, self.indices[:, 0]]
        ty = tables[1][:, self.indices[:, 1]]
        return (tx[:, None, :] * ty[None, :, :]).reshape(grid.size, self.K)


def build_basis(domain: ModelDomain, K: int | Sequence[int], grid_size: int | Sequence[int] | None = None) -> BasisSpec:
    """
    Neumann eigenbasis with ``K`` modes per axis.

    For a rectangle every tensor product of the axis modes is kept
    (``Kx * Ky`` modes). ``grid_size`` defaults to ``2 K`` per axis and
    must not be smaller than that.
    """
    dim = domain.dimension
    axis_modes = (int(K),) * dim if np.isscalar(K) else tuple(int(v) for v in K)
    if len(axis_modes) != dim or min(axis_modes) < 1:
        raise ValueError(f"need a positive mode count per axis, got {K!r}")
    if grid_size is None:
        shape = tuple(2 * m for m in axis_modes)
    elif np.isscalar(grid_size):
        shape = (int(grid_size),) * dim
    else:
        shape = tuple(int(v) for v in grid_size)
    for n, m in zip(shape, axis_modes):
        if n < 2 * m:
            raise ValueError(
                f"grid of {n} nodes does not resolve {m} modes on an axis (need at least {2 * m})"
            )

    axis_lams = [_axis_eigenvalues(m, L) for m, L in zip(axis_modes, domain.lengths)]
    if dim == 1:
        indices = np.arange(axis_modes[0])[:, None]
        lams = axis_lams[0]
    else:
        ix, iy = np.meshgrid(np.arange(axis_modes[0]), np.arange(axis_modes[1]), indexing="ij")
        ix, iy = ix.ravel(), iy.ravel()
        lams = axis_lams[0][ix] + axis_lams[1][iy]
        order = np.lexsort((iy, ix, lams))
        indices = np.stack([ix[order], iy[order]], axis=1)
        lams = lams[order]
    lams = np.array(lams, dtype=float)
    lams[0] = 0.0
    indices.setflags(write=False)
    lams.setflags(write=False)
    return BasisSpec(domain, axis_modes, midpoint_grid(domain, shape), indices, lams)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Coefficients ``u_k = <u, phi_k>`` against a :class:`BasisSpec`."""

    basis: BasisSpec
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.basis.K,):
            raise ValueError(f"expected {self.basis.K} coefficients, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, basis: BasisSpec) -> "SpectralField":
        return cls(basis, np.zeros(basis.K))

    @classmethod
    def constant(cls, basis: BasisSpec, value: float) -> "SpectralField":
        c = np.zeros(basis.K)
        c[0] = value * np.sqrt(basis.domain.measure)
        return cls(basis, c)

    @classmethod
    def mode(cls, basis: BasisSpec, k: int, amplitude: float = 1.0) -> "SpectralField":
        c = np.zeros(basis.K)
        c[k] = amplitude
        return cls(basis, c)

    def _like(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.basis, coeffs)

    def _other(self, other: "SpectralField") -> np.ndarray:
        if other.basis is not self.basis:
            raise ValueError("fields live on different bases")
        return other.coeffs

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return self._like(self.coeffs + self._other(other))

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return self._like(self.coeffs - self._other(other))

    def __mul__(self, alpha: float) -> "SpectralField":
        return self._like(alpha * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return self._like(-self.coeffs)

    def dot(self, other: "SpectralField") -> float:
        return float(self.coeffs @ self._other(other))

    def l2_norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def mean(self) -> float:
        return float(self.coeffs[0] / np.sqrt(self.basis.domain.measure))


@dataclass(frozen=True, eq=False)
class GridField:
    """Values of a function at the nodes of a quadrature grid (the basis grid by default)."""

    basis: BasisSpec
    values: np.ndarray
    grid: QuadratureGrid | None = None

    def __post_init__(self) -> None:
        grid = self.basis.grid if self.grid is None else self.grid
        v = np.asarray(self.values, dtype=float)
        if v.shape != grid.shape:
            raise ValueError(f"values of shape {v.shape} do not match grid {grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", v)

    def integrate(self) -> float:
        return float(self.values.sum() * self.grid.weight)


def analyze(g: GridField) -> SpectralField:
    """Quadrature of ``g * phi_k`` for every retained mode."""
    basis, grid = g.basis, g.grid
    basis.check_grid(grid)
    t = sfft.dctn(g.values, type=2) if basis.dimension > 1 else sfft.dct(g.values, type=2)
    sl = tuple(slice(0, m) for m in basis.axis_modes)
    t = t[sl]
    for axis, n in enumerate(grid.shape):
        shape = [1] * basis.dimension
        shape[axis] = -1
        t = t * basis._axis_scale(axis, n).reshape(shape)
    return SpectralField(basis, basis.from_tensor(t))


def synthesize(f: SpectralField, grid: QuadratureGrid | None = None) -> GridField:
    """Evaluate ``sum_k u_k phi_k`` at the nodes of ``grid`` (default: the basis grid)."""
    basis = f.basis
    grid = basis.grid if grid is None else grid
    basis.check_grid(grid)
    t = basis.to_tensor(f.coeffs)
    for axis in range(basis.dimension):
        shape = [1] * basis.dimension
        shape[axis] = -1
        t = t * basis._axis_amplitude(axis).reshape(shape)
    padded = np.zeros(grid.shape)
    padded[tuple(slice(0, m) for m in basis.axis_modes)] = t
    if basis.dimension > 1:
        values = sfft.dctn(padded, type=3)
    else:
        values = sfft.dct(padded, type=3)
    return GridField(basis, values, grid)


def lp_norm(g: GridField, q: float) -> float:
    """Quadrature approximation of ``||g||_{L^q}``; ``q = inf`` is the grid max of ``|g|``."""
    if not q >= 1:
        raise ValueError(f"exponent must be >= 1 or inf, got {q}")
    a = np.abs(g.values)
    if np.isinf(q):
        return float(a.max())
    return float((np.sum(a**q) * g.grid.weight) ** (1.0 / q))


def project_function(basis: BasisSpec, func, n_nodes: int | Sequence[int] | None = None) -> SpectralField:
    """Project a callable ``func(coords) -> values`` onto the basis by midpoint quadrature."""
    grid = basis.grid if n_nodes is None else midpoint_grid(basis.domain, n_nodes)
    coords = grid.coords
    values = func(coords[..., 0] if basis.dimension == 1 else coords)
    return analyze(GridField(basis, np.asarray(values, dtype=float), grid))
