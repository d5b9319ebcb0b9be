"""Domain geometries, uniform grids and matching quadrature.

Three geometries are supported:

* :class:`Interval` -- ``[0, L]`` in one dimension,
* :class:`RadialBall` -- the ball ``B_R(0)`` in ``R^N`` reduced to the radial
  coordinate ``r in [0, R]``,
* :class:`Rectangle` -- ``[0, Lx] x [0, Ly]``.

A :class:`Grid` carries node coordinates, boundary bookkeeping and quadrature
weights.  Fields on a grid are plain 1-D numpy arrays indexed like
``grid.points`` (row-major ``(i, j)`` ordering on the rectangle).
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import ConfigurationError

MIN_RESOLUTION = 8


def unit_ball_volume(dim: int) -> float:
    return math.pi ** (dim / 2) / math.gamma(dim / 2 + 1)


def unit_sphere_area(dim: int) -> float:
    """Surface area of the unit sphere in ``R^dim`` (2 for ``dim == 1``)."""
    return 2 * math.pi ** (dim / 2) / math.gamma(dim / 2)


def _positive(name, value):
    if not (isinstance(value, numbers.Real) and not isinstance(value, bool) and math.isfinite(value) and value > 0):
        raise ConfigurationError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class Interval:
    L: float

    kind = "interval"
    dim = 1

    def __post_init__(self):
        _positive("L", self.L)

    @property
    def measure(self) -> float:
        return float(self.L)


@dataclass(frozen=True)
class RadialBall:
    N: int
    R: float

    kind = "ball"
    dim = 1

    def __post_init__(self):
        if isinstance(self.N, bool) or not isinstance(self.N, numbers.Integral) or self.N < 1:
            raise ConfigurationError(f"N must be an integer >= 1, got {self.N!r}")
        _positive("R", self.R)

    @property
    def measure(self) -> float:
        return unit_ball_volume(self.N) * self.R**self.N


@dataclass(frozen=True)
class Rectangle:
    Lx: float
    Ly: float

    kind = "rectangle"
    dim = 2

    def __post_init__(self):
        _positive("Lx", self.Lx)
        _positive("Ly", self.Ly)

    @property
    def measure(self) -> float:
        return float(self.Lx * self.Ly)


DomainSpec = Union[Interval, RadialBall, Rectangle]


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform node set over a domain.

    Attributes
    ----------
    domain : DomainSpec
    shape : tuple of int
        Nodes per axis.
    axes : tuple of ndarray
        1-D coordinate arrays, one per axis.
    h : tuple of float
        Spacing per axis.
    points : ndarray, shape (n_nodes, dim)
    boundary_indices : ndarray of int
        Flat indices of boundary nodes, in increasing order.
    normals : ndarray, shape (n_boundary, dim)
        Unit outward normal per boundary node.  Rectangle corners get the
        normalised average of the two edge normals (bookkeeping only).
    symmetry_index : int or None
        The ``r = 0`` node of a radial grid.
    weights : ndarray
        Quadrature weights; ``weights @ f`` approximates the integral of ``f``
        over the true (N-dimensional) domain.
    """

    domain: DomainSpec
    shape: tuple
    axes: tuple
    h: tuple
    points: np.ndarray
    boundary_indices: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    symmetry_index: int | None = None
    _boundary_pos: dict = field(default_factory=dict, repr=False)

    @property
    def n_nodes(self) -> int:
        return int(self.points.shape[0])

    @property
    def n_boundary(self) -> int:
        return int(self.boundary_indices.size)

    @property
    def measure(self) -> float:
        return self.domain.measure

    @property
    def discrete_measure(self) -> float:
        return float(self.weights.sum())

    @property
    def interior_mask(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.boundary_indices] = False
        return mask

    def boundary_position(self, node: int) -> int:
        """Position of flat node index ``node`` inside ``boundary_indices``."""
        return self._boundary_pos[int(node)]

    def check_field(self, values, name="field") -> np.ndarray:
        arr = np.asarray(values, dtype=float)
        if arr.shape != (self.n_nodes,):
            raise ValueError(
                f"{name} has shape {arr.shape}, grid expects ({self.n_nodes},)"
            )
        return arr

    def check_boundary(self, values, name="boundary data") -> np.ndarray:
        """Broadcast a scalar or validate a per-boundary-node array."""
        arr = np.asarray(values, dtype=float)
        if arr.ndim == 0:
            return np.full(self.n_boundary, float(arr))
        if arr.shape != (self.n_boundary,):
            raise ValueError(
                f"{name} has shape {arr.shape}, grid has {self.n_boundary} boundary nodes"
            )
        return arr

    def refine(self) -> "Grid":
        """Grid with spacing halved; its nodes contain the current ones."""
        return build_grid(self.domain, tuple(2 * n - 1 for n in self.shape))

    def coarse_view(self, values: np.ndarray, factor: int) -> np.ndarray:
        """Restrict a field on this grid to a grid ``factor`` times coarser."""
        arr = np.asarray(values).reshape(self.shape)
        sl = tuple(slice(None, None, factor) for _ in self.shape)
        return arr[sl].ravel()


def _trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = h / 2
    return w


def _as_resolution(resolution, naxes):
    if np.ndim(resolution) == 0:
        res = (int(resolution),) * naxes
    else:
        res = tuple(int(r) for r in resolution)
    if len(res) != naxes:
        raise ConfigurationError(f"resolution needs {naxes} entries, got {resolution!r}")
    for r in res:
        if r < MIN_RESOLUTION:
            raise ConfigurationError(
                f"resolution must be at least {MIN_RESOLUTION} nodes per axis, got {r}"
            )
    return res


def build_grid(domain: DomainSpec, resolution) -> Grid:
    """Build a uniform grid with ``resolution`` nodes per axis (endpoints included)."""
    if isinstance(domain, Interval):
        (n,) = _as_resolution(resolution, 1)
        x = np.linspace(0.0, domain.L, n)
        h = domain.L / (n - 1)
        bidx = np.array([0, n - 1])
        return Grid(
            domain=domain,
            shape=(n,),
            axes=(x,),
            h=(h,),
            points=x[:, None],
            boundary_indices=bidx,
            normals=np.array([[-1.0], [1.0]]),
            weights=_trapezoid_weights(n, h),
            _boundary_pos={0: 0, n - 1: 1},
        )

    if isinstance(domain, RadialBall):
        (n,) = _as_resolution(resolution, 1)
        r = np.linspace(0.0, domain.R, n)
        h = domain.R / (n - 1)
        w = _trapezoid_weights(n, h) * unit_sphere_area(domain.N) * r ** (domain.N - 1)
        return Grid(
            domain=domain,
            shape=(n,),
            axes=(r,),
            h=(h,),
            points=r[:, None],
            boundary_indices=np.array([n - 1]),
            normals=np.array([[1.0]]),
            weights=w,
            symmetry_index=0,
            _boundary_pos={n - 1: 0},
        )

    if isinstance(domain, Rectangle):
        nx, ny = _as_resolution(resolution, 2)
        x = np.linspace(0.0, domain.Lx, nx)
        y = np.linspace(0.0, domain.Ly, ny)
        hx, hy = domain.Lx / (nx - 1), domain.Ly / (ny - 1)
        X, Y = np.meshgrid(x, y, indexing="ij")
        points = np.column_stack([X.ravel(), Y.ravel()])
        normal = np.zeros((nx, ny, 2))
        normal[0, :, 0] -= 1
        normal[-1, :, 0] += 1
        normal[:, 0, 1] -= 1
        normal[:, -1, 1] += 1
        on_bdry = np.any(normal != 0, axis=2).ravel()
        bidx = np.flatnonzero(on_bdry)
        nrm = normal.reshape(-1, 2)[bidx]
        nrm /= np.linalg.norm(nrm, axis=1)[:, None]
        w = np.outer(_trapezoid_weights(nx, hx), _trapezoid_weights(ny, hy)).ravel()
        return Grid(
            domain=domain,
            shape=(nx, ny),
            axes=(x, y),
            h=(hx, hy),
            points=points,
            boundary_indices=bidx,
            normals=nrm,
            weights=w,
            _boundary_pos={int(k): p for p, k in enumerate(bidx)},
        )

    raise ConfigurationError(f"unknown domain {domain!r}")


def integrate(values, grid: Grid) -> float:
    """Quadrature of a nodal field over the grid's domain (correctly rounded sum)."""
    return math.fsum(grid.weights * grid.check_field(values))


def distance_from_center(grid: Grid) -> np.ndarray:
    """Radial coordinate of every node.

    For a ball this is ``r`` itself; for an interval it is ``|x - L/2|``, the
    radial coordinate of the interval viewed as a one-dimensional ball.
    """
    if isinstance(grid.domain, RadialBall):
        return grid.axes[0].copy()
    if isinstance(grid.domain, Interval):
        return np.abs(grid.axes[0] - grid.domain.L / 2)
    raise ConfigurationError("distance_from_center needs an interval or a ball")


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Robin data for the signal: permeability ``g`` per boundary node and saturation ``gamma``."""

    g: np.ndarray
    gamma: float

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.g == self.g[0]))


def boundary_data(grid: Grid, g, gamma: float) -> BoundaryData:
    """Validate ``g >= 0``, ``g`` not identically zero and ``gamma > 0``."""
    _positive("gamma", gamma)
    try:
        garr = grid.check_boundary(g, "g")
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None
    if not np.all(np.isfinite(garr)) or np.any(garr < 0):
        raise ConfigurationError("g must be finite and nonnegative on the boundary")
    if not np.any(garr > 0):
        raise ConfigurationError("g must not vanish identically on the boundary")
    garr = garr.copy()
    garr.setflags(write=False)
    return BoundaryData(g=garr, gamma=float(gamma))
