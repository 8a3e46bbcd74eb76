"""Cell-centered grids over a padded box, with region masks.

The box around the domain is sized in three rings: the domain itself, a
Dirichlet collar of width 2*delta on every side, and a zero-padding ring
of width max(delta, extent/4) that absorbs the periodic wraparound of the
spectral backend.  Nodes are cell centers; the box edges sit on the cell
lattice so a unit interval at spacing 1/64 holds exactly 64 domain nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

NODE_CAP = 2 ** 22


@dataclass(frozen=True)
class Interval:
    """Open interval (lo, hi) on the line."""

    lo: float
    hi: float

    @property
    def dim(self) -> int:
        return 1

    def bounding_box(self):
        return np.array([self.lo]), np.array([self.hi])

    def inside(self, pts, margin: float = 0.0) -> np.ndarray:
        x = pts[..., 0]
        return (x > self.lo - margin) & (x < self.hi + margin)


@dataclass(frozen=True)
class Rect:
    """Open axis-aligned rectangle (lo0, hi0) x (lo1, hi1)."""

    lo: tuple[float, float]
    hi: tuple[float, float]

    @property
    def dim(self) -> int:
        return 2

    def bounding_box(self):
        return np.asarray(self.lo, dtype=float), np.asarray(self.hi, dtype=float)

    def inside(self, pts, margin: float = 0.0) -> np.ndarray:
        ok = np.ones(pts.shape[:-1], dtype=bool)
        for c in range(2):
            ok &= (pts[..., c] > self.lo[c] - margin) & (pts[..., c] < self.hi[c] + margin)
        return ok


@dataclass(frozen=True)
class Disk:
    """Open disk of given center and radius."""

    center: tuple[float, float]
    radius: float

    @property
    def dim(self) -> int:
        return 2

    def bounding_box(self):
        c = np.asarray(self.center, dtype=float)
        return c - self.radius, c + self.radius

    def inside(self, pts, margin: float = 0.0) -> np.ndarray:
        d = np.hypot(pts[..., 0] - self.center[0], pts[..., 1] - self.center[1])
        return d < self.radius + margin


def _next_five_smooth(n: int) -> int:
    """Smallest integer >= n whose prime factors are all in {2, 3, 5}."""
    while True:
        m = n
        for p in (2, 3, 5):
            while m % p == 0:
                m //= p
        if m == 1:
            return n
        n += 1


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform cell-centered grid with domain/collar/exterior masks."""

    dim: int
    h: float
    delta: float
    domain: object
    origin: tuple
    shape: tuple
    pad: float                      # guaranteed padding beyond the collar
    domain_mask: np.ndarray = field(repr=False)
    collar_mask: np.ndarray = field(repr=False)
    exterior_mask: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def interior_count(self) -> int:
        return int(np.count_nonzero(self.domain_mask))

    def axes(self) -> list[np.ndarray]:
        """Cell-center coordinates along each axis."""
        return [self.origin[c] + (np.arange(self.shape[c]) + 0.5) * self.h
                for c in range(self.dim)]

    def points(self) -> np.ndarray:
        """Node coordinates, shape ``shape + (dim,)``."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(mesh, axis=-1)

    def box_extent(self) -> np.ndarray:
        return np.array(self.shape, dtype=float) * self.h

    def valid_mask(self, radius: float) -> np.ndarray:
        """Nodes whose ``radius``-ball lies inside the box (where nonlocal
        operator output is meaningful)."""
        ok = np.ones(self.shape, dtype=bool)
        for c, ax in enumerate(self.axes()):
            lo = self.origin[c] + radius
            hi = self.origin[c] + self.shape[c] * self.h - radius
            line = (ax >= lo - 1e-12) & (ax <= hi + 1e-12)
            ok &= line.reshape([-1 if k == c else 1 for k in range(self.dim)])
        return ok


@dataclass(eq=False)
class Field:
    """Nodal values on a grid: scalar (``grid.shape``) or vector
    (``grid.shape + (dim,)``, as produced by the nonlocal gradient)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape and v.shape != self.grid.shape + (self.grid.dim,):
            raise ValueError(f"values of shape {v.shape} do not fit grid "
                             f"shape {self.grid.shape}")
        self.values = v

    @property
    def is_vector(self) -> bool:
        return self.values.ndim == self.grid.dim + 1

    @classmethod
    def zeros(cls, grid: Grid, vector: bool = False) -> "Field":
        shape = grid.shape + (grid.dim,) if vector else grid.shape
        return cls(grid, np.zeros(shape))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "Field":
        """Sample a callable of the coordinate arrays at the cell centers."""
        mesh = np.meshgrid(*grid.axes(), indexing="ij")
        return cls(grid, np.asarray(fn(*mesh), dtype=float))

    def dirichlet_admissible(self, tol: float = 0.0) -> bool:
        """True when the field vanishes off the domain mask."""
        outside = ~self.grid.domain_mask
        return bool(np.all(np.abs(self.values[outside]) <= tol))


def build_grid(domain, h: float, delta: float) -> Grid:
    """Lay out the padded box and classify every node.

    The collar is 2*delta wide on every side of the domain and the
    padding ring beyond it is at least max(delta, extent/4) wide, where
    extent is the longest side of the domain's bounding box.  Axis sizes
    are rounded up to 5-smooth integers (padding only grows) so the
    spectral backend transforms stay fast.
    """
    if h <= 0.0:
        raise ValueError("spacing h must be positive")
    if delta <= 0.0:
        raise ValueError("horizon delta must be positive (the collar "
                         "degenerates at delta = 0)")
    lo, hi = domain.bounding_box()
    extent = float(np.max(hi - lo))
    if extent <= 0.0:
        raise ValueError("degenerate domain")
    if h > extent:
        raise ValueError(f"spacing h={h} exceeds the domain extent {extent}")
    pad = max(delta, extent / 4.0)
    margin_cells = math.ceil((2.0 * delta + pad) / h - 1e-12)
    dim = domain.dim
    origin = []
    shape = []
    for c in range(dim):
        # align the box lattice with the domain's bounding corner
        o = lo[c] - margin_cells * h
        n = margin_cells + math.ceil((hi[c] - lo[c]) / h - 1e-12) + margin_cells
        shape.append(_next_five_smooth(n))
        origin.append(o)
    total = int(np.prod(shape))
    if total > NODE_CAP:
        raise ValueError(f"grid would hold {total} nodes, over the cap {NODE_CAP}")
    grid_stub = Grid(dim=dim, h=float(h), delta=float(delta), domain=domain,
                     origin=tuple(origin), shape=tuple(shape),
                     pad=margin_cells * h - 2.0 * delta,
                     domain_mask=None, collar_mask=None, exterior_mask=None)
    pts = grid_stub.points()
    inside = domain.inside(pts)
    dilated = domain.inside(pts, margin=2.0 * delta)
    collar = dilated & ~inside
    exterior = ~dilated
    return Grid(dim=dim, h=float(h), delta=float(delta), domain=domain,
                origin=tuple(origin), shape=tuple(shape),
                pad=grid_stub.pad,
                domain_mask=inside, collar_mask=collar, exterior_mask=exterior)
