"""
Square pixel grid, image container and arc rasterization.

The grid covers ``[-L, L]^2`` with ``n`` pixels per side.  The unit disk of
the scanner geometry is inscribed in the grid, so a point given in
detector-ring units maps to world coordinates by the single factor ``L``.
Image values are stored row-major by ``iy`` then ``ix``: pixel ``(ix, iy)``
has flat index ``iy * n + ix``.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import numpy.typing as npt

from .enums import Arc, TraceMode
from .errors import DimensionError, GeometryError
from .geometry import ToricSection

IndexArray = npt.NDArray[np.int64]
FloatArray = npt.NDArray[np.float64]

# Arc-length sampling step of binary traces, in pixels.
BINARY_STEP_PIXELS = 0.25


@dataclass(frozen=True)
class GridSpec:
    """
    Square pixel grid over ``[-half_extent, half_extent]^2``.

    Attributes:
        n: Pixels per side
        half_extent: Physical half-width L; also the world length of the
            detector-ring radius
    """

    n: int
    half_extent: float = 1.0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise GeometryError(f"grid needs at least one pixel per side, got {self.n}", "grid")
        if not self.half_extent > 0.0:
            raise GeometryError(
                f"grid half extent must be positive, got {self.half_extent}", "grid"
            )

    @property
    def delta(self) -> float:
        """Pixel size ``2L/n``."""
        return 2.0 * self.half_extent / self.n

    @property
    def scale(self) -> float:
        """World length of one detector-ring unit."""
        return self.half_extent

    @property
    def size(self) -> int:
        """Number of pixels ``n^2``."""
        return self.n * self.n

    def pixel_center(self, ix: int, iy: int) -> Tuple[float, float]:
        """World coordinates of the centre of pixel ``(ix, iy)``."""
        L, d = self.half_extent, self.delta
        return (-L + (ix + 0.5) * d, -L + (iy + 0.5) * d)

    def pixel_centers(self) -> Tuple[FloatArray, FloatArray]:
        """
        Centre coordinates of all pixels as two ``(n, n)`` arrays.

        Arrays are indexed ``[iy, ix]`` to match :meth:`Image.as_array`.
        """
        axis = -self.half_extent + (np.arange(self.n) + 0.5) * self.delta
        xx, yy = np.meshgrid(axis, axis, indexing="xy")
        return xx, yy

    def flat_index(self, ix: int, iy: int) -> int:
        return iy * self.n + ix


@dataclass(eq=False)
class Image:
    """
    Real-valued pixel field on a :class:`GridSpec`.

    Attributes:
        grid: The pixel grid
        values: Flat array of length ``n^2``, row-major by iy then ix
    """

    grid: GridSpec
    values: FloatArray

    def __post_init__(self) -> None:
        self.values = np.ascontiguousarray(self.values, dtype=np.float64).ravel()
        if self.values.size != self.grid.size:
            raise DimensionError(
                f"image has {self.values.size} values, grid needs {self.grid.size}", "grid"
            )

    @classmethod
    def zeros(cls, grid: GridSpec) -> "Image":
        return cls(grid, np.zeros(grid.size))

    @classmethod
    def from_array(cls, grid: GridSpec, array: npt.ArrayLike) -> "Image":
        """Wrap an ``(n, n)`` array indexed ``[iy, ix]``."""
        arr = np.asarray(array, dtype=np.float64)
        if arr.shape != (grid.n, grid.n):
            raise DimensionError(f"expected shape {(grid.n, grid.n)}, got {arr.shape}", "grid")
        return cls(grid, arr.ravel())

    def as_array(self) -> FloatArray:
        """View of the values as an ``(n, n)`` array indexed ``[iy, ix]``."""
        return self.values.reshape(self.grid.n, self.grid.n)

    def relative_error(self, reference: "Image") -> float:
        """``||self - reference||_2 / ||reference||_2``."""
        denom = float(np.linalg.norm(reference.values))
        if denom == 0.0:
            return float(np.linalg.norm(self.values))
        return float(np.linalg.norm(self.values - reference.values)) / denom


def world_to_pixel(grid: GridSpec, p: Tuple[float, float]) -> Optional[Tuple[int, int]]:
    """
    Pixel containing world point ``p``.

    Returns:
        ``(ix, iy)``, or ``None`` if ``p`` is outside ``[-L, L)^2``
    """
    L, d = grid.half_extent, grid.delta
    ix = int(math.floor((p[0] + L) / d))
    iy = int(math.floor((p[1] + L) / d))
    if 0 <= ix < grid.n and 0 <= iy < grid.n:
        return ix, iy
    return None


def _pixel_indices(grid: GridSpec, x: FloatArray, y: FloatArray) -> IndexArray:
    """Flat indices of the points inside the grid; outside points are dropped."""
    L, d, n = grid.half_extent, grid.delta, grid.n
    ix = np.floor((x + L) / d).astype(np.int64)
    iy = np.floor((y + L) / d).astype(np.int64)
    inside = (ix >= 0) & (ix < n) & (iy >= 0) & (iy < n)
    return iy[inside] * n + ix[inside]


def _world_circle(grid: GridSpec, ts: ToricSection, which: Arc) -> Tuple[float, float, float]:
    cx, cy = ts.center(which)
    k = grid.scale
    return cx * k, cy * k, ts.r * k


def trace_arc_arrays(
    grid: GridSpec, ts: ToricSection, which: Arc, mode: TraceMode = TraceMode.BINARY
) -> Tuple[IndexArray, FloatArray]:
    """
    Pixels crossed by one arc of a toric section.

    Binary mode samples the arc at arc-length step ``delta/4`` and keeps each
    visited pixel once with weight 1.  Length mode intersects the circle with
    every grid line, sorts the crossing angles and assigns each pixel the arc
    length ``R * dbeta`` of the pieces falling inside it.

    Returns:
        ``(indices, weights)`` with strictly increasing flat pixel indices
    """
    cx, cy, radius = _world_circle(grid, ts, which)
    start, span = ts.arc_interval(which)

    if TraceMode(mode) is TraceMode.BINARY:
        step = BINARY_STEP_PIXELS * grid.delta
        count = max(2, int(math.ceil(radius * span / step)) + 1)
        beta = start + np.linspace(0.0, span, count)
        xs = cx + radius * np.cos(beta)
        ys = cy + radius * np.sin(beta)
        idx = np.unique(_pixel_indices(grid, xs, ys))
        return idx, np.ones(idx.size)

    lines = -grid.half_extent + np.arange(grid.n + 1) * grid.delta
    u = (lines - cx) / radius
    u = u[np.abs(u) < 1.0]
    v = (lines - cy) / radius
    v = v[np.abs(v) < 1.0]
    a_u = np.arccos(u)
    a_v = np.arcsin(v)
    crossings = np.concatenate([a_u, -a_u, a_v, math.pi - a_v])
    rel = np.mod(crossings - start, 2.0 * math.pi)
    rel = rel[(rel > 0.0) & (rel < span)]
    knots = np.concatenate([[0.0], np.sort(rel), [span]])
    mid = start + 0.5 * (knots[:-1] + knots[1:])
    seg = radius * np.diff(knots)

    L, d, n = grid.half_extent, grid.delta, grid.n
    ix = np.floor((cx + radius * np.cos(mid) + L) / d).astype(np.int64)
    iy = np.floor((cy + radius * np.sin(mid) + L) / d).astype(np.int64)
    keep = (ix >= 0) & (ix < n) & (iy >= 0) & (iy < n) & (seg > 0.0)
    flat = iy[keep] * n + ix[keep]
    idx, inverse = np.unique(flat, return_inverse=True)
    weights = np.bincount(inverse, weights=seg[keep], minlength=idx.size)
    return idx, weights


def trace_arc(
    grid: GridSpec, ts: ToricSection, which: Arc, mode: TraceMode = TraceMode.BINARY
) -> List[Tuple[int, float]]:
    """
    Pixels crossed by one arc, as ``(flat pixel index, weight)`` pairs.

    An arc that never enters the grid yields an empty list.
    """
    idx, weights = trace_arc_arrays(grid, ts, which, mode)
    return [(int(i), float(w)) for i, w in zip(idx, weights)]
