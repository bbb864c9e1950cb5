"""
Test images: simple, complex, delta and ring phantoms.

Shapes are given in detector-ring units (the unit ball is inscribed in the
grid) and evaluated at pixel centres; overlapping shapes add up.  Phantom
files are plain text, one shape per line::

    name = my phantom
    variant = custom
    disk    center=-0.35,0.25 radius=0.3 value=2
    square  center=0.25,-0.25 side=0.4 angle=0 value=1
    ellipse center=0,0 axes=0.75,0.9 angle=0 value=1
    annulus center=0.5,0 inner=0.1 outer=0.15 value=6
    region  name=T center=0.25,0.3 axes=0.08,0.13 angle=20 value=3

Angles are in degrees.  ``region`` lines declare metric regions (default
shape ellipse, ``shape=disk|square`` accepted); their ``value`` is the true
density used by :func:`toric.solvers.region_metrics`.
"""

import logging
import math
import os
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt
from scipy.ndimage import gaussian_filter

from .analytic import DiskSpec
from .enums import PhantomVariant, ShapeKind
from .errors import FormatError, GeometryError, UnsupportedShapeError
from .grid import GridSpec, Image, world_to_pixel

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
Point = Tuple[float, float]

COMPLEX_TABLE = os.path.join(os.path.dirname(__file__), "data", "complex_phantom.cfg")

# Ring phantom: ring j sits at RING_OFFSET * (cos j pi/3, sin j pi/3) with value j.
RING_COUNT = 6
RING_OFFSET = 0.5
RING_INNER = 0.10
RING_OUTER = 0.15


def _rotate_into(
    x: FloatArray, y: FloatArray, center: Point, angle_deg: float
) -> Tuple[FloatArray, FloatArray]:
    """Coordinates relative to ``center`` in a frame rotated by ``angle_deg``."""
    a = math.radians(angle_deg)
    dx = x - center[0]
    dy = y - center[1]
    return dx * math.cos(a) + dy * math.sin(a), -dx * math.sin(a) + dy * math.cos(a)


@dataclass(frozen=True)
class Disk:
    center: Point
    radius: float
    value: float = 1.0

    kind = ShapeKind.DISK

    def __post_init__(self) -> None:
        if not self.radius > 0.0:
            raise GeometryError(f"disk radius must be positive, got {self.radius}", "phantoms")

    def evaluate(self, x: FloatArray, y: FloatArray) -> FloatArray:
        inside = (x - self.center[0]) ** 2 + (y - self.center[1]) ** 2 < self.radius**2
        return np.where(inside, self.value, 0.0)

    def extent(self) -> float:
        return math.hypot(*self.center) + self.radius


@dataclass(frozen=True)
class Annulus:
    center: Point
    inner: float
    outer: float
    value: float = 1.0

    kind = ShapeKind.ANNULUS

    def __post_init__(self) -> None:
        if not 0.0 <= self.inner < self.outer:
            raise GeometryError(
                f"annulus needs 0 <= inner < outer, got {self.inner}, {self.outer}", "phantoms"
            )

    def evaluate(self, x: FloatArray, y: FloatArray) -> FloatArray:
        d2 = (x - self.center[0]) ** 2 + (y - self.center[1]) ** 2
        return np.where((d2 >= self.inner**2) & (d2 < self.outer**2), self.value, 0.0)

    def extent(self) -> float:
        return math.hypot(*self.center) + self.outer


@dataclass(frozen=True)
class Square:
    center: Point
    side: float
    value: float = 1.0
    angle: float = 0.0

    kind = ShapeKind.SQUARE

    def __post_init__(self) -> None:
        if not self.side > 0.0:
            raise GeometryError(f"square side must be positive, got {self.side}", "phantoms")

    def evaluate(self, x: FloatArray, y: FloatArray) -> FloatArray:
        u, v = _rotate_into(x, y, self.center, self.angle)
        h = 0.5 * self.side
        return np.where((np.abs(u) < h) & (np.abs(v) < h), self.value, 0.0)

    def extent(self) -> float:
        return math.hypot(*self.center) + self.side / math.sqrt(2.0)


@dataclass(frozen=True)
class Ellipse:
    """
    Filled ellipse.

    Attributes:
        center: Centre point
        axes: Semi-axes along the rotated x and y directions
        value: Density added inside
        angle: Counter-clockwise rotation in degrees
    """

    center: Point
    axes: Point
    value: float = 1.0
    angle: float = 0.0

    kind = ShapeKind.ELLIPSE

    def __post_init__(self) -> None:
        if not (self.axes[0] > 0.0 and self.axes[1] > 0.0):
            raise GeometryError(f"ellipse semi-axes must be positive, got {self.axes}", "phantoms")

    def evaluate(self, x: FloatArray, y: FloatArray) -> FloatArray:
        u, v = _rotate_into(x, y, self.center, self.angle)
        inside = (u / self.axes[0]) ** 2 + (v / self.axes[1]) ** 2 < 1.0
        return np.where(inside, self.value, 0.0)

    def extent(self) -> float:
        return math.hypot(*self.center) + max(self.axes)


@dataclass(frozen=True)
class Block:
    """
    ``size x size`` block of pixels around the pixel containing ``center``.

    Pixel based, so it is only defined once a grid is chosen.
    """

    center: Point
    size: int = 3
    value: float = 1.0

    kind = ShapeKind.BLOCK

    def __post_init__(self) -> None:
        if self.size < 1 or self.size % 2 == 0:
            raise GeometryError(
                f"block size must be a positive odd number, got {self.size}", "phantoms"
            )

    def extent(self) -> float:
        return math.hypot(*self.center)


@dataclass(frozen=True)
class GaussianBump:
    """
    Smooth bump ``value * exp(-|x - center|^2 / (2 sigma^2))``, cut off outside the unit ball.
    """

    center: Point
    sigma: float
    value: float = 1.0

    kind = ShapeKind.BUMP

    def __post_init__(self) -> None:
        if not self.sigma > 0.0:
            raise GeometryError(f"bump width must be positive, got {self.sigma}", "phantoms")

    def evaluate(self, x: FloatArray, y: FloatArray) -> FloatArray:
        d2 = (x - self.center[0]) ** 2 + (y - self.center[1]) ** 2
        bump = self.value * np.exp(-0.5 * d2 / self.sigma**2)
        return np.where(x * x + y * y < 1.0, bump, 0.0)

    def extent(self) -> float:
        return min(1.0, math.hypot(*self.center) + 6.0 * self.sigma)


Shape = Union[Disk, Annulus, Square, Ellipse, Block, GaussianBump]
RegionShape = Union[Disk, Square, Ellipse]


@dataclass(frozen=True)
class Region:
    """
    Metric region of a phantom.

    Attributes:
        name: Label used in metrics output (``T``, ``C``, ``disk``...)
        shape: Area the average is taken over; its ``value`` is ignored
        true_value: Density the phantom has inside the region
    """

    name: str
    shape: RegionShape
    true_value: float


@dataclass
class PhantomSpec:
    """
    A phantom: a sum of shapes plus optional metric regions.

    Attributes:
        variant: Which built-in phantom this is, or ``custom``
        shapes: Shapes in detector-ring units
        regions: Metric regions
        name: Free-form label
    """

    variant: PhantomVariant = PhantomVariant.CUSTOM
    shapes: List[Shape] = field(default_factory=list)
    regions: List[Region] = field(default_factory=list)
    name: str = ""

    def __post_init__(self) -> None:
        self.variant = PhantomVariant(self.variant)

    def shapes_outside_unit_ball(self) -> List[str]:
        """Descriptions of shapes reaching beyond the unit ball."""
        return [
            f"{s.kind.value} #{i} at {s.center} reaches radius {s.extent():.3f}"
            for i, s in enumerate(self.shapes)
            if s.extent() > 1.0
        ]

    def as_function(self) -> Callable[[FloatArray, FloatArray], FloatArray]:
        """
        The phantom as a function of unit-ball coordinates.

        Raises:
            UnsupportedShapeError: For pixel-based shapes
        """
        for s in self.shapes:
            if isinstance(s, Block):
                raise UnsupportedShapeError("pixel blocks have no continuous form", "phantoms")
        shapes = list(self.shapes)

        def f(x: FloatArray, y: FloatArray) -> FloatArray:
            x = np.asarray(x, dtype=np.float64)
            y = np.asarray(y, dtype=np.float64)
            out = np.zeros(np.broadcast(x, y).shape)
            for s in shapes:
                out = out + s.evaluate(x, y)  # type: ignore[union-attr]
            return out

        return f

    def to_disks(self, scale: float = 1.0) -> List[DiskSpec]:
        """
        Disks and annuli of the phantom in world units, for analytic sinograms.

        Raises:
            UnsupportedShapeError: If any shape is not a disk or an annulus
        """
        disks = []
        for s in self.shapes:
            cx, cy = s.center[0] * scale, s.center[1] * scale
            if isinstance(s, Disk):
                disks.append(DiskSpec((cx, cy), s.radius * scale, 0.0, s.value))
            elif isinstance(s, Annulus):
                disks.append(DiskSpec((cx, cy), s.outer * scale, s.inner * scale, s.value))
            else:
                raise UnsupportedShapeError(
                    f"{s.kind.value} has no closed-form toric integral", "phantoms"
                )
        return disks


def _unit_coordinates(grid: GridSpec) -> Tuple[FloatArray, FloatArray]:
    xx, yy = grid.pixel_centers()
    return xx / grid.scale, yy / grid.scale


def _render_block(grid: GridSpec, block: Block, out: FloatArray) -> None:
    hit = world_to_pixel(grid, (block.center[0] * grid.scale, block.center[1] * grid.scale))
    if hit is None:
        logger.warning("block at %s lies outside the grid", block.center)
        return
    ix, iy = hit
    h = block.size // 2
    out[max(iy - h, 0) : iy + h + 1, max(ix - h, 0) : ix + h + 1] += block.value


def render(spec: PhantomSpec, grid: GridSpec) -> Image:
    """
    Sample a phantom at the pixel centres of ``grid``.

    Shapes leaving the unit ball are rendered but logged as a warning; use
    :func:`toric.validation.validate_phantom` to get them as a result.
    """
    outside = spec.shapes_outside_unit_ball()
    if outside:
        logger.warning(
            "phantom %r has shapes outside the unit ball: %s", spec.name, "; ".join(outside)
        )

    out = np.zeros((grid.n, grid.n))
    x, y = _unit_coordinates(grid)
    for s in spec.shapes:
        if isinstance(s, Block):
            _render_block(grid, s, out)
        else:
            out += s.evaluate(x, y)
    return Image.from_array(grid, out)


def region_mask(region: Region, grid: GridSpec) -> npt.NDArray[np.bool_]:
    """Flat boolean mask of the pixels whose centre lies in ``region``."""
    x, y = _unit_coordinates(grid)
    return (replace(region.shape, value=1.0).evaluate(x, y) != 0.0).ravel()


def simple_phantom(
    disk_center: Point = (-0.35, 0.25),
    disk_radius: float = 0.3,
    square_center: Point = (0.25, -0.25),
    square_side: float = 0.4,
) -> PhantomSpec:
    """A disk of value 2 and a square of value 1."""
    return PhantomSpec(
        variant=PhantomVariant.SIMPLE,
        shapes=[
            Disk(disk_center, disk_radius, 2.0),
            Square(square_center, square_side, 1.0),
        ],
        regions=[
            Region("disk", Disk(disk_center, 2.0 * disk_radius / 3.0), 2.0),
            Region("square", Square(square_center, 2.0 * square_side / 3.0), 1.0),
        ],
        name="simple",
    )


def complex_phantom(path: Optional[str] = None) -> PhantomSpec:
    """The ten-ellipse table shipped with the package, with regions T and C."""
    spec = load_phantom(path or COMPLEX_TABLE)
    spec.variant = PhantomVariant.COMPLEX
    return spec


def delta_phantom(center: Point, size: int = 3) -> PhantomSpec:
    """``size x size`` block of ones around the pixel containing ``center`` (unit-ball units)."""
    return PhantomSpec(
        variant=PhantomVariant.DELTA, shapes=[Block(center, size, 1.0)], name="delta"
    )


def delta_at_pixel(grid: GridSpec, ix: int, iy: int, size: int = 3) -> PhantomSpec:
    """Delta phantom centred on pixel ``(ix, iy)`` of ``grid``."""
    px, py = grid.pixel_center(ix, iy)
    return delta_phantom((px / grid.scale, py / grid.scale), size)


def ring_phantom() -> PhantomSpec:
    """
    Six annuli, ring ``j`` with value ``j`` centred at ``0.5 (cos j pi/3, sin j pi/3)``.

    On the 200 x 200 grid over ``[-100, 100]^2`` these are the rings of
    radii 10 and 15 pixels centred at ``50 (cos j pi/3, sin j pi/3)``.
    """
    shapes: List[Shape] = []
    for j in range(1, RING_COUNT + 1):
        a = j * math.pi / 3.0
        center = (RING_OFFSET * math.cos(a), RING_OFFSET * math.sin(a))
        shapes.append(Annulus(center, RING_INNER, RING_OUTER, float(j)))
    return PhantomSpec(variant=PhantomVariant.RING, shapes=shapes, name="ring")


def gaussian_bumps(bumps: Sequence[Tuple[float, float, float, float]]) -> PhantomSpec:
    """Smooth phantom from ``(cx, cy, sigma, amplitude)`` tuples."""
    return PhantomSpec(
        shapes=[GaussianBump((cx, cy), sigma, amp) for cx, cy, sigma, amp in bumps],
        name="bumps",
    )


def mollify(image: Image, sigma_px: float) -> Image:
    """Gaussian smoothing with standard deviation ``sigma_px`` pixels."""
    if sigma_px <= 0.0:
        return Image(image.grid, image.values.copy())
    smoothed = gaussian_filter(image.as_array(), sigma_px, mode="constant")
    return Image.from_array(image.grid, smoothed)


def builtin_phantom(
    variant: Union[PhantomVariant, str], delta_center: Point = (-0.5, 0.0)
) -> PhantomSpec:
    """Built-in phantom by name."""
    variant = PhantomVariant(variant)
    if variant is PhantomVariant.SIMPLE:
        return simple_phantom()
    if variant is PhantomVariant.COMPLEX:
        return complex_phantom()
    if variant is PhantomVariant.DELTA:
        return delta_phantom(delta_center)
    if variant is PhantomVariant.RING:
        return ring_phantom()
    raise UnsupportedShapeError("custom phantoms are loaded from a file", "phantoms")


# Phantom files


def _pair(text: str, key: str, lineno: int) -> Point:
    parts = text.split(",")
    if len(parts) != 2:
        raise FormatError(f"line {lineno}: {key} needs two comma-separated numbers", "phantoms")
    return float(parts[0]), float(parts[1])


def _shape_from_fields(kind: str, fields: Dict[str, str], lineno: int) -> Shape:
    def num(key: str, default: Optional[float] = None) -> float:
        if key not in fields:
            if default is None:
                raise FormatError(f"line {lineno}: {kind} needs {key}=", "phantoms")
            return default
        return float(fields[key])

    center = _pair(fields["center"], "center", lineno) if "center" in fields else None
    if center is None:
        raise FormatError(f"line {lineno}: {kind} needs center=", "phantoms")
    value = num("value", 1.0)
    if kind == ShapeKind.DISK.value:
        return Disk(center, num("radius"), value)
    if kind == ShapeKind.ANNULUS.value:
        return Annulus(center, num("inner"), num("outer"), value)
    if kind == ShapeKind.SQUARE.value:
        return Square(center, num("side"), value, num("angle", 0.0))
    if kind == ShapeKind.ELLIPSE.value:
        if "axes" not in fields:
            raise FormatError(f"line {lineno}: ellipse needs axes=", "phantoms")
        return Ellipse(center, _pair(fields["axes"], "axes", lineno), value, num("angle", 0.0))
    if kind == ShapeKind.BLOCK.value:
        return Block(center, int(num("size", 3)), value)
    if kind == ShapeKind.BUMP.value:
        return GaussianBump(center, num("sigma"), value)
    raise FormatError(f"line {lineno}: unknown shape {kind!r}", "phantoms")


def parse_phantom(text: str) -> PhantomSpec:
    """
    Parse the phantom file format described in the module docs.

    Raises:
        FormatError: On unknown shapes, missing fields or malformed numbers
    """
    spec = PhantomSpec()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line.split()[0] or line.split()[0] in ("name", "variant"):
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key == "name":
                spec.name = value
            elif key == "variant":
                try:
                    spec.variant = PhantomVariant(value)
                except ValueError:
                    raise FormatError(f"line {lineno}: unknown variant {value!r}", "phantoms")
            else:
                raise FormatError(f"line {lineno}: unknown key {key!r}", "phantoms")
            continue

        kind, *tokens = line.split()
        fields: Dict[str, str] = {}
        for token in tokens:
            k, sep, v = token.partition("=")
            if not sep:
                raise FormatError(f"line {lineno}: expected key=value, got {token!r}", "phantoms")
            fields[k] = v
        try:
            if kind == "region":
                name = fields.pop("name", f"region{len(spec.regions)}")
                true_value = float(fields.pop("value", "nan"))
                shape_kind = fields.pop("shape", ShapeKind.ELLIPSE.value)
                shape = _shape_from_fields(shape_kind, dict(fields, value="1"), lineno)
                if not isinstance(shape, (Disk, Square, Ellipse)):
                    raise FormatError(
                        f"line {lineno}: regions must be disks, squares or ellipses", "phantoms"
                    )
                if math.isnan(true_value):
                    raise FormatError(f"line {lineno}: region needs value=", "phantoms")
                spec.regions.append(Region(name, shape, true_value))
            else:
                spec.shapes.append(_shape_from_fields(kind, fields, lineno))
        except FormatError:
            raise
        except ValueError as e:
            raise FormatError(f"line {lineno}: {e}", "phantoms") from e
    return spec


def load_phantom(path: str) -> PhantomSpec:
    """Read a phantom file."""
    with open(path, encoding="utf-8") as f:
        spec = parse_phantom(f.read())
    logger.info("loaded phantom %r from %s: %d shapes", spec.name, path, len(spec.shapes))
    return spec
