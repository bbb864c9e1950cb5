"""
Enums for toric section scans, rasterization and reconstruction.

Provides type-safe enums for arc selection, trace modes, solver methods
and other string-valued options so that configuration files and CLI
flags map onto a closed set of values.
"""

from enum import Enum


class Arc(str, Enum):
    """The two circular arcs making up a toric section."""

    C1 = "C1"
    C2 = "C2"

    @property
    def partner(self) -> "Arc":
        """The other arc of the same toric section."""
        return Arc.C2 if self is Arc.C1 else Arc.C1


class ArtifactBranch(str, Enum):
    """Direction of the arc-to-arc artifact map."""

    C1_TO_C2 = "C1->C2"
    C2_TO_C1 = "C2->C1"

    @property
    def source(self) -> Arc:
        return Arc.C1 if self is ArtifactBranch.C1_TO_C2 else Arc.C2

    @classmethod
    def from_source(cls, arc: Arc) -> "ArtifactBranch":
        return cls.C1_TO_C2 if Arc(arc) is Arc.C1 else cls.C2_TO_C1


class TraceMode(str, Enum):
    """Pixel weights emitted when tracing an arc through the grid."""

    BINARY = "binary"  # 1 per pixel touched
    LENGTH = "length"  # arc length inside the pixel


class BinaryScale(str, Enum):
    """Scaling applied to binary operator rows before comparing with arc lengths."""

    NONE = "none"
    PIXEL = "pixel"  # times pixel size
    CHORD = "chord"  # times mean chord pi*delta/4


class GridUnits(str, Enum):
    """Length unit of a list of scan radii."""

    UNIT_BALL = "unit_ball"  # detector ring radius is 1
    PIXEL = "pixel"  # detector ring radius is 100 pixels


class SolverMethod(str, Enum):
    """Reconstruction methods."""

    LANDWEBER = "landweber"
    CGLS = "cgls"
    HTV = "htv"


class PhantomVariant(str, Enum):
    """Built-in test images."""

    SIMPLE = "simple"
    COMPLEX = "complex"
    DELTA = "delta"
    RING = "ring"
    CUSTOM = "custom"  # loaded from a phantom file


class ShapeKind(str, Enum):
    """Primitive shapes a phantom is composed of."""

    DISK = "disk"
    ANNULUS = "annulus"
    SQUARE = "square"
    ELLIPSE = "ellipse"
    BLOCK = "block"  # square block of pixels, used by the delta phantom
    BUMP = "bump"  # smooth Gaussian, used by the Fourier checks


class DataSource(str, Enum):
    """Where pipeline sinograms come from."""

    DISCRETE = "discrete"  # b = A v
    ANALYTIC = "analytic"  # closed-form disk integrals
