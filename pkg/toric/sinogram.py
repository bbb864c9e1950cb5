"""
Scan lattices and sinogram containers.
"""

import hashlib
import math
from dataclasses import dataclass
from typing import Iterator, Tuple

import numpy as np
import numpy.typing as npt

from .enums import GridUnits
from .errors import DimensionError, GeometryError
from .geometry import ToricSection, make_toric_section

FloatArray = npt.NDArray[np.float64]

# Detector-ring radius in pixel units of the standard 200 x 200 grid.
PIXELS_PER_UNIT = 100.0

STANDARD_N_ALPHA = 360
STANDARD_N_RADII = 199


@dataclass(eq=False)
class ScanGeometry:
    """
    The ``(r, alpha)`` sample lattice of a scan.

    Row ``k`` of any sinogram or operator built on this geometry corresponds
    to ``radius index * n_alpha + angle index``.

    Attributes:
        alphas: Rotation angles in radians
        radii: Circle radii, in ``units``
        units: Length unit of ``radii``
    """

    alphas: FloatArray
    radii: FloatArray
    units: GridUnits = GridUnits.UNIT_BALL

    def __post_init__(self) -> None:
        self.alphas = np.asarray(self.alphas, dtype=np.float64).ravel()
        self.radii = np.asarray(self.radii, dtype=np.float64).ravel()
        self.units = GridUnits(self.units)
        if self.alphas.size == 0 or self.radii.size == 0:
            raise GeometryError("scan geometry needs at least one angle and one radius", "operator")
        if np.any(self.unit_radii <= 2.0):
            raise GeometryError("all scan radii must exceed 2 detector-ring units", "operator")

    @property
    def n_alpha(self) -> int:
        return int(self.alphas.size)

    @property
    def n_radii(self) -> int:
        return int(self.radii.size)

    @property
    def n_rows(self) -> int:
        return self.n_alpha * self.n_radii

    @property
    def unit_radii(self) -> FloatArray:
        """Radii in detector-ring units."""
        if self.units is GridUnits.PIXEL:
            return self.radii / PIXELS_PER_UNIT
        return self.radii

    def row_index(self, radius_index: int, angle_index: int) -> int:
        return radius_index * self.n_alpha + angle_index

    def row_params(self, row: int) -> Tuple[float, float]:
        """``(r, alpha)`` of row ``row``, r in detector-ring units."""
        i_r, i_a = divmod(row, self.n_alpha)
        return float(self.unit_radii[i_r]), float(self.alphas[i_a])

    def toric_section(self, row: int) -> ToricSection:
        return make_toric_section(*self.row_params(row))

    def sections(self) -> Iterator[ToricSection]:
        """All toric sections in row order."""
        for row in range(self.n_rows):
            yield self.toric_section(row)

    def is_uniform_in_alpha(self, tol: float = 1e-9) -> bool:
        """True if the angles form a uniform lattice covering one full turn."""
        if self.n_alpha < 2:
            return False
        steps = np.diff(self.alphas)
        step = 2.0 * math.pi / self.n_alpha
        return bool(np.all(np.abs(steps - step) <= tol))

    def fingerprint(self) -> str:
        """Stable hash of the lattice, used for operator cache keys."""
        h = hashlib.sha256()
        h.update(self.units.value.encode())
        h.update(self.unit_radii.astype("<f8").tobytes())
        h.update(self.alphas.astype("<f8").tobytes())
        return h.hexdigest()


@dataclass(eq=False)
class Sinogram:
    """
    Data values on a :class:`ScanGeometry`.

    Attributes:
        geom: Scan lattice
        values: Flat array of length ``geom.n_rows`` (radius-major)
    """

    geom: ScanGeometry
    values: FloatArray

    def __post_init__(self) -> None:
        self.values = np.ascontiguousarray(self.values, dtype=np.float64).ravel()
        if self.values.size != self.geom.n_rows:
            raise DimensionError(
                f"sinogram has {self.values.size} values, geometry has {self.geom.n_rows} rows",
                "operator",
            )

    def as_array(self) -> FloatArray:
        """View as ``(n_radii, n_alpha)``."""
        return self.values.reshape(self.geom.n_radii, self.geom.n_alpha)

    def relative_error(self, reference: "Sinogram") -> float:
        """``||self - reference||_2 / ||reference||_2``."""
        denom = float(np.linalg.norm(reference.values))
        if denom == 0.0:
            return float(np.linalg.norm(self.values))
        return float(np.linalg.norm(self.values - reference.values)) / denom


def standard_radii(n_radii: int = STANDARD_N_RADII) -> FloatArray:
    """
    Radii ``(j^2 + 4m^2)/(2jm)``, ``m = (n_radii+1)/2``, in detector-ring units.

    For ``n_radii = 199`` these are the pixel radii ``(j^2 + 200^2)/(2j)``
    divided by 100.
    """
    m = 0.5 * (n_radii + 1)
    j = np.arange(1, n_radii + 1, dtype=np.float64)
    return (j * j + 4.0 * m * m) / (2.0 * j * m)


def standard_alphas(n_alpha: int = STANDARD_N_ALPHA) -> FloatArray:
    """Angles ``2 pi j / n_alpha`` for ``j = 1..n_alpha``."""
    return 2.0 * math.pi * np.arange(1, n_alpha + 1, dtype=np.float64) / n_alpha


def default_scan_geometry(grid_units: GridUnits = GridUnits.UNIT_BALL) -> ScanGeometry:
    """
    The standard 360 x 199 scan lattice.

    Angles are ``j pi / 180``, ``1 <= j <= 360``; pixel radii are
    ``(j^2 + 200^2)/(2j)``, ``1 <= j <= 199`` (divide by 100 for unit-ball
    units).  71 640 rows.
    """
    units = GridUnits(grid_units)
    radii = standard_radii()
    if units is GridUnits.PIXEL:
        j = np.arange(1, STANDARD_N_RADII + 1, dtype=np.float64)
        radii = (j * j + 200.0**2) / (2.0 * j)
    return ScanGeometry(alphas=standard_alphas(), radii=radii, units=units)


def reduced_scan_geometry(n_alpha: int, n_radii: int) -> ScanGeometry:
    """Coarser lattice following the same angle and radius laws, in unit-ball units."""
    if n_alpha < 1 or n_radii < 1:
        raise GeometryError("reduced geometry needs positive sample counts", "operator")
    return ScanGeometry(alphas=standard_alphas(n_alpha), radii=standard_radii(n_radii))
