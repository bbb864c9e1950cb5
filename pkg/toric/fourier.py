"""
Fourier-side consistency checks of the toric section transform.

Expanding an image in polar Fourier series ``f = sum_l F_l(rho) e^{i l phi}``
and the data in ``alpha``, each order decouples.  One arc of the section
with axis parameter ``t = sqrt(r^2 - 3)`` is, inside the unit disk, the
polar curve ``rho(phi) = sqrt(t^2 cos^2 phi + 3) - t cos phi`` for
``|phi| <= arccos(1/t)``, with arc length element
``r (1 - t cos phi / sqrt(t^2 cos^2 phi + 3)) dphi``.  Substituting
``u = t cos phi`` turns ``F_l(rho) ds`` into ``r F~_l(u) dphi`` with::

    F~_l(u) = (1 - u / sqrt(u^2 + 3)) F_l(sqrt(u^2 + 3) - u)

(the printed form ``sqrt(|x| + 3)`` does not follow from the arc length
element; the squared form does).  The two arcs sit at polar angles
``alpha + pi +- arctan(s)`` and ``cos(arctan s) = 1/t``, so summing them
yields the Chebyshev factor::

    (-1)^l (Tf)_l(t) / (4 r) = T_|l|(1/t) int_0^{arccos(1/t)} F~_l(t cos v) cos(|l| v) dv

which is the Abel-type identity with ``rho = t cos v`` (not ``s cos v``).
The ``(-1)^l`` comes from the shared unit-circle tip sitting at ``-theta``.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
import numpy.typing as npt
from scipy.integrate import quad
from scipy.interpolate import RegularGridInterpolator
from scipy.special import eval_chebyt

from .enums import TraceMode
from .errors import DimensionError, GeometryError
from .geometry import opening_angle, radius_from_axis
from .grid import Image
from .operator import apply, assemble
from .sinogram import ScanGeometry, Sinogram, standard_alphas

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
ComplexArray = npt.NDArray[np.complex128]
ImageFunction = Callable[[FloatArray, FloatArray], FloatArray]
Profile = Callable[[FloatArray], ComplexArray]

QUAD_TOL = 1e-10
PROFILE_SAMPLES = 1024


@dataclass
class PolarCoeffSeries:
    """
    Samples of one polar Fourier coefficient.

    Attributes:
        order: Fourier order ``l``
        abscissae: Strictly increasing ``rho``, ``t`` or ``u`` values
        values: Complex coefficient at each abscissa
    """

    order: int
    abscissae: FloatArray
    values: ComplexArray = field(default_factory=lambda: np.zeros(0, dtype=complex))

    def __post_init__(self) -> None:
        self.abscissae = np.asarray(self.abscissae, dtype=np.float64).ravel()
        self.values = np.asarray(self.values, dtype=np.complex128).ravel()
        if self.values.size != self.abscissae.size:
            raise DimensionError("coefficient series needs one value per abscissa", "fourier")
        if np.any(np.diff(self.abscissae) <= 0.0):
            raise DimensionError("coefficient abscissae must be strictly increasing", "fourier")

    def __call__(self, x: npt.ArrayLike) -> ComplexArray:
        """Linear interpolation, zero outside the sampled range."""
        xs = np.asarray(x, dtype=np.float64)
        re = np.interp(xs, self.abscissae, self.values.real, left=0.0, right=0.0)
        im = np.interp(xs, self.abscissae, self.values.imag, left=0.0, right=0.0)
        return re + 1j * im


def min_angular_samples(order: int) -> int:
    return 8 * abs(order) + 16


def polar_fourier_image(
    image_function: ImageFunction, l: int, rho_grid: Sequence[float], n_angular: int
) -> PolarCoeffSeries:
    """
    ``F_l(rho) = (1/2pi) int f(rho, alpha) e^{-i l alpha} d alpha`` by the trapezoidal rule.

    Args:
        image_function: ``f(x, y)`` on unit-ball coordinates, vectorized
        l: Fourier order
        rho_grid: Increasing radii
        n_angular: Angular samples, at least ``8|l| + 16``
    """
    if n_angular < min_angular_samples(l):
        raise DimensionError(
            f"order {l} needs at least {min_angular_samples(l)} angular samples, got {n_angular}",
            "fourier",
        )
    rho = np.asarray(rho_grid, dtype=np.float64).ravel()
    alpha = 2.0 * math.pi * np.arange(n_angular) / n_angular
    x = rho[:, None] * np.cos(alpha)[None, :]
    y = rho[:, None] * np.sin(alpha)[None, :]
    samples = np.asarray(image_function(x, y), dtype=np.float64)
    values = samples @ np.exp(-1j * l * alpha) / n_angular
    return PolarCoeffSeries(l, rho, values)


def image_as_function(image: Image) -> ImageFunction:
    """Bilinear interpolant of pixel values on unit-ball coordinates, zero off the grid."""
    grid = image.grid
    axis = (-grid.half_extent + (np.arange(grid.n) + 0.5) * grid.delta) / grid.scale
    interp = RegularGridInterpolator(
        (axis, axis), image.as_array(), method="linear", bounds_error=False, fill_value=0.0
    )

    def f(x: FloatArray, y: FloatArray) -> FloatArray:
        xb, yb = np.broadcast_arrays(
            np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
        )
        return interp(np.stack([yb, xb], axis=-1))

    return f


def sinogram_fourier(sino: Sinogram, l: int) -> PolarCoeffSeries:
    """
    ``(Tf)_l(t)``: DFT of each radius row in ``alpha``, abscissa ``t = sqrt(r^2 - 3)``.

    Raises:
        GeometryError: If the angle lattice is not uniform over a full turn
    """
    geom = sino.geom
    if not geom.is_uniform_in_alpha():
        raise GeometryError(
            "sinogram Fourier coefficients need a uniform alpha lattice", "fourier"
        )
    coeffs = sino.as_array() @ np.exp(-1j * l * geom.alphas) / geom.n_alpha
    t = np.sqrt(geom.unit_radii**2 - 3.0)
    order = np.argsort(t)
    return PolarCoeffSeries(l, t[order], coeffs[order])


def tilde_transform(
    f_l: Union[Profile, PolarCoeffSeries], u_grid: Sequence[float]
) -> PolarCoeffSeries:
    """
    ``F~_l(u) = (1 - u / sqrt(u^2 + 3)) F_l(sqrt(u^2 + 3) - u)`` on ``u_grid``.

    ``u = 1`` maps to the unit circle; larger ``u`` map inside the unit disk.
    """
    u = np.asarray(u_grid, dtype=np.float64).ravel()
    root = np.sqrt(u * u + 3.0)
    inner = root - u
    profile = np.asarray(f_l(inner), dtype=np.complex128)
    order = f_l.order if isinstance(f_l, PolarCoeffSeries) else 0
    return PolarCoeffSeries(order, u, (1.0 - u / root) * profile)


def inner_radius(u: npt.ArrayLike) -> FloatArray:
    """``sqrt(u^2 + 3) - u``, the polar radius belonging to ``u``."""
    u = np.asarray(u, dtype=np.float64)
    return np.sqrt(u * u + 3.0) - u


def abel_chebyshev_rhs(f_tilde: Union[Profile, PolarCoeffSeries], l: int, t: float) -> complex:
    """
    ``T_|l|(1/t) int_1^t F~_l(rho) T_|l|(rho/t) / sqrt(t^2 - rho^2) d rho``.

    Evaluated after ``rho = t cos v`` as
    ``T_|l|(1/t) int_0^{arccos(1/t)} F~_l(t cos v) cos(|l| v) dv``, which has
    no endpoint singularity, with adaptive quadrature.

    Args:
        f_tilde: Weighted order-``l`` profile ``F~_l`` on ``[1, t]``
        l: Angular order; a sampled profile does not carry it, and it selects
            both ``T_|l|`` and ``cos(|l| v)``
        t: Section parameter, ``> 1``

    Raises:
        GeometryError: If ``t <= 1``
    """
    if not t > 1.0:
        raise GeometryError(f"Abel identity needs t > 1, got {t}", "fourier")
    n = abs(l)
    upper = opening_angle(t)

    def part(v: float, imag: bool) -> float:
        value = complex(np.asarray(f_tilde(np.array([t * math.cos(v)])))[0])
        return (value.imag if imag else value.real) * math.cos(n * v)

    re, _ = quad(part, 0.0, upper, args=(False,), epsabs=QUAD_TOL, limit=200)
    im, _ = quad(part, 0.0, upper, args=(True,), epsabs=QUAD_TOL, limit=200)
    return complex(float(eval_chebyt(n, 1.0 / t)) * complex(re, im))


def chebyshev_self_test(max_order: int = 10, n_v: int = 257) -> float:
    """Largest ``|T_n(cos v) - cos(n v)|`` over ``n <= max_order`` and a ``v`` grid."""
    v = np.linspace(0.0, math.pi, n_v)
    worst = 0.0
    for n in range(max_order + 1):
        worst = max(worst, float(np.max(np.abs(eval_chebyt(n, np.cos(v)) - np.cos(n * v)))))
    return worst


@dataclass(frozen=True)
class ConsistencyRow:
    """One ``(l, t)`` comparison of the two sides of the identity."""

    order: int
    t: float
    lhs: complex
    rhs: complex
    mismatch: float


@dataclass
class ConsistencyReport:
    rows: List[ConsistencyRow] = field(default_factory=list)

    @property
    def max_mismatch(self) -> float:
        return max((row.mismatch for row in self.rows), default=0.0)


def consistency_report(
    image: Image,
    l_set: Sequence[int],
    t_set: Sequence[float],
    n_alpha: int = 720,
    mode: TraceMode = TraceMode.LENGTH,
    n_angular: int = 512,
    workers: Optional[int] = None,
) -> ConsistencyReport:
    """
    Compare both sides of the Fourier identity for an image.

    The left side comes from a discrete sinogram of ``image`` on radii
    ``r = sqrt(t^2 + 3)`` and ``n_alpha`` uniform angles; the right side
    from the polar coefficients of the bilinear interpolant of ``image``.
    Mismatch of a row is ``|lhs - rhs|`` over the largest ``|rhs|`` of the
    same order across ``t_set`` (0 when both sides vanish), not over the
    row's own ``|rhs|``.

    Raises:
        GeometryError: If any ``t <= 1`` or ``t_set`` is empty
        DimensionError: If ``n_alpha`` is too small for the largest order
    """
    ts = np.asarray(sorted(t_set), dtype=np.float64)
    if ts.size == 0:
        raise GeometryError("consistency check needs at least one t", "fourier")
    if np.any(ts <= 1.0):
        raise GeometryError("all t must exceed 1", "fourier")
    max_l = max((abs(l) for l in l_set), default=0)
    if n_alpha < min_angular_samples(max_l):
        raise DimensionError(
            f"order {max_l} needs at least {min_angular_samples(max_l)} angles, got {n_alpha}",
            "fourier",
        )

    radii = np.array([radius_from_axis(t) for t in ts])
    geom = ScanGeometry(alphas=standard_alphas(n_alpha), radii=radii)
    A = assemble(image.grid, geom, mode, workers)
    sino = Sinogram(geom, apply(A, image) / image.grid.scale)

    f = image_as_function(image)
    rho = np.linspace(0.0, 1.0, PROFILE_SAMPLES + 1)
    report = ConsistencyReport()
    for l in l_set:
        lhs_series = sinogram_fourier(sino, l)
        lhs = lhs_series.values * (-1.0) ** l / (4.0 * radii)
        f_l = polar_fourier_image(f, l, rho, max(n_angular, min_angular_samples(l)))

        def f_tilde(u: FloatArray, f_l: PolarCoeffSeries = f_l) -> ComplexArray:
            u = np.asarray(u, dtype=np.float64)
            return (1.0 - u / np.sqrt(u * u + 3.0)) * f_l(inner_radius(u))

        rhs = np.array([abel_chebyshev_rhs(f_tilde, l, float(t)) for t in ts])
        scale = float(np.max(np.abs(rhs))) if rhs.size else 0.0
        for t, left, right in zip(ts, lhs, rhs):
            diff = abs(left - right)
            mismatch = diff / scale if scale > 0.0 else (0.0 if diff == 0.0 else math.inf)
            report.rows.append(
                ConsistencyRow(int(l), float(t), complex(left), complex(right), mismatch)
            )
        logger.info(
            "order %d: max mismatch %.3g over %d radii",
            l,
            max(r.mismatch for r in report.rows if r.order == l),
            ts.size,
        )
    return report


def consistency_check(
    image: Image,
    l_set: Sequence[int],
    t_set: Sequence[float],
    n_alpha: int = 720,
    mode: TraceMode = TraceMode.LENGTH,
) -> float:
    """Largest relative mismatch of the Fourier identity over ``l_set x t_set``."""
    return consistency_report(image, l_set, t_set, n_alpha, mode).max_mismatch
