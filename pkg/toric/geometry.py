"""
Continuous geometry of toric sections.

A toric section with radius ``r`` and rotation ``alpha`` is the union of two
circular arcs ``C1`` and ``C2`` of radius ``r`` whose circles both pass
through the detector-ring point ``-theta(alpha)`` and the source-ring point
``3 theta(alpha)``.  Lengths are measured in detector-ring units (detector
ring radius 1, source ring radius 3).

Conventions::

    theta(a)   = (cos a, sin a)
    theta_a(a) = (-sin a, cos a)
    s          = sqrt(r^2 - 4)
    c1         = theta + s * theta_a      arc C1: x . theta_a <= 0
    c2         = theta - s * theta_a      arc C2: x . theta_a >= 0

Tips satisfy both half-plane conditions and belong to both arcs.

The polar parametrization of the part of a toric section inside the unit
disk uses ``t = sqrt(r^2 - 3)`` (distance of each circle centre from the
origin) and ``phi`` in ``[-arccos(1/t), arccos(1/t)]``.
"""

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
import numpy.typing as npt

from .enums import Arc
from .errors import GeometryError

Vec2 = Tuple[float, float]
FloatOrArray = Union[float, npt.NDArray[np.float64]]

DETECTOR_RADIUS = 1.0
SOURCE_RADIUS = 3.0
ELECTRON_REST_ENERGY_KEV = 511.0

TWO_PI = 2.0 * math.pi

# Slack for membership and tip checks.
GEOMETRY_TOL = 1e-12


def theta(alpha: float) -> Vec2:
    """Unit vector at angle ``alpha``."""
    return (math.cos(alpha), math.sin(alpha))


def theta_perp(alpha: float) -> Vec2:
    """Unit vector ``theta`` rotated by +90 degrees."""
    return (-math.sin(alpha), math.cos(alpha))


def normalize_angle(alpha: float) -> float:
    """Map an angle into ``[0, 2pi)``."""
    a = math.fmod(alpha, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    # fmod of a value just below 0 can round up to exactly 2pi
    return 0.0 if a >= TWO_PI else a


@dataclass(frozen=True)
class ToricSection:
    """
    One scan configuration ``(r, alpha)`` with its derived geometry.

    Build instances with :func:`make_toric_section`; the constructor does not
    validate.

    Attributes:
        r: Circle radius of both arcs (> 2)
        alpha: Rotation angle in radians, normalized to [0, 2pi)
        s: Offset of the circle centres along theta_a, sqrt(r^2 - 4)
        t: Distance of the circle centres from the origin, sqrt(r^2 - 3)
        alpha_t: Half opening angle arccos(1/t)
        c1: Centre of the circle carrying arc C1
        c2: Centre of the circle carrying arc C2
    """

    r: float
    alpha: float
    s: float
    t: float
    alpha_t: float
    c1: Vec2
    c2: Vec2

    @property
    def theta(self) -> Vec2:
        return theta(self.alpha)

    @property
    def theta_perp(self) -> Vec2:
        return theta_perp(self.alpha)

    def center(self, which: Arc) -> Vec2:
        """Centre of the circle carrying ``which``."""
        return self.c1 if Arc(which) is Arc.C1 else self.c2

    def tips(self) -> Tuple[Vec2, Vec2]:
        """The detector tip ``-theta`` and the source tip ``3 theta``."""
        cx, cy = self.theta
        return (-DETECTOR_RADIUS * cx, -DETECTOR_RADIUS * cy), (
            SOURCE_RADIUS * cx,
            SOURCE_RADIUS * cy,
        )

    def half_plane_sign(self, which: Arc) -> float:
        """+1 if ``which`` lies in ``x . theta_a >= 0``, -1 otherwise."""
        return -1.0 if Arc(which) is Arc.C1 else 1.0

    def on_arc(self, p: Vec2, which: Arc, tol: float = 1e-10) -> bool:
        """
        Check whether ``p`` lies on arc ``which``.

        Both the circle equation and the half-plane sign are tested, each
        with absolute slack ``tol``.
        """
        cx, cy = self.center(which)
        on_circle = abs(math.hypot(p[0] - cx, p[1] - cy) - self.r) <= tol
        ta = self.theta_perp
        side = self.half_plane_sign(which) * (p[0] * ta[0] + p[1] * ta[1])
        return on_circle and side >= -tol

    def arc_interval(self, which: Arc) -> Tuple[float, float]:
        """
        Angular extent of ``which`` about its circle centre.

        Returns:
            ``(start, span)``: the arc is ``c + r(cos b, sin b)`` for
            ``b`` in ``[start, start + span]``, start in [0, 2pi), span < pi.
        """
        cx, cy = self.center(which)
        (ax, ay), (bx, by) = self.tips()
        beta_a = math.atan2(ay - cy, ax - cx)
        beta_b = math.atan2(by - cy, bx - cx)
        span = normalize_angle(beta_b - beta_a)
        start = beta_a
        mid = start + 0.5 * span
        ta = self.theta_perp
        px = cx + self.r * math.cos(mid)
        py = cy + self.r * math.sin(mid)
        if self.half_plane_sign(which) * (px * ta[0] + py * ta[1]) < 0.0:
            start = beta_b
            span = TWO_PI - span
        return normalize_angle(start), span

    def arc_length(self, which: Arc) -> float:
        """Length of arc ``which`` from tip to tip."""
        return self.r * self.arc_interval(which)[1]


@dataclass(frozen=True)
class Covector:
    """
    A point-direction pair ``(w, xi)`` used for artifact prediction.

    Attributes:
        w: Base point, expected inside the unit disk
        xi: Direction, nonzero
    """

    w: Vec2
    xi: Vec2

    def __post_init__(self) -> None:
        if math.hypot(*self.xi) == 0.0:
            raise GeometryError("covector direction must be nonzero", "geometry")

    @property
    def xi_prime(self) -> Vec2:
        """Normalized direction."""
        norm = math.hypot(*self.xi)
        return (self.xi[0] / norm, self.xi[1] / norm)


def make_toric_section(r: float, alpha: float) -> ToricSection:
    """
    Build the toric section with circle radius ``r`` and rotation ``alpha``.

    Args:
        r: Circle radius in detector-ring units, must exceed 2
        alpha: Rotation angle in radians (any value, normalized to [0, 2pi))

    Returns:
        The toric section with derived centres and axis parameters

    Raises:
        GeometryError: If ``r <= 2`` (degenerate torus)
    """
    if not r > 2.0:
        raise GeometryError(f"degenerate torus: r = {r} must exceed 2", "geometry")
    alpha = normalize_angle(alpha)
    s = math.sqrt(r * r - 4.0)
    t = math.sqrt(r * r - 3.0)
    tx, ty = theta(alpha)
    px, py = theta_perp(alpha)
    c1 = (tx + s * px, ty + s * py)
    c2 = (tx - s * px, ty - s * py)
    return ToricSection(
        r=r, alpha=alpha, s=s, t=t, alpha_t=math.acos(1.0 / t), c1=c1, c2=c2
    )


def arc_point(ts: ToricSection, which: Arc, beta: float) -> Vec2:
    """
    Point at angle ``beta`` on the circle carrying ``which``.

    The point is on the arc itself only when it also satisfies the arc's
    half-plane sign (see :meth:`ToricSection.on_arc`).
    """
    cx, cy = ts.center(which)
    return (cx + ts.r * math.cos(beta), cy + ts.r * math.sin(beta))


def opening_angle(t: float) -> float:
    """Half opening angle ``arccos(1/t)`` of the polar parametrization."""
    if t < 1.0:
        raise GeometryError(f"axis parameter t = {t} must be >= 1", "geometry")
    return math.acos(1.0 / t)


def radius_from_axis(t: float) -> float:
    """Circle radius ``sqrt(t^2 + 3)`` for axis parameter ``t``."""
    return math.sqrt(t * t + 3.0)


def _check_polar_domain(t: float, phi: FloatOrArray) -> npt.NDArray[np.float64]:
    a_t = opening_angle(t)
    phi_arr = np.asarray(phi, dtype=float)
    if np.any(np.abs(phi_arr) > a_t + GEOMETRY_TOL):
        raise GeometryError(
            f"polar angle outside the toric section: |phi| > arccos(1/t) = {a_t}", "geometry"
        )
    return phi_arr


def polar_rho(t: float, phi: FloatOrArray) -> FloatOrArray:
    """
    Distance from the origin of the toric section point at polar angle ``phi``.

    ``rho = sqrt(t^2 cos^2 phi + 3) - t cos phi``; ``rho(+-arccos(1/t)) = 1``.

    Raises:
        GeometryError: If ``t < 1`` or ``|phi| > arccos(1/t)``
    """
    phi_arr = _check_polar_domain(t, phi)
    tc = t * np.cos(phi_arr)
    rho = np.sqrt(tc * tc + 3.0) - tc
    return float(rho) if rho.ndim == 0 else rho


def arc_measure_weight(t: float, phi: FloatOrArray) -> FloatOrArray:
    """
    Arc-length density ``ds/dphi`` of the polar parametrization.

    ``ds/dphi = r (1 - t cos phi / sqrt(t^2 cos^2 phi + 3))`` with
    ``r = sqrt(t^2 + 3)``; equal to ``sqrt(rho^2 + (drho/dphi)^2)``.
    """
    phi_arr = _check_polar_domain(t, phi)
    tc = t * np.cos(phi_arr)
    w = math.sqrt(t * t + 3.0) * (1.0 - tc / np.sqrt(tc * tc + 3.0))
    return float(w) if w.ndim == 0 else w


def compton_scatter_energy(
    energy: float, omega: float, rest_energy: float = ELECTRON_REST_ENERGY_KEV
) -> float:
    """
    Scattered photon energy after Compton scattering through angle ``omega``.

    ``E' = E / (1 + (E/E0)(1 - cos omega))``, energies in keV.
    """
    return energy / (1.0 + (energy / rest_energy) * (1.0 - math.cos(omega)))


def energy_to_radius(
    energy: float, scattered_energy: float, rest_energy: float = ELECTRON_REST_ENERGY_KEV
) -> Tuple[float, float]:
    """
    Scattering angle and torus radius selected by a scattered energy.

    Args:
        energy: Incident photon energy E (keV)
        scattered_energy: Measured scattered energy E' (keV), 0 < E' < E
        rest_energy: Electron rest energy E0 (keV)

    Returns:
        ``(omega, r)`` with ``cos omega = 1 - (E0/E')(1 - E'/E)`` and
        ``r = 2 / sin omega``

    Raises:
        GeometryError: If the energies are inconsistent or ``cos omega`` is
            outside (0, 1)
    """
    if not 0.0 < scattered_energy <= energy:
        raise GeometryError(
            f"scattered energy {scattered_energy} must lie in (0, {energy}]", "geometry"
        )
    cos_omega = 1.0 - (rest_energy / scattered_energy) * (1.0 - scattered_energy / energy)
    if not 0.0 < cos_omega < 1.0:
        raise GeometryError(
            f"geometry out of range: cos(omega) = {cos_omega} not in (0, 1)", "geometry"
        )
    omega = math.acos(cos_omega)
    return omega, 2.0 / math.sin(omega)


def radius_to_energy(
    r: float, energy: float, rest_energy: float = ELECTRON_REST_ENERGY_KEV
) -> float:
    """
    Scattered energy a detector must select to measure toric sections of radius ``r``.

    Inverse of :func:`energy_to_radius` on the branch ``omega < pi/2``.

    Raises:
        GeometryError: If ``r <= 2``
    """
    if not r > 2.0:
        raise GeometryError(f"degenerate torus: r = {r} must exceed 2", "geometry")
    omega = math.asin(2.0 / r)
    return compton_scatter_energy(energy, omega, rest_energy)
