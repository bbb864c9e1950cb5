"""
Predicted reconstruction artifacts of the toric section transform.

A singularity at ``w`` in direction ``xi`` is detected by the toric section
whose arc passes through ``w`` with normal ``xi``; the transform cannot tell
it from a singularity on the other arc of the same section, so
backprojection produces a paired artifact there.

- :func:`detecting_radius` / :func:`detecting_angle` give the section
  ``(r, alpha)`` detecting ``(w, xi)``.
- :func:`map_artifact` sends ``w`` on one arc to its partner point on the
  other arc.
- :func:`delta_artifact_curves` sweeps all directions at once for a point
  singularity, giving the two curves ``psi1`` (artifacts on ``C1``) and
  ``psi2`` (artifacts on ``C2``).  They are computed for ``x0`` rotated onto
  the negative x axis and rotated back.
- :func:`overlay_score` checks predicted points against the ridges of a
  discrete backprojection ``A^T A v_delta``.

Points are in detector-ring units unless stated otherwise.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
from scipy.ndimage import distance_transform_edt, maximum

from .enums import Arc, ArtifactBranch
from .errors import DimensionError, GeometryError
from .geometry import Covector, Vec2, make_toric_section
from .grid import GridSpec, Image

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
IndexArray = npt.NDArray[np.int64]

# |x . theta_a| below this makes s undefined; such samples are skipped.
DEGENERATE_TOL = 1e-9
ON_CIRCLE_TOL = 1e-8

# Ring width (pixels) and background contrast of ridge detection.
RIDGE_BAND_PX = 2.0
RIDGE_CONTRAST = 2.0


def _dot(a: Vec2, b: Vec2) -> float:
    return a[0] * b[0] + a[1] * b[1]


def _oriented(w: Vec2, xi_prime: Vec2) -> Vec2:
    """``xi'`` flipped so that ``w . xi' > 0``."""
    d = _dot(w, xi_prime)
    if d == 0.0:
        raise GeometryError("covector tangent to radial foliation (w . xi = 0)", "artifacts")
    return xi_prime if d > 0.0 else (-xi_prime[0], -xi_prime[1])


def detecting_radius(w: Vec2, xi_prime: Vec2) -> float:
    """
    Radius ``(|w|^2 + 3) / (2 w . xi')`` of the toric section detecting ``(w, xi')``.

    ``xi'`` is a unit direction; its sign is flipped when ``w . xi' < 0``.

    Raises:
        GeometryError: If ``w . xi' = 0``
    """
    xi = _oriented(w, xi_prime)
    return (_dot(w, w) + 3.0) / (2.0 * _dot(w, xi))


def detecting_angle(w: Vec2, xi_prime: Vec2, r: float, branch: Arc) -> float:
    """
    Rotation ``alpha`` of the section of radius ``r`` whose arc ``branch`` passes through ``w``.

    The circle centre is ``w - r xi'``.  For ``C1`` this equals
    ``theta + s theta_a`` and for ``C2`` ``theta - s theta_a``, a 2x2 system
    in ``theta`` whose solution has unit length because
    ``|w - r xi'| = sqrt(1 + s^2)``.

    Returns:
        ``alpha`` in ``(-pi, pi]``
    """
    if not r > 2.0:
        raise GeometryError(f"degenerate torus: r = {r} must exceed 2", "artifacts")
    xi = _oriented(w, xi_prime)
    s = math.sqrt(r * r - 4.0)
    cx = w[0] - r * xi[0]
    cy = w[1] - r * xi[1]
    k = 1.0 / (1.0 + s * s)
    if Arc(branch) is Arc.C1:
        tx, ty = k * (cx + s * cy), k * (-s * cx + cy)
    else:
        tx, ty = k * (cx - s * cy), k * (s * cx + cy)
    return math.atan2(ty, tx)


def _partner_scale(u: Vec2, c: Vec2) -> float:
    """Positive root of ``nu^2 |u|^2 - 2 nu u.c - 3 = 0``."""
    uu = _dot(u, u)
    uc = _dot(u, c)
    return (uc + math.sqrt(uc * uc + 3.0 * uu)) / uu


def map_artifact(w: Vec2, r: float, alpha: float, branch: ArtifactBranch) -> Vec2:
    """
    Partner of ``w`` on the other arc of the toric section ``(r, alpha)``.

    With ``u = theta_a (-theta_a . w) + theta (+-(2/s) theta_a . w - theta . w)``
    (``+`` for ``C1 -> C2``) the partner is ``nu u`` on the partner circle
    with ``nu > 0``.

    Raises:
        GeometryError: If ``w`` is not on the source circle or ``u = 0``
    """
    branch = ArtifactBranch(branch)
    ts = make_toric_section(r, alpha)
    source = branch.source
    cx, cy = ts.center(source)
    if abs(math.hypot(w[0] - cx, w[1] - cy) - r) > ON_CIRCLE_TOL * max(1.0, r):
        raise GeometryError(f"{w} is not on arc {source.value} of ({r}, {alpha})", "artifacts")

    th = ts.theta
    ta = ts.theta_perp
    w_a = _dot(ta, w)
    w_t = _dot(th, w)
    sign = 1.0 if branch is ArtifactBranch.C1_TO_C2 else -1.0
    coef = sign * 2.0 / ts.s * w_a - w_t
    u = (-ta[0] * w_a + th[0] * coef, -ta[1] * w_a + th[1] * coef)
    if math.hypot(*u) <= 1e-14:
        raise GeometryError("degenerate covector: artifact direction vanishes", "artifacts")
    nu = _partner_scale(u, ts.center(source.partner))
    return (nu * u[0], nu * u[1])


@dataclass(frozen=True)
class ArtifactPoint:
    """
    A singularity, the section detecting it, and the artifact it produces.

    Attributes:
        source: The covector ``(w, xi)``
        r: Radius of the detecting section
        alpha: Rotation of the detecting section
        partner: Artifact location on the other arc
        branch: Which arc ``w`` sits on and where the artifact goes
    """

    source: Covector
    r: float
    alpha: float
    partner: Vec2
    branch: ArtifactBranch


def predict_artifacts(covector: Covector) -> List[ArtifactPoint]:
    """
    Artifacts of one covector, one per detecting section.

    The circle through ``w`` with normal ``xi`` is the ``C1`` circle of one
    section and the ``C2`` circle of its mirror; each is kept when ``w``
    also satisfies that arc's half-plane sign, so zero to two points come
    back.
    """
    w = covector.w
    xi = covector.xi_prime
    r = detecting_radius(w, xi)
    out = []
    for arc in (Arc.C1, Arc.C2):
        alpha = detecting_angle(w, xi, r, arc)
        ts = make_toric_section(r, alpha)
        if not ts.on_arc(w, arc, tol=ON_CIRCLE_TOL):
            continue
        branch = ArtifactBranch.from_source(arc)
        partner = map_artifact(w, r, alpha, branch)
        out.append(ArtifactPoint(covector, r, alpha, partner, branch))
    return out


@dataclass(frozen=True)
class ArtifactCurve:
    """
    Sampled artifact curve of a point singularity.

    Attributes:
        branch: ``C2->C1`` for ``psi1`` (artifacts on ``C1``), ``C1->C2`` for ``psi2``
        sample_alphas: Frame angles of the samples, before removal of degenerate ones
        alphas: World rotation angle of the section producing each point
        points: ``(k, 2)`` artifact locations
        valid: Mask over ``sample_alphas`` of the samples that produced a point
    """

    branch: ArtifactBranch
    sample_alphas: FloatArray
    alphas: FloatArray
    points: FloatArray
    valid: npt.NDArray[np.bool_]

    def __len__(self) -> int:
        return int(self.points.shape[0])


def _rotation(phi: float) -> FloatArray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]])


def _frame_curve(
    a: float, alphas: FloatArray, arc: Arc
) -> Tuple[FloatArray, npt.NDArray[np.bool_]]:
    """
    Artifact points for ``x = (-a, 0)`` at frame angles ``alphas``.

    ``arc`` is the arc the artifacts lie on: ``C1`` uses the direction
    ``(1 - (2/s) sin cos, -(2/s) sin^2)``, ``C2`` the mirrored one.
    """
    sin = np.sin(alphas)
    cos = np.cos(alphas)
    x_t = -a * cos
    x_ta = a * sin
    valid = np.abs(x_ta) > DEGENERATE_TOL
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.abs((3.0 - a * a + 2.0 * x_t) / (2.0 * x_ta))
    valid &= np.isfinite(s) & (s > DEGENERATE_TOL)
    s = np.where(valid, s, 1.0)

    sign = -1.0 if arc is Arc.C1 else 1.0
    dx = 1.0 + sign * (2.0 / s) * sin * cos
    dy = sign * (2.0 / s) * sin * sin
    # centre theta -+ s theta_a of the artifact arc
    cx = cos - sign * s * (-sin)
    cy = sin - sign * s * cos
    dd = dx * dx + dy * dy
    dc = dx * cx + dy * cy
    nu = (dc + np.sqrt(dc * dc + 3.0 * dd)) / dd
    px = nu * dx
    py = nu * dy
    side = px * (-sin) + py * cos
    valid &= (sign * side) > 0.0
    return np.stack([px, py], axis=1), valid


def delta_artifact_curves(
    x0: Vec2, n_samples: int = 180
) -> Tuple[ArtifactCurve, ArtifactCurve]:
    """
    Artifact curves ``psi1`` and ``psi2`` of a point singularity at ``x0``.

    ``psi1`` samples ``alpha = j pi / n`` and ``psi2`` samples
    ``alpha = -j pi / n``, ``j = 1..n``, in the frame where ``x0`` lies on
    the negative x axis.  Samples where ``s`` is undefined are dropped and
    show up as gaps.  ``psi1`` is the mirror image of ``psi2`` in the line
    through ``x0``.

    Raises:
        GeometryError: If ``x0`` is the origin
    """
    a = math.hypot(*x0)
    if a == 0.0:
        raise GeometryError("no toric sections go through the origin", "artifacts")
    if n_samples < 1:
        raise GeometryError(f"need at least one sample, got {n_samples}", "artifacts")
    if a >= 1.0:
        logger.warning("delta at radius %.4g lies outside the open unit ball", a)

    phi = math.atan2(x0[1], x0[0]) - math.pi
    rot = _rotation(phi)
    j = np.arange(1, n_samples + 1, dtype=np.float64)
    curves = []
    for arc, alphas in ((Arc.C1, j * math.pi / n_samples), (Arc.C2, -j * math.pi / n_samples)):
        pts, valid = _frame_curve(a, alphas, arc)
        world = pts[valid] @ rot.T
        curves.append(
            ArtifactCurve(
                branch=ArtifactBranch.from_source(arc.partner),
                sample_alphas=alphas,
                alphas=alphas[valid] + phi,
                points=world,
                valid=valid,
            )
        )
    logger.info(
        "artifact curves for x0 = (%.4g, %.4g): %d + %d points",
        x0[0],
        x0[1],
        len(curves[0]),
        len(curves[1]),
    )
    return curves[0], curves[1]


def reflect_across(points: FloatArray, direction: Vec2) -> FloatArray:
    """Mirror points in the line through the origin along ``direction``."""
    e = np.asarray(direction, dtype=np.float64)
    e = e / np.linalg.norm(e)
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    return 2.0 * np.outer(pts @ e, e) - pts


def ridge_mask(
    backprojection: Image,
    exclusion_center: Vec2,
    exclusion_radius: float,
    fraction: float = 0.5,
    band_px: float = RIDGE_BAND_PX,
    contrast: float = RIDGE_CONTRAST,
) -> npt.NDArray[np.bool_]:
    """
    Ridge pixels of a delta backprojection.

    Pixels outside the exclusion disk are grouped into rings of width
    ``band_px`` pixels about ``exclusion_center``.  A pixel is a ridge pixel
    when it reaches ``fraction`` of its ring's maximum and that maximum
    exceeds ``contrast`` times the median outside the exclusion disk.

    ``exclusion_center`` and ``exclusion_radius`` are in detector-ring units.
    Returns an ``(n, n)`` mask indexed ``[iy, ix]``.
    """
    grid = backprojection.grid
    xx, yy = grid.pixel_centers()
    dist = np.hypot(xx / grid.scale - exclusion_center[0], yy / grid.scale - exclusion_center[1])
    outside = dist > exclusion_radius
    if not outside.any():
        return np.zeros_like(outside)
    values = backprojection.as_array()

    pixel = grid.delta / grid.scale
    bands = np.floor(dist / (band_px * pixel)).astype(np.int64) + 1
    bands[~outside] = 0
    labels = np.unique(bands[outside])
    band_max = np.zeros(int(bands.max()) + 1)
    band_max[labels] = maximum(values, labels=bands, index=labels)
    peak = band_max[bands]

    floor = contrast * max(float(np.median(values[outside])), 0.0)
    return outside & (peak > floor) & (values >= fraction * peak)


def _points_to_pixels(
    grid: GridSpec, pts: FloatArray
) -> Tuple[IndexArray, IndexArray, npt.NDArray[np.bool_]]:
    """Pixel indices of unit-ball points and a mask of those inside the grid."""
    L, d, n = grid.half_extent, grid.delta, grid.n
    ix = np.floor((pts[:, 0] * grid.scale + L) / d).astype(np.int64)
    iy = np.floor((pts[:, 1] * grid.scale + L) / d).astype(np.int64)
    inside = (ix >= 0) & (ix < n) & (iy >= 0) & (iy < n)
    return ix, iy, inside


def overlay_score(
    predicted: Sequence[Vec2],
    backprojection: Image,
    exclusion_radius: float,
    exclusion_center: Vec2 = (0.0, 0.0),
    tolerance_px: float = 2.0,
    fraction: float = 0.5,
) -> float:
    """
    Fraction of predicted points lying within ``tolerance_px`` pixels of a ridge pixel.

    Ridge pixels come from :func:`ridge_mask`.  Only predicted points inside
    the grid and outside the disk of radius ``exclusion_radius`` about
    ``exclusion_center`` (the delta itself) are scored.  Distances are
    measured between pixel centres with a Euclidean distance transform.

    Raises:
        DimensionError: If no predicted point can be scored
    """
    pts = np.asarray(predicted, dtype=np.float64).reshape(-1, 2)
    grid = backprojection.grid
    ix, iy, scored = _points_to_pixels(grid, pts)
    near = np.hypot(pts[:, 0] - exclusion_center[0], pts[:, 1] - exclusion_center[1])
    scored &= near > exclusion_radius
    if not scored.any():
        raise DimensionError(
            "no predicted artifact points inside the grid and outside the exclusion disk",
            "artifacts",
        )
    ridges = ridge_mask(backprojection, exclusion_center, exclusion_radius, fraction)
    if not ridges.any():
        return 0.0
    distance = distance_transform_edt(~ridges)
    hits = distance[iy[scored], ix[scored]] <= tolerance_px
    return float(np.mean(hits))


def overlay_image(
    backprojection: Image, points: Sequence[Vec2], value: Optional[float] = None
) -> Image:
    """
    Copy of ``backprojection`` with predicted points burned in.

    Points are drawn at ``value`` (default: the image maximum); points
    outside the grid are ignored.
    """
    grid = backprojection.grid
    out = backprojection.as_array().copy()
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    ix, iy, inside = _points_to_pixels(grid, pts)
    mark = float(out.max()) if value is None else value
    out[iy[inside], ix[inside]] = mark
    return Image.from_array(grid, out)


def curve_points(curves: Sequence[ArtifactCurve]) -> FloatArray:
    """All points of several curves as one ``(k, 2)`` array."""
    if not curves:
        return np.zeros((0, 2))
    return np.concatenate([c.points for c in curves], axis=0)

