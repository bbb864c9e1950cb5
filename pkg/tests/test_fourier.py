"""
Tests for the Fourier-side consistency checks.
"""

import math

import numpy as np
import pytest
from toric import (
    DiskSpec,
    DimensionError,
    GeometryError,
    GridSpec,
    ScanGeometry,
    Sinogram,
    analytic_sinogram,
    render,
)
from toric.fourier import (
    PolarCoeffSeries,
    abel_chebyshev_rhs,
    chebyshev_self_test,
    consistency_check,
    consistency_report,
    image_as_function,
    inner_radius,
    polar_fourier_image,
    sinogram_fourier,
    tilde_transform,
)
from toric.phantoms import Disk, gaussian_bumps
from toric.sinogram import standard_alphas


def _axis_geometry(ts, n_alpha):
    radii = [math.sqrt(t * t + 3.0) for t in ts]
    return ScanGeometry(alphas=standard_alphas(n_alpha), radii=radii)


class TestChebyshev:
    """Tests for the Chebyshev identity used by the right-hand side."""

    def test_self_test(self):
        """Test T_n(cos v) = cos(n v)."""
        assert chebyshev_self_test(10) < 1e-12


class TestPolarCoefficients:
    """Tests for polar Fourier coefficients of images."""

    def test_radial_function(self):
        """Test that a radial function has only order 0."""
        rho = np.linspace(0.0, 1.0, 11)
        f = lambda x, y: np.exp(-(x * x + y * y))  # noqa: E731
        f0 = polar_fourier_image(f, 0, rho, 64)
        f2 = polar_fourier_image(f, 2, rho, 64)
        np.testing.assert_allclose(f0.values.real, np.exp(-rho * rho), atol=1e-12)
        np.testing.assert_allclose(f2.values, 0.0, atol=1e-12)

    def test_first_order(self):
        """Test F_1 = F_-1 = rho / 2 for f = x."""
        rho = np.linspace(0.0, 1.0, 5)
        f = lambda x, y: x  # noqa: E731
        for l in (1, -1):
            series = polar_fourier_image(f, l, rho, 64)
            np.testing.assert_allclose(series.values, rho / 2, atol=1e-12)

    def test_too_few_samples(self):
        """Test that n_angular must resolve the order."""
        with pytest.raises(DimensionError):
            polar_fourier_image(lambda x, y: x, 5, [0.5], 40)

    def test_series_interpolation(self):
        """Test linear interpolation and zero outside the range."""
        series = PolarCoeffSeries(0, [1.0, 2.0], [1.0, 3.0 + 2.0j])
        assert series(1.5) == pytest.approx(2.0 + 1.0j)
        assert series(0.5) == 0.0
        assert series(2.5) == 0.0

    def test_series_validation(self):
        """Test matching lengths and increasing abscissae."""
        with pytest.raises(DimensionError):
            PolarCoeffSeries(0, [1.0, 2.0], [1.0])
        with pytest.raises(DimensionError):
            PolarCoeffSeries(0, [2.0, 1.0], [1.0, 1.0])

    def test_image_interpolant(self):
        """Test that the bilinear interpolant hits pixel centres."""
        grid = GridSpec(8)
        image = render(gaussian_bumps([(0.1, 0.0, 0.3, 1.0)]), grid)
        f = image_as_function(image)
        x, y = grid.pixel_center(3, 5)
        assert f(x, y) == pytest.approx(image.as_array()[5, 3])
        assert f(3.0, 0.0) == 0.0


class TestTildeTransform:
    """Tests for the u substitution."""

    def test_inner_radius(self):
        """Test rho(u) = sqrt(u^2 + 3) - u."""
        assert inner_radius(1.0) == pytest.approx(1.0)
        assert inner_radius(0.0) == pytest.approx(math.sqrt(3.0))

    def test_weight_at_unit_circle(self):
        """Test the weight 1/2 at u = 1."""
        series = tilde_transform(lambda rho: np.ones_like(rho, dtype=complex), [1.0, 2.0])
        assert series.values[0] == pytest.approx(0.5)
        assert series.values[1] == pytest.approx(1.0 - 2.0 / math.sqrt(7.0))


class TestAbelRHS:
    """Tests for the Chebyshev-weighted Abel integral."""

    def test_constant_profile(self):
        """Test closed forms for F~ = 1."""
        one = lambda u: np.ones_like(u, dtype=complex)  # noqa: E731
        assert abel_chebyshev_rhs(one, 0, 2.0) == pytest.approx(math.pi / 3)
        assert abel_chebyshev_rhs(one, 1, 2.0) == pytest.approx(0.5 * math.sin(math.pi / 3))
        assert abel_chebyshev_rhs(one, -1, 2.0) == abel_chebyshev_rhs(one, 1, 2.0)

    def test_needs_t_above_one(self):
        """Test the t > 1 requirement."""
        with pytest.raises(GeometryError):
            abel_chebyshev_rhs(lambda u: u, 0, 1.0)


class TestSinogramFourier:
    """Tests for Fourier coefficients of data."""

    def test_constant_rows(self):
        """Test order 0 equals the row value and order 1 vanishes."""
        geom = _axis_geometry([1.5, 2.5], 32)
        values = np.repeat([[2.0], [5.0]], 32, axis=1)
        sino = Sinogram(geom, values)
        zero = sinogram_fourier(sino, 0)
        np.testing.assert_allclose(zero.abscissae, [1.5, 2.5])
        np.testing.assert_allclose(zero.values, [2.0, 5.0])
        np.testing.assert_allclose(sinogram_fourier(sino, 1).values, 0.0, atol=1e-12)

    def test_abscissae_sorted(self):
        """Test that t comes out increasing for decreasing radii."""
        geom = _axis_geometry([3.0, 1.5], 16)
        series = sinogram_fourier(Sinogram(geom, np.zeros(32)), 0)
        np.testing.assert_allclose(series.abscissae, [1.5, 3.0])

    def test_non_uniform_angles(self):
        """Test GeometryError for a partial turn."""
        geom = ScanGeometry(alphas=[0.1, 0.2, 0.3], radii=[3.0])
        with pytest.raises(GeometryError):
            sinogram_fourier(Sinogram(geom, np.zeros(3)), 0)


class TestIdentityOnExactData:
    """Tests of the identity against closed-form disk integrals."""

    def test_unit_disk(self):
        """Test order 0 for the indicator of the unit disk."""
        ts = [1.25, 2.0, 3.0]
        geom = _axis_geometry(ts, 16)
        sino = analytic_sinogram(geom, [DiskSpec((0.0, 0.0), 1.0)])
        lhs = sinogram_fourier(sino, 0).values / (4.0 * np.sqrt(np.array(ts) ** 2 + 3.0))

        def f_tilde(u):
            return (1.0 - u / np.sqrt(u * u + 3.0)).astype(complex)

        rhs = [abel_chebyshev_rhs(f_tilde, 0, t) for t in ts]
        np.testing.assert_allclose(lhs, rhs, rtol=1e-6)

    def test_off_centre_disk_first_order(self):
        """Test order 1 for an off-centre disk."""
        ts = [1.5, 2.5]
        radii = np.sqrt(np.array(ts) ** 2 + 3.0)
        geom = _axis_geometry(ts, 720)
        sino = analytic_sinogram(geom, [DiskSpec((0.3, 0.1), 0.25)])
        lhs = -sinogram_fourier(sino, 1).values / (4.0 * radii)

        disk = Disk((0.3, 0.1), 0.25)
        f_1 = polar_fourier_image(disk.evaluate, 1, np.linspace(0.0, 1.0, 2001), 4096)

        def f_tilde(u):
            return (1.0 - u / np.sqrt(u * u + 3.0)) * f_1(inner_radius(u))

        rhs = np.array([abel_chebyshev_rhs(f_tilde, 1, t) for t in ts])
        scale = np.max(np.abs(rhs))
        assert scale > 0.0
        assert np.max(np.abs(lhs - rhs)) / scale < 1e-2


class TestConsistencyReport:
    """Tests for the discrete consistency check."""

    @pytest.fixture
    def bumps_image(self):
        spec = gaussian_bumps([(0.2, -0.1, 0.15, 1.0), (-0.3, 0.25, 0.1, 0.5)])
        return render(spec, GridSpec(96))

    def test_smooth_image_is_consistent(self, bumps_image):
        """Test small mismatches for a smooth image."""
        report = consistency_report(bumps_image, [0, 1, 2], [1.5, 2.0, 3.0], workers=2)
        assert len(report.rows) == 9
        assert {row.order for row in report.rows} == {0, 1, 2}
        assert report.max_mismatch < 0.1

    def test_check_returns_max_mismatch(self, bumps_image):
        """Test that consistency_check reduces the report."""
        report = consistency_report(bumps_image, [0, 1], [2.0, 3.0])
        assert consistency_check(bumps_image, [0, 1], [2.0, 3.0]) == pytest.approx(
            report.max_mismatch
        )

    def test_mismatch_scaled_by_order_maximum(self, bumps_image):
        """Test that each row is scaled by the largest |rhs| of its order."""
        report = consistency_report(bumps_image, [0, 1], [1.5, 2.0, 3.0])
        for l in (0, 1):
            rows = [row for row in report.rows if row.order == l]
            scale = max(abs(row.rhs) for row in rows)
            for row in rows:
                assert row.mismatch == pytest.approx(abs(row.lhs - row.rhs) / scale)

    def test_invalid_inputs(self, bumps_image):
        """Test errors for bad t values and too few angles."""
        with pytest.raises(GeometryError):
            consistency_report(bumps_image, [0], [])
        with pytest.raises(GeometryError):
            consistency_report(bumps_image, [0], [1.0, 2.0])
        with pytest.raises(DimensionError):
            consistency_report(bumps_image, [10], [2.0], n_alpha=50)
