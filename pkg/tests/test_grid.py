"""
Tests for the pixel grid and arc rasterization.
"""

import math

import numpy as np
import pytest
from toric import Arc, DimensionError, GeometryError, GridSpec, Image, TraceMode
from toric import make_toric_section
from toric.grid import trace_arc, trace_arc_arrays, world_to_pixel


class TestGridSpec:
    """Tests for grid construction and coordinates."""

    def test_pixel_size(self):
        """Test delta = 2L/n."""
        assert GridSpec(200).delta == pytest.approx(0.01)
        assert GridSpec(200, 100.0).delta == pytest.approx(1.0)

    def test_invalid_grid_raises(self):
        """Test that empty grids and non-positive extents are rejected."""
        with pytest.raises(GeometryError):
            GridSpec(0)
        with pytest.raises(GeometryError):
            GridSpec(10, 0.0)

    def test_first_pixel(self):
        """Test the first pixel centre and its lookup."""
        grid = GridSpec(200)
        assert grid.pixel_center(0, 0) == pytest.approx((-0.995, -0.995))
        assert world_to_pixel(grid, (-0.995, -0.995)) == (0, 0)

    def test_outside_point(self):
        """Test that points off the grid map to None."""
        assert world_to_pixel(GridSpec(200), (1.5, 0.0)) is None

    def test_pixel_round_trip(self):
        """Test world_to_pixel(pixel_center(i, j)) == (i, j)."""
        grid = GridSpec(17, 3.0)
        for ix, iy in [(0, 0), (16, 3), (8, 8), (5, 16)]:
            assert world_to_pixel(grid, grid.pixel_center(ix, iy)) == (ix, iy)

    def test_pixel_centers_layout(self):
        """Test that pixel_centers arrays are indexed [iy, ix]."""
        grid = GridSpec(4)
        xx, yy = grid.pixel_centers()
        assert (xx[1, 2], yy[1, 2]) == pytest.approx(grid.pixel_center(2, 1))
        assert grid.flat_index(2, 1) == 6


class TestImage:
    """Tests for the image container."""

    def test_wrong_size_raises(self):
        """Test that the value count must match the grid."""
        with pytest.raises(DimensionError):
            Image(GridSpec(4), np.zeros(15))

    def test_from_array_layout(self):
        """Test that from_array keeps [iy, ix] indexing."""
        grid = GridSpec(3)
        arr = np.arange(9.0).reshape(3, 3)
        image = Image.from_array(grid, arr)
        assert image.values[grid.flat_index(2, 1)] == arr[1, 2]
        np.testing.assert_array_equal(image.as_array(), arr)

    def test_relative_error(self):
        """Test ||a - b|| / ||b||."""
        grid = GridSpec(2)
        ref = Image(grid, np.array([1.0, 0.0, 0.0, 0.0]))
        other = Image(grid, np.array([1.5, 0.0, 0.0, 0.0]))
        assert other.relative_error(ref) == pytest.approx(0.5)


class TestTraceArc:
    """Tests for tracing one arc through the grid."""

    def test_binary_weights_are_one_and_unique(self):
        """Test binary traces: weights 1, strictly increasing indices."""
        grid = GridSpec(64)
        ts = make_toric_section(2.6, 0.7)
        for which in (Arc.C1, Arc.C2):
            idx, w = trace_arc_arrays(grid, ts, which, TraceMode.BINARY)
            assert idx.size > 0
            assert np.all(w == 1.0)
            assert np.all(np.diff(idx) > 0)

    def test_length_mode_matches_sampling(self):
        """Test total length-mode weight against a fine sampling of the arc."""
        grid = GridSpec(64)
        ts = make_toric_section(2.5, 0.3)
        for which in (Arc.C1, Arc.C2):
            _, w = trace_arc_arrays(grid, ts, which, TraceMode.LENGTH)
            start, span = ts.arc_interval(which)
            cx, cy = ts.center(which)
            beta = start + (np.arange(100_000) + 0.5) * span / 100_000
            x = cx + ts.r * np.cos(beta)
            y = cy + ts.r * np.sin(beta)
            inside = (np.abs(x) < 1.0) & (np.abs(y) < 1.0)
            expected = ts.r * span * inside.mean()
            assert w.sum() == pytest.approx(expected, rel=1e-3)

    def test_length_weights_bounded_by_pixel_diagonal(self):
        """Test that no pixel holds more arc than a slightly bent diagonal."""
        grid = GridSpec(40)
        ts = make_toric_section(3.3, 2.2)
        _, w = trace_arc_arrays(grid, ts, Arc.C1, TraceMode.LENGTH)
        assert np.all(w > 0.0)
        assert w.max() <= math.sqrt(2.0) * grid.delta * 1.01

    def test_world_scaling(self):
        """Test that lengths scale with the half extent."""
        ts = make_toric_section(2.9, 1.3)
        _, w1 = trace_arc_arrays(GridSpec(50, 1.0), ts, Arc.C2, TraceMode.LENGTH)
        _, w100 = trace_arc_arrays(GridSpec(50, 100.0), ts, Arc.C2, TraceMode.LENGTH)
        assert w100.sum() == pytest.approx(100.0 * w1.sum(), rel=1e-9)

    def test_list_form(self):
        """Test that trace_arc returns (index, weight) pairs."""
        grid = GridSpec(16)
        ts = make_toric_section(2.4, 0.0)
        pairs = trace_arc(grid, ts, Arc.C1, TraceMode.BINARY)
        idx, _ = trace_arc_arrays(grid, ts, Arc.C1, TraceMode.BINARY)
        assert [i for i, _ in pairs] == idx.tolist()
        assert all(isinstance(i, int) and w == 1.0 for i, w in pairs)

    def test_deterministic(self):
        """Test identical output on repeated calls."""
        grid = GridSpec(48)
        ts = make_toric_section(5.0, 4.0)
        a = trace_arc_arrays(grid, ts, Arc.C2, TraceMode.LENGTH)
        b = trace_arc_arrays(grid, ts, Arc.C2, TraceMode.LENGTH)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])
