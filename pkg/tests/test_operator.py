"""
Tests for operator assembly, application and caching.
"""

import os

import numpy as np
import pytest
from toric import (
    Arc,
    BinaryScale,
    DimensionError,
    GridSpec,
    Image,
    OperatorCache,
    TraceMode,
    apply,
    apply_transpose,
    assemble,
    reduced_scan_geometry,
)
from toric.grid import trace_arc_arrays
from toric.operator import backproject_normal, binary_scale_factor, operator_key


class TestAssembly:
    """Tests for building the sparse operator."""

    def test_shape(self, binary_operator, small_grid, tiny_geom):
        """Test rows = lattice size and columns = pixels."""
        assert binary_operator.n_rows == tiny_geom.n_rows
        assert binary_operator.n_cols == small_grid.size
        assert binary_operator.nnz == binary_operator.weights.size

    def test_binary_weights(self, binary_operator):
        """Test that binary weights are 1, or 2 where both arcs share a pixel."""
        assert set(np.unique(binary_operator.weights)) <= {1.0, 2.0}

    def test_rows_are_sorted_unique(self, length_operator):
        """Test strictly increasing column indices in every row."""
        for k in range(length_operator.n_rows):
            idx, w = length_operator.row(k)
            assert np.all(np.diff(idx) > 0)
            assert np.all(w > 0.0)

    def test_row_is_union_of_arcs(self, small_grid, tiny_geom, length_operator):
        """Test that a row holds the summed weights of its two arcs."""
        k = tiny_geom.row_index(5, 7)
        ts = tiny_geom.toric_section(k)
        total = sum(
            trace_arc_arrays(small_grid, ts, which, TraceMode.LENGTH)[1].sum()
            for which in (Arc.C1, Arc.C2)
        )
        assert length_operator.row(k)[1].sum() == pytest.approx(total)

    def test_deterministic_across_workers(self, small_grid, tiny_geom):
        """Test that thread count does not change the operator."""
        a = assemble(small_grid, tiny_geom, TraceMode.LENGTH, workers=1)
        b = assemble(small_grid, tiny_geom, TraceMode.LENGTH, workers=4)
        np.testing.assert_array_equal(a.offsets, b.offsets)
        np.testing.assert_array_equal(a.indices, b.indices)
        np.testing.assert_array_equal(a.weights, b.weights)

    def test_every_row_hits_the_grid(self, binary_operator):
        """Test that every toric section starts at the detector inside the grid."""
        assert np.all(np.diff(binary_operator.offsets) > 0)


class TestApply:
    """Tests for forward and transpose products."""

    def test_adjoint_identity(self, length_operator, rng):
        """Test <A u, v> = <u, A^T v> on random vectors."""
        A = length_operator
        for _ in range(5):
            u = rng.standard_normal(A.n_cols)
            v = rng.standard_normal(A.n_rows)
            lhs = float(np.dot(apply(A, u), v))
            rhs = float(np.dot(u, apply_transpose(A, v)))
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-10)

    def test_constant_image_gives_row_sums(self, length_operator):
        """Test that A 1 equals the row sums."""
        ones = np.ones(length_operator.n_cols)
        expected = np.asarray(length_operator.matrix.sum(axis=1)).ravel()
        np.testing.assert_allclose(apply(length_operator, ones), expected)

    def test_accepts_image(self, binary_operator, small_grid):
        """Test that Image arguments and the @ operator are accepted."""
        image = Image(small_grid, np.ones(small_grid.size))
        np.testing.assert_array_equal(binary_operator @ image, apply(binary_operator, image.values))

    def test_dimension_mismatch(self, binary_operator):
        """Test DimensionError on wrong vector sizes."""
        with pytest.raises(DimensionError):
            apply(binary_operator, np.zeros(binary_operator.n_cols + 1))
        with pytest.raises(DimensionError):
            apply_transpose(binary_operator, np.zeros(3))

    def test_normal_operator_is_positive(self, length_operator, rng):
        """Test <A^T A u, u> >= 0."""
        u = rng.standard_normal(length_operator.n_cols)
        assert float(np.dot(backproject_normal(length_operator, u), u)) >= 0.0


class TestBinaryScale:
    """Tests for binary weight scaling."""

    def test_factors(self):
        """Test the pixel and chord factors."""
        grid = GridSpec(200)
        assert binary_scale_factor(grid, BinaryScale.NONE) == 1.0
        assert binary_scale_factor(grid, BinaryScale.PIXEL) == pytest.approx(0.01)
        assert binary_scale_factor(grid, BinaryScale.CHORD) == pytest.approx(np.pi * 0.01 / 4)

    def test_scaled_operator(self, binary_operator):
        """Test that scaling multiplies every weight."""
        scaled = binary_operator.scaled(0.5)
        np.testing.assert_allclose(scaled.weights, 0.5 * binary_operator.weights)
        assert scaled.mode is TraceMode.BINARY


class TestOperatorCache:
    """Tests for the on-disk operator cache."""

    def test_key_depends_on_inputs(self, small_grid, tiny_geom):
        """Test that grid, lattice and mode all enter the key."""
        base = operator_key(small_grid, tiny_geom, TraceMode.BINARY)
        assert base != operator_key(small_grid, tiny_geom, TraceMode.LENGTH)
        assert base != operator_key(GridSpec(33), tiny_geom, TraceMode.BINARY)
        assert base != operator_key(small_grid, reduced_scan_geometry(36, 11), TraceMode.BINARY)
        assert base == operator_key(GridSpec(32), reduced_scan_geometry(36, 12), TraceMode.BINARY)

    def test_miss_then_hit(self, tmp_path, small_grid, tiny_geom):
        """Test that a miss writes a file and a hit reads back the same matrix."""
        cache = OperatorCache(str(tmp_path / "ops"))
        path = cache.path_for(small_grid, tiny_geom, TraceMode.LENGTH)
        assert not os.path.exists(path)

        first = cache.get(small_grid, tiny_geom, TraceMode.LENGTH, workers=2)
        assert os.path.exists(path)
        mtime = os.path.getmtime(path)

        second = cache.get(small_grid, tiny_geom, TraceMode.LENGTH, workers=2)
        assert os.path.getmtime(path) == mtime
        assert second.mode is TraceMode.LENGTH
        np.testing.assert_array_equal(first.offsets, second.offsets)
        np.testing.assert_array_equal(first.indices, second.indices)
        np.testing.assert_array_equal(first.weights, second.weights)
