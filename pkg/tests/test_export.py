"""
Tests for the file formats.
"""

import numpy as np
import pytest
from toric import FormatError, GridSpec, Image, Sinogram, reduced_scan_geometry
from toric import __version__
import toric.export as export
from toric.enums import TraceMode
from toric.export import (
    provenance_line,
    read_csv,
    read_image,
    read_operator,
    read_sinogram,
    to_grayscale,
    write_artifact_csv,
    write_fourier_csv,
    write_image,
    write_metrics_csv,
    write_operator,
    write_png,
    write_residual_csv,
    write_sinogram,
)


@pytest.fixture
def ramp_image():
    """A 6 x 6 image with distinct, non-representable values."""
    grid = GridSpec(6, 2.5)
    return Image(grid, np.arange(36) / 7.0 - 1.0)


@pytest.fixture
def small_sinogram(rng):
    """Random values on a 10 x 3 lattice."""
    geom = reduced_scan_geometry(10, 3)
    return Sinogram(geom, rng.standard_normal(geom.n_rows))


class TestProvenance:
    """Tests for the provenance header."""

    def test_with_hash(self):
        """Test version and truncated hash."""
        line = provenance_line("0123456789abcdef0123")
        assert line == f"# toric-py {__version__} config=0123456789ab"

    def test_without_hash(self):
        """Test the bare version line."""
        assert provenance_line() == f"# toric-py {__version__}"


class TestImageFormat:
    """Tests for TORIMG v1."""

    def test_round_trip_is_exact(self, ramp_image, tmp_path):
        """Test bit-exact values and grid after writing and reading."""
        path = str(tmp_path / "a.torimg")
        write_image(ramp_image, path, "deadbeef")
        back = read_image(path)
        assert back.grid == ramp_image.grid
        np.testing.assert_array_equal(back.values, ramp_image.values)

    def test_missing_directory_not_created(self, ramp_image, tmp_path):
        """Test that writers leave directory creation to the caller."""
        with pytest.raises(OSError):
            write_image(ramp_image, str(tmp_path / "missing" / "a.torimg"))
        assert not (tmp_path / "missing").exists()

    def test_layout(self, ramp_image, tmp_path):
        """Test provenance, header and one line per row."""
        path = tmp_path / "a.torimg"
        write_image(ramp_image, str(path), "deadbeef")
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# toric-py")
        assert "config=deadbeef" in lines[0]
        assert lines[1] == "TORIMG v1 6 2.5"
        assert len(lines) == 2 + 6
        assert len(lines[2].split()) == 6

    @pytest.mark.parametrize(
        "text, fragment",
        [
            ("", "empty"),
            ("TORSIN v1 2 1\n1 2 3 4\n", "header"),
            ("TORIMG v2 2 1\n1 2 3 4\n", "version"),
            ("TORIMG v1 2 1\n1 2 3\n", "expected 4 values"),
            ("TORIMG v1 2 1\n1 2 x 4\n", "could not convert"),
            ("TORIMG v1 0 1\n\n", "bad grid"),
        ],
    )
    def test_malformed(self, tmp_path, text, fragment):
        """Test FormatError on broken files."""
        path = tmp_path / "bad.torimg"
        path.write_text(text)
        with pytest.raises(FormatError, match=fragment):
            read_image(str(path))

    def test_comments_skipped(self, tmp_path):
        """Test that comment lines anywhere are ignored."""
        path = tmp_path / "c.torimg"
        path.write_text("# a\nTORIMG v1 2 1\n# b\n1 2\n3 4\n")
        np.testing.assert_array_equal(read_image(str(path)).values, [1, 2, 3, 4])


class TestSinogramFormat:
    """Tests for TORSIN v1."""

    def test_round_trip(self, small_sinogram, tmp_path):
        """Test exact radii, angles and values."""
        path = str(tmp_path / "s.torsin")
        write_sinogram(small_sinogram, path)
        back = read_sinogram(path)
        np.testing.assert_array_equal(back.geom.radii, small_sinogram.geom.unit_radii)
        np.testing.assert_array_equal(back.geom.alphas, small_sinogram.geom.alphas)
        np.testing.assert_array_equal(back.values, small_sinogram.values)

    def test_layout(self, small_sinogram, tmp_path):
        """Test header, lattice lines and one row per radius."""
        path = tmp_path / "s.torsin"
        write_sinogram(small_sinogram, str(path))
        lines = path.read_text().splitlines()
        assert lines[1] == "TORSIN v1 3 10"
        assert len(lines[2].split()) == 3
        assert len(lines[3].split()) == 10
        assert len(lines) == 4 + 3

    def test_count_mismatch(self, tmp_path):
        """Test FormatError when the header and lattice lines disagree."""
        path = tmp_path / "s.torsin"
        path.write_text("TORSIN v1 2 2\n2.5\n0 1\n1 2\n3 4\n")
        with pytest.raises(FormatError, match="declares 2 radii"):
            read_sinogram(str(path))

    def test_missing_lines(self, tmp_path):
        """Test FormatError for a truncated file."""
        path = tmp_path / "s.torsin"
        path.write_text("TORSIN v1 1 1\n2.5\n")
        with pytest.raises(FormatError, match="radii line"):
            read_sinogram(str(path))

    def test_radius_inside_ring(self, tmp_path):
        """Test that radii <= 2 are rejected by the geometry."""
        path = tmp_path / "s.torsin"
        path.write_text("TORSIN v1 1 1\n1.5\n0\n7\n")
        with pytest.raises(ValueError):
            read_sinogram(str(path))


class TestOperatorFormat:
    """Tests for TORMAT v1."""

    def test_round_trip(self, binary_operator, tmp_path):
        """Test identical sparsity, weights and mode."""
        path = str(tmp_path / "a.tormat")
        write_operator(binary_operator, path, "cafe")
        back = read_operator(path)
        assert back.mode is TraceMode.BINARY
        assert (back.n_rows, back.n_cols, back.nnz) == (
            binary_operator.n_rows,
            binary_operator.n_cols,
            binary_operator.nnz,
        )
        np.testing.assert_array_equal(back.offsets, binary_operator.offsets)
        np.testing.assert_array_equal(back.indices, binary_operator.indices)
        np.testing.assert_array_equal(back.weights, binary_operator.weights)

    def test_length_mode_kept(self, length_operator, tmp_path):
        """Test that the trace mode survives."""
        path = str(tmp_path / "l.tormat")
        write_operator(length_operator, path)
        assert read_operator(path).mode is TraceMode.LENGTH

    def test_truncated_payload(self, binary_operator, tmp_path):
        """Test FormatError when bytes are missing."""
        path = tmp_path / "a.tormat"
        write_operator(binary_operator, str(path))
        data = path.read_bytes()
        path.write_bytes(data[:-8])
        with pytest.raises(FormatError, match="payload bytes"):
            read_operator(str(path))

    def test_bad_header(self, tmp_path):
        """Test FormatError on a wrong magic and a missing header."""
        path = tmp_path / "a.tormat"
        path.write_bytes(b"TORIMG v1 1 1 0 binary\n")
        with pytest.raises(FormatError, match="header"):
            read_operator(str(path))
        path.write_bytes(b"# only a comment\n")
        with pytest.raises(FormatError, match="missing"):
            read_operator(str(path))

    def test_bad_offsets(self, tmp_path):
        """Test FormatError when offsets do not end at nnz."""
        path = tmp_path / "a.tormat"
        payload = np.array([0, 2], dtype="<u8").tobytes()
        payload += np.array([0], dtype="<u8").tobytes() + np.array([1.0], dtype="<f8").tobytes()
        path.write_bytes(b"TORMAT v1 1 4 1 binary\n" + payload)
        with pytest.raises(FormatError, match="inconsistent"):
            read_operator(str(path))

    def test_column_out_of_range(self, tmp_path):
        """Test FormatError for an index past the last column."""
        path = tmp_path / "a.tormat"
        payload = np.array([0, 1], dtype="<u8").tobytes()
        payload += np.array([4], dtype="<u8").tobytes() + np.array([1.0], dtype="<f8").tobytes()
        path.write_bytes(b"TORMAT v1 1 4 1 binary\n" + payload)
        with pytest.raises(FormatError, match="out of range"):
            read_operator(str(path))


class TestCsv:
    """Tests for CSV tables."""

    def test_artifacts(self, tmp_path):
        """Test columns and branch labels."""
        path = str(tmp_path / "a.csv")
        write_artifact_csv([(0.5, 0.1, -0.2, "C1->C2")], path, "abc")
        (row,) = read_csv(path)
        assert row["branch"] == "C1->C2"
        assert [float(row[k]) for k in ("alpha", "x", "y")] == [0.5, 0.1, -0.2]

    def test_residuals_with_short_objective(self, tmp_path):
        """Test empty objective cells when fewer objectives were recorded."""
        path = str(tmp_path / "r.csv")
        write_residual_csv([3.0, 2.0, 1.0], [9.0], path)
        rows = read_csv(path)
        assert [r["iteration"] for r in rows] == ["0", "1", "2"]
        assert rows[0]["objective"] == "9"
        assert rows[2]["objective"] == ""

    def test_metrics_order(self, tmp_path):
        """Test insertion order of metric names."""
        path = str(tmp_path / "m.csv")
        write_metrics_csv({"b": 1.0, "a": 0.25}, path)
        assert [(r["name"], float(r["value"])) for r in read_csv(path)] == [("b", 1.0), ("a", 0.25)]

    def test_fourier_rows(self, tmp_path):
        """Test real and imaginary columns."""
        path = str(tmp_path / "f.csv")
        write_fourier_csv([(2, 1.5, 1 + 2j, 1 - 2j, 0.01)], path)
        row = read_csv(path)[0]
        assert row["l"] == "2"
        assert float(row["lhs_im"]) == 2.0
        assert float(row["rhs_im"]) == -2.0

    def test_provenance_first(self, tmp_path):
        """Test that the provenance line precedes the header row."""
        path = tmp_path / "m.csv"
        write_metrics_csv({"x": 1.0}, str(path), "feedface")
        first, second = path.read_text().splitlines()[:2]
        assert first.startswith("# toric-py") and first.endswith("config=feedface")
        assert second == "name,value"


class TestPng:
    """Tests for grayscale previews."""

    def test_grayscale_range(self, ramp_image):
        """Test min-max scaling to 0..255."""
        gray = to_grayscale(ramp_image)
        assert gray.dtype == np.uint8
        assert gray.min() == 0 and gray.max() == 255

    def test_constant_image(self):
        """Test that a constant image maps to zero."""
        gray = to_grayscale(Image(GridSpec(3), np.full(9, 4.0)))
        assert not gray.any()

    def test_missing_matplotlib(self, ramp_image, tmp_path, monkeypatch):
        """Test the ImportError naming the optional extra."""
        monkeypatch.setattr(export, "mpimg", None)
        with pytest.raises(ImportError, match=r"toric-py\[plot\]"):
            write_png(ramp_image, str(tmp_path / "a.png"))

    def test_write_png(self, ramp_image, tmp_path):
        """Test that a PNG file is produced when matplotlib is present."""
        pytest.importorskip("matplotlib")
        path = tmp_path / "a.png"
        write_png(ramp_image, str(path))
        assert path.read_bytes()[:4] == b"\x89PNG"
