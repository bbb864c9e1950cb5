"""
Read and write toric-py file formats.

Text formats ``TORIMG v1`` (images) and ``TORSIN v1`` (sinograms), the
binary ``TORMAT v1`` operator format, CSV tables and optional grayscale
PNG previews.  Every writer can prepend a provenance line
``# toric-py <version> config=<hash>``; readers skip lines starting with
``#``.  See ``schemas/README.md`` for the layouts.
"""

import csv
import logging
from typing import IO, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp

try:
    import matplotlib.image as mpimg
except ImportError:
    mpimg = None  # type: ignore

from .enums import TraceMode
from .errors import FormatError
from .grid import GridSpec, Image
from .operator import SparseOperator
from .sinogram import ScanGeometry, Sinogram

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

IMAGE_MAGIC = "TORIMG"
SINOGRAM_MAGIC = "TORSIN"
OPERATOR_MAGIC = "TORMAT"
FORMAT_VERSION = "v1"

# Shortest decimal form that round-trips a double.
_FLOAT_FMT = ".17g"


def provenance_line(config_hash: Optional[str] = None) -> str:
    """Header comment naming the tool version and, if given, the config hash."""
    from . import __version__

    line = f"# toric-py {__version__}"
    if config_hash:
        line += f" config={config_hash[:12]}"
    return line


def _format_values(values: Iterable[float]) -> str:
    return " ".join(format(float(v), _FLOAT_FMT) for v in values)


def _content_lines(text: str) -> List[str]:
    return [line for line in text.splitlines() if line.strip() and not line.startswith("#")]


def _parse_header(line: str, magic: str, n_fields: int, path: str) -> List[str]:
    parts = line.split()
    if len(parts) != n_fields + 2 or parts[0] != magic:
        raise FormatError(
            f"{path}: expected '{magic} {FORMAT_VERSION}' header, got '{line}'", "export"
        )
    if parts[1] != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported {magic} version '{parts[1]}'", "export")
    return parts[2:]


def _parse_floats(tokens: Sequence[str], path: str) -> FloatArray:
    try:
        return np.array([float(tok) for tok in tokens], dtype=np.float64)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}", "export") from exc


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as f:
        return f.read()


# Images


def write_image(image: Image, path: str, config_hash: Optional[str] = None) -> None:
    """
    Write an image as ``TORIMG v1``: header ``TORIMG v1 <n> <L>`` then one line per pixel row.

    Args:
        image: Image to write
        path: Output file path
        config_hash: Config hash for the provenance line
    """
    grid = image.grid
    rows = image.as_array()
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(provenance_line(config_hash) + "\n")
        f.write(
            f"{IMAGE_MAGIC} {FORMAT_VERSION} {grid.n} {format(grid.half_extent, _FLOAT_FMT)}\n"
        )
        for row in rows:
            f.write(_format_values(row) + "\n")
    logger.info("wrote %dx%d image to %s", grid.n, grid.n, path)


def read_image(path: str) -> Image:
    """
    Read a ``TORIMG v1`` file.

    Raises:
        FormatError: On a malformed header or a wrong number of values
    """
    lines = _content_lines(_read_text(path))
    if not lines:
        raise FormatError(f"{path}: empty image file", "export")
    n_text, l_text = _parse_header(lines[0], IMAGE_MAGIC, 2, path)
    try:
        grid = GridSpec(int(n_text), float(l_text))
    except ValueError as exc:
        raise FormatError(f"{path}: bad grid in header: {exc}", "export") from exc
    values = _parse_floats(" ".join(lines[1:]).split(), path)
    if values.size != grid.size:
        raise FormatError(f"{path}: expected {grid.size} values, found {values.size}", "export")
    return Image(grid, values)


def to_grayscale(image: Image) -> npt.NDArray[np.uint8]:
    """Min-max scale an image to ``uint8``; a constant image maps to 0."""
    arr = image.as_array()
    lo, hi = float(arr.min()), float(arr.max())
    if hi <= lo:
        return np.zeros(arr.shape, dtype=np.uint8)
    return np.round(255.0 * (arr - lo) / (hi - lo)).astype(np.uint8)


def png_available() -> bool:
    return mpimg is not None


def write_png(image: Image, path: str) -> None:
    """
    Save an 8-bit grayscale preview with ``y`` pointing up.

    Raises:
        ImportError: If matplotlib is not installed
    """
    if mpimg is None:
        raise ImportError(
            "The 'matplotlib' library is required for PNG export. "
            "Install it with: pip install toric-py[plot]"
        )
    mpimg.imsave(path, to_grayscale(image), cmap="gray", vmin=0, vmax=255, origin="lower")
    logger.info("wrote PNG preview to %s", path)


# Sinograms


def write_sinogram(sino: Sinogram, path: str, config_hash: Optional[str] = None) -> None:
    """
    Write ``TORSIN v1``: header, radii line (unit-ball units), alphas line, one line per radius.
    """
    geom = sino.geom
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(provenance_line(config_hash) + "\n")
        f.write(f"{SINOGRAM_MAGIC} {FORMAT_VERSION} {geom.n_radii} {geom.n_alpha}\n")
        f.write(_format_values(geom.unit_radii) + "\n")
        f.write(_format_values(geom.alphas) + "\n")
        for row in sino.as_array():
            f.write(_format_values(row) + "\n")
    logger.info("wrote %dx%d sinogram to %s", geom.n_radii, geom.n_alpha, path)


def read_sinogram(path: str) -> Sinogram:
    """
    Read a ``TORSIN v1`` file.

    Raises:
        FormatError: On a malformed header or wrong value counts
    """
    lines = _content_lines(_read_text(path))
    if len(lines) < 3:
        raise FormatError(
            f"{path}: sinogram needs a header, a radii line and an alphas line", "export"
        )
    nr_text, na_text = _parse_header(lines[0], SINOGRAM_MAGIC, 2, path)
    try:
        n_r, n_a = int(nr_text), int(na_text)
    except ValueError as exc:
        raise FormatError(f"{path}: bad sizes in header: {exc}", "export") from exc
    radii = _parse_floats(lines[1].split(), path)
    alphas = _parse_floats(lines[2].split(), path)
    if radii.size != n_r or alphas.size != n_a:
        raise FormatError(
            f"{path}: header declares {n_r} radii and {n_a} angles, "
            f"found {radii.size} and {alphas.size}",
            "export",
        )
    values = _parse_floats(" ".join(lines[3:]).split(), path)
    if values.size != n_r * n_a:
        raise FormatError(f"{path}: expected {n_r * n_a} values, found {values.size}", "export")
    return Sinogram(ScanGeometry(alphas=alphas, radii=radii), values)


# Operators


def write_operator(A: SparseOperator, path: str, config_hash: Optional[str] = None) -> None:
    """
    Write ``TORMAT v1``: text header then little-endian row offsets, column indices, weights.

    Offsets and indices are unsigned 64-bit, weights IEEE doubles.
    """
    header = (
        f"{OPERATOR_MAGIC} {FORMAT_VERSION} {A.n_rows} {A.n_cols} {A.nnz} "
        f"{TraceMode(A.mode).value}\n"
    )
    with open(path, "wb") as f:
        f.write((provenance_line(config_hash) + "\n").encode("utf-8"))
        f.write(header.encode("utf-8"))
        f.write(A.offsets.astype("<u8").tobytes())
        f.write(A.indices.astype("<u8").tobytes())
        f.write(A.weights.astype("<f8").tobytes())
    logger.info("wrote %d x %d operator (nnz %d) to %s", A.n_rows, A.n_cols, A.nnz, path)


def _read_header_line(f: IO[bytes], path: str) -> str:
    while True:
        raw = f.readline()
        if not raw:
            raise FormatError(f"{path}: missing {OPERATOR_MAGIC} header", "export")
        line = raw.decode("utf-8", errors="replace").strip()
        if line and not line.startswith("#"):
            return line


def read_operator(path: str) -> SparseOperator:
    """
    Read a ``TORMAT v1`` file.

    Raises:
        FormatError: On a malformed header, truncated arrays or inconsistent offsets
    """
    with open(path, "rb") as f:
        line = _read_header_line(f, path)
        fields = _parse_header(line, OPERATOR_MAGIC, 4, path)
        try:
            n_rows, n_cols, nnz = (int(x) for x in fields[:3])
            mode = TraceMode(fields[3])
        except ValueError as exc:
            raise FormatError(f"{path}: bad operator header '{line}': {exc}", "export") from exc
        payload = f.read()

    expected = 8 * (n_rows + 1) + 16 * nnz
    if len(payload) != expected:
        raise FormatError(
            f"{path}: expected {expected} payload bytes, found {len(payload)}", "export"
        )
    offsets = np.frombuffer(payload, dtype="<u8", count=n_rows + 1)
    indices = np.frombuffer(payload, dtype="<u8", count=nnz, offset=8 * (n_rows + 1))
    weights = np.frombuffer(payload, dtype="<f8", count=nnz, offset=8 * (n_rows + 1 + nnz))
    if offsets[0] != 0 or offsets[-1] != nnz or np.any(np.diff(offsets.astype(np.int64)) < 0):
        raise FormatError(f"{path}: row offsets are inconsistent with nnz {nnz}", "export")
    if nnz and int(indices.max()) >= n_cols:
        raise FormatError(f"{path}: column index out of range for {n_cols} columns", "export")
    matrix = sp.csr_matrix(
        (weights.astype(np.float64), indices.astype(np.int64), offsets.astype(np.int64)),
        shape=(n_rows, n_cols),
    )
    return SparseOperator(matrix, mode)


# CSV tables


def _write_csv(
    path: str,
    header: Sequence[str],
    rows: Iterable[Sequence[object]],
    config_hash: Optional[str] = None,
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(provenance_line(config_hash) + "\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x: float) -> str:
    return format(float(x), _FLOAT_FMT)


def write_artifact_csv(
    rows: Iterable[Tuple[float, float, float, str]],
    path: str,
    config_hash: Optional[str] = None,
) -> None:
    """Artifact points as ``alpha,x,y,branch``."""
    _write_csv(
        path,
        ("alpha", "x", "y", "branch"),
        ((_fmt(a), _fmt(x), _fmt(y), str(b)) for a, x, y, b in rows),
        config_hash,
    )


def write_residual_csv(
    residuals: Sequence[float],
    objectives: Sequence[float],
    path: str,
    config_hash: Optional[str] = None,
) -> None:
    """Solver history as ``iteration,residual,objective``; missing objectives stay empty."""
    rows = []
    for k, res in enumerate(residuals):
        obj = _fmt(objectives[k]) if k < len(objectives) else ""
        rows.append((k, _fmt(res), obj))
    _write_csv(path, ("iteration", "residual", "objective"), rows, config_hash)


def write_metrics_csv(
    metrics: Mapping[str, float], path: str, config_hash: Optional[str] = None
) -> None:
    """Scalar metrics as ``name,value`` in insertion order."""
    _write_csv(
        path, ("name", "value"), ((k, _fmt(v)) for k, v in metrics.items()), config_hash
    )


def read_csv(path: str) -> List[dict]:
    """Rows of a toric-py CSV as dicts of strings, skipping the provenance line."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        lines = [line for line in f if not line.startswith("#")]
    return list(csv.DictReader(lines))


def write_fourier_csv(
    rows: Iterable[Tuple[int, float, complex, complex, float]],
    path: str,
    config_hash: Optional[str] = None,
) -> None:
    """Fourier consistency rows as ``l,t,lhs_re,lhs_im,rhs_re,rhs_im,mismatch``."""
    _write_csv(
        path,
        ("l", "t", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "mismatch"),
        (
            (l, _fmt(t), _fmt(lhs.real), _fmt(lhs.imag), _fmt(rhs.real), _fmt(rhs.imag), _fmt(m))
            for l, t, lhs, rhs, m in rows
        ),
        config_hash,
    )
