"""
Discrete toric section transform.

Row ``k`` of the operator is the rasterized toric section ``k`` of a
:class:`~toric.sinogram.ScanGeometry` (both arcs, pixels hit by both arcs
stored once with summed weight); columns are pixels of a
:class:`~toric.grid.GridSpec`.  Storage is CSR via :mod:`scipy.sparse`.
"""

import hashlib
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp

from .enums import Arc, BinaryScale, TraceMode
from .errors import DimensionError
from .grid import GridSpec, Image, trace_arc_arrays
from .sinogram import ScanGeometry, Sinogram

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
VectorLike = Union[FloatArray, Image, Sinogram, Sequence[float]]

# Rows per assembly task.
ASSEMBLY_BLOCK_ROWS = 2048


@dataclass(eq=False)
class SparseOperator:
    """
    Row-compressed matrix ``A`` realizing the discrete transform.

    Attributes:
        matrix: CSR matrix of shape ``(n_rows, n_cols)`` with sorted,
            duplicate-free column indices and nonnegative weights
        mode: Trace mode the rows were built with
    """

    matrix: sp.csr_matrix
    mode: TraceMode = TraceMode.BINARY

    def __post_init__(self) -> None:
        self.matrix = sp.csr_matrix(self.matrix, dtype=np.float64)
        self.matrix.sort_indices()
        self.mode = TraceMode(self.mode)

    @property
    def n_rows(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def n_cols(self) -> int:
        return int(self.matrix.shape[1])

    @property
    def nnz(self) -> int:
        return int(self.matrix.nnz)

    @property
    def offsets(self) -> npt.NDArray[np.int64]:
        return self.matrix.indptr.astype(np.int64)

    @property
    def indices(self) -> npt.NDArray[np.int64]:
        return self.matrix.indices.astype(np.int64)

    @property
    def weights(self) -> FloatArray:
        return self.matrix.data

    def row(self, k: int) -> Tuple[npt.NDArray[np.int64], FloatArray]:
        """Column indices and weights of row ``k``."""
        lo, hi = self.matrix.indptr[k], self.matrix.indptr[k + 1]
        return self.matrix.indices[lo:hi].astype(np.int64), self.matrix.data[lo:hi]

    def scaled(self, factor: float) -> "SparseOperator":
        """Copy with every weight multiplied by ``factor``."""
        return SparseOperator(self.matrix * factor, self.mode)

    def __matmul__(self, v: VectorLike) -> FloatArray:
        return apply(self, v)


def _as_vector(v: VectorLike, size: int, what: str) -> FloatArray:
    values = v.values if isinstance(v, (Image, Sinogram)) else v
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size != size:
        raise DimensionError(f"{what} has length {arr.size}, operator expects {size}", "operator")
    return arr


def apply(A: SparseOperator, v: VectorLike) -> FloatArray:
    """
    Forward product ``A v``.

    Raises:
        DimensionError: If ``v`` does not have ``n_cols`` entries
    """
    return np.asarray(A.matrix @ _as_vector(v, A.n_cols, "image vector"))


def apply_transpose(A: SparseOperator, b: VectorLike) -> FloatArray:
    """
    Backprojection ``A^T b``.

    Raises:
        DimensionError: If ``b`` does not have ``n_rows`` entries
    """
    return np.asarray(A.matrix.T @ _as_vector(b, A.n_rows, "sinogram vector"))


def backproject_normal(A: SparseOperator, v: VectorLike) -> FloatArray:
    """Normal operator ``A^T A v``."""
    return apply_transpose(A, apply(A, v))


def _assemble_row(
    grid: GridSpec, geom: ScanGeometry, row: int, mode: TraceMode
) -> Tuple[npt.NDArray[np.int64], FloatArray]:
    ts = geom.toric_section(row)
    idx1, w1 = trace_arc_arrays(grid, ts, Arc.C1, mode)
    idx2, w2 = trace_arc_arrays(grid, ts, Arc.C2, mode)
    idx, inverse = np.unique(np.concatenate([idx1, idx2]), return_inverse=True)
    weights = np.bincount(inverse, weights=np.concatenate([w1, w2]), minlength=idx.size)
    return idx, weights


def _assemble_block(
    grid: GridSpec, geom: ScanGeometry, rows: range, mode: TraceMode
) -> Tuple[npt.NDArray[np.int64], npt.NDArray[np.int64], FloatArray]:
    counts = np.zeros(len(rows), dtype=np.int64)
    idx_parts: List[npt.NDArray[np.int64]] = []
    w_parts: List[FloatArray] = []
    for i, row in enumerate(rows):
        idx, w = _assemble_row(grid, geom, row, mode)
        counts[i] = idx.size
        idx_parts.append(idx)
        w_parts.append(w)
    if idx_parts:
        return counts, np.concatenate(idx_parts), np.concatenate(w_parts)
    return counts, np.zeros(0, dtype=np.int64), np.zeros(0)


def assemble(
    grid: GridSpec,
    geom: ScanGeometry,
    mode: TraceMode = TraceMode.BINARY,
    workers: Optional[int] = None,
) -> SparseOperator:
    """
    Assemble the discrete toric section transform.

    Rows are traced in parallel blocks and merged in row order, so the
    result does not depend on ``workers``.

    Args:
        grid: Pixel grid (columns)
        geom: Scan lattice (rows)
        mode: Binary or length-weighted rows
        workers: Thread count; defaults to the CPU count

    Returns:
        The assembled operator
    """
    mode = TraceMode(mode)
    blocks = [
        range(lo, min(lo + ASSEMBLY_BLOCK_ROWS, geom.n_rows))
        for lo in range(0, geom.n_rows, ASSEMBLY_BLOCK_ROWS)
    ]
    workers = workers or os.cpu_count() or 1
    logger.info(
        "assembling %s operator: %d rows x %d columns, %d blocks, %d workers",
        mode.value,
        geom.n_rows,
        grid.size,
        len(blocks),
        workers,
    )
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda rows: _assemble_block(grid, geom, rows, mode), blocks))

    counts = np.concatenate([p[0] for p in parts])
    indptr = np.zeros(geom.n_rows + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    indices = np.concatenate([p[1] for p in parts])
    data = np.concatenate([p[2] for p in parts])
    matrix = sp.csr_matrix((data, indices, indptr), shape=(geom.n_rows, grid.size))
    logger.info("assembled operator with %d nonzeros", matrix.nnz)
    return SparseOperator(matrix, mode)


def binary_scale_factor(grid: GridSpec, scale: BinaryScale) -> float:
    """
    Weight factor turning binary rows into approximate arc lengths.

    ``pixel`` multiplies by the pixel size, ``chord`` by the mean chord
    ``pi * delta / 4`` of a pixel crossed by a curve.
    """
    scale = BinaryScale(scale)
    if scale is BinaryScale.PIXEL:
        return grid.delta
    if scale is BinaryScale.CHORD:
        return 0.25 * math.pi * grid.delta
    return 1.0


def operator_key(grid: GridSpec, geom: ScanGeometry, mode: TraceMode) -> str:
    """Cache key of an operator built from ``(grid, geom, mode)``."""
    h = hashlib.sha256()
    h.update(f"{grid.n}|{grid.half_extent!r}|{TraceMode(mode).value}|".encode())
    h.update(geom.fingerprint().encode())
    return h.hexdigest()[:24]


class OperatorCache:
    """
    Directory of assembled operators in TORMAT v1 files.

    Attributes:
        directory: Folder holding ``<key>.tormat`` files
    """

    def __init__(self, directory: str) -> None:
        self.directory = directory

    def path_for(self, grid: GridSpec, geom: ScanGeometry, mode: TraceMode) -> str:
        return os.path.join(self.directory, f"{operator_key(grid, geom, mode)}.tormat")

    def get(
        self,
        grid: GridSpec,
        geom: ScanGeometry,
        mode: TraceMode = TraceMode.BINARY,
        workers: Optional[int] = None,
    ) -> SparseOperator:
        """
        Load the operator for ``(grid, geom, mode)``, assembling and storing it on a miss.
        """
        from .export import read_operator, write_operator

        path = self.path_for(grid, geom, mode)
        if os.path.exists(path):
            logger.info("operator cache hit: %s", path)
            return read_operator(path)
        logger.info("operator cache miss: %s", path)
        A = assemble(grid, geom, mode, workers)
        os.makedirs(self.directory, exist_ok=True)
        write_operator(A, path)
        return A
