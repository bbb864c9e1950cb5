"""
Regularized least-squares reconstruction.

Three methods minimize ``||A v - b||^2 + lambda^2 G(v)``:

- ``landweber``: projected gradient steps, ``G = 0``; the iteration count
  regularizes.
- ``cgls``: conjugate gradient least squares on the stacked system
  ``(A; lambda I) v = (b; 0)``, i.e. Tikhonov ``G(v) = ||v||^2``.
- ``htv``: smoothed isotropic total variation
  ``G(v) = sum sqrt(|grad v|^2 + tau^2)`` by lagged diffusivity.  Each outer
  step freezes the weights ``w = 1/sqrt(|grad v_k|^2 + tau^2)`` and runs
  warm-started CGLS on ``(A; lambda/sqrt(2) W^1/2 D) v = (b; 0)``, which
  minimizes a quadratic majorizer of the objective.  The step to the
  (optionally projected) inner solution is backtracked so the objective
  never increases.

All methods start from ``v0 = 0`` unless an initial iterate is given.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from .enums import SolverMethod
from .errors import ConfigError, ConvergenceError, DimensionError
from .grid import GridSpec, Image
from .operator import SparseOperator
from .phantoms import Region, region_mask
from .sinogram import Sinogram

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
OperatorLike = Union[SparseOperator, sp.spmatrix, FloatArray, LinearOperator]

DEFAULT_ITERS = {
    SolverMethod.LANDWEBER: 500,
    SolverMethod.CGLS: 100,
    SolverMethod.HTV: 15,
}
LANDWEBER_SAFETY = 1.8
DIVERGENCE_STREAK = 5
TAU_FRACTION = 1e-3
MAX_BACKTRACKS = 30


@dataclass(frozen=True)
class SolverConfig:
    """
    Solver settings.

    Attributes:
        method: Reconstruction method
        lam: Regularization weight lambda (>= 0; > 0 for htv)
        max_iters: Iteration cap (outer iterations for htv); ``None`` picks
            500 / 100 / 15 for landweber / cgls / htv
        inner_iters: CGLS iterations per htv outer step
        rel_tol: Stopping tolerance on the relative decrease of the
            residual (landweber), the normal-equation residual (cgls) or the
            objective (htv)
        nonneg: Project iterates onto ``v >= 0``
        tv_tau: TV smoothing; ``None`` uses ``1e-3 * max |v_bp|`` with
            ``v_bp`` the least-squares scaled backprojection of ``b``
        step: Landweber step; ``None`` uses ``1.8 / sigma_max^2``
        power_iters: Power iterations for the ``sigma_max`` estimate
    """

    method: SolverMethod = SolverMethod.CGLS
    lam: float = 0.0
    max_iters: Optional[int] = None
    inner_iters: int = 30
    rel_tol: float = 1e-6
    nonneg: bool = False
    tv_tau: Optional[float] = None
    step: Optional[float] = None
    power_iters: int = 30

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", SolverMethod(self.method))
        if not self.lam >= 0.0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}", "solvers")
        if self.tv_tau is not None and not self.tv_tau > 0.0:
            raise ConfigError(f"tv_tau must be > 0, got {self.tv_tau}", "solvers")
        if self.step is not None and not self.step > 0.0:
            raise ConfigError(f"step must be > 0, got {self.step}", "solvers")
        if self.max_iters is not None and self.max_iters < 1:
            raise ConfigError(f"iteration cap must be positive, got {self.max_iters}", "solvers")
        if self.inner_iters < 1:
            raise ConfigError(
                f"inner iterations must be positive, got {self.inner_iters}", "solvers"
            )
        if not self.rel_tol >= 0.0:
            raise ConfigError(f"rel_tol must be >= 0, got {self.rel_tol}", "solvers")

    @property
    def iterations(self) -> int:
        return self.max_iters if self.max_iters is not None else DEFAULT_ITERS[self.method]


@dataclass
class ReconResult:
    """
    Output of a reconstruction.

    Attributes:
        values: Reconstructed pixel vector
        residual_history: ``||A v_k - b||_2`` after each iteration
        objective_history: Objective value after each iteration
        iterations_used: Number of iterations run
        stop_reason: ``max_iters``, ``rel_tol``, ``converged``, ``breakdown`` or ``stalled``
        grid: Grid of the image, when known
    """

    values: FloatArray
    residual_history: List[float] = field(default_factory=list)
    objective_history: List[float] = field(default_factory=list)
    iterations_used: int = 0
    stop_reason: str = "max_iters"
    grid: Optional[GridSpec] = None

    @property
    def breakdown(self) -> bool:
        return self.stop_reason == "breakdown"

    @property
    def image(self) -> Image:
        if self.grid is None:
            raise DimensionError("reconstruction was run without a grid", "solvers")
        return Image(self.grid, self.values)


def _linear_operator(A: OperatorLike) -> LinearOperator:
    if isinstance(A, SparseOperator):
        return aslinearoperator(A.matrix)
    return aslinearoperator(A)


def _rhs(b: Union[Sinogram, FloatArray, Sequence[float]], n_rows: int) -> FloatArray:
    values = b.values if isinstance(b, Sinogram) else b
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size != n_rows:
        raise DimensionError(f"data has length {arr.size}, operator has {n_rows} rows", "solvers")
    return arr


def _start(x0: Optional[npt.ArrayLike], n: int) -> FloatArray:
    if x0 is None:
        return np.zeros(n)
    v = np.array(x0, dtype=np.float64).ravel()
    if v.size != n:
        raise DimensionError(
            f"initial iterate has length {v.size}, operator has {n} columns", "solvers"
        )
    return v


def power_norm(A: OperatorLike, iters: int = 30) -> float:
    """
    Estimate of the largest singular value of ``A``.

    Runs ``iters`` power iterations on ``A^T A`` from the all-ones vector.
    """
    op = _linear_operator(A)
    x = np.full(op.shape[1], 1.0 / math.sqrt(op.shape[1]))
    sigma2 = 0.0
    for _ in range(iters):
        y = op.rmatvec(op.matvec(x))
        sigma2 = float(np.linalg.norm(y))
        if sigma2 == 0.0:
            return 0.0
        x = y / sigma2
    return math.sqrt(sigma2)


def landweber(
    A: OperatorLike,
    b: Union[Sinogram, FloatArray],
    config: SolverConfig = SolverConfig(method=SolverMethod.LANDWEBER),
    grid: Optional[GridSpec] = None,
    x0: Optional[npt.ArrayLike] = None,
) -> ReconResult:
    """
    Projected Landweber iteration ``v <- P(v + omega A^T (b - A v))``.

    Stops after ``config.iterations`` steps or when the residual changes by
    less than ``rel_tol`` relative.

    Raises:
        ConvergenceError: If the residual grows 5 iterations in a row
    """
    op = _linear_operator(A)
    rhs = _rhs(b, op.shape[0])
    v = _start(x0, op.shape[1])
    if config.nonneg:
        np.maximum(v, 0.0, out=v)

    omega = config.step
    if omega is None:
        sigma = power_norm(op, config.power_iters)
        if sigma == 0.0:
            raise ConvergenceError("operator is zero, no Landweber step exists")
        omega = LANDWEBER_SAFETY / sigma**2
    logger.info("landweber: step %.4g, up to %d iterations", omega, config.iterations)

    r = rhs - op.matvec(v)
    res = float(np.linalg.norm(r))
    result = ReconResult(values=v, grid=grid)
    streak = 0
    for k in range(config.iterations):
        if res == 0.0:
            result.stop_reason = "converged"
            break
        v = v + omega * op.rmatvec(r)
        if config.nonneg:
            np.maximum(v, 0.0, out=v)
        r = rhs - op.matvec(v)
        res_new = float(np.linalg.norm(r))
        result.residual_history.append(res_new)
        result.objective_history.append(res_new * res_new)
        result.iterations_used = k + 1
        if logger.isEnabledFor(logging.DEBUG):
            logger.debug("landweber %d: |residual| = %.6g", k + 1, res_new)

        streak = streak + 1 if res_new > res else 0
        if streak >= DIVERGENCE_STREAK or not math.isfinite(res_new):
            raise ConvergenceError(
                f"landweber diverged at iteration {k + 1} (step {omega:.4g} too large)",
                trace=result.residual_history,
            )
        if abs(res - res_new) <= config.rel_tol * res:
            res = res_new
            result.stop_reason = "rel_tol"
            break
        res = res_new

    result.values = v
    logger.info(
        "landweber: %d iterations, |residual| = %.6g (%s)",
        result.iterations_used,
        res,
        result.stop_reason,
    )
    return result


def _stack(op: LinearOperator, reg: Optional[LinearOperator]) -> LinearOperator:
    """``(A; L)`` as one operator."""
    if reg is None:
        return op
    m = op.shape[0]

    def matvec(x: FloatArray) -> FloatArray:
        return np.concatenate([op.matvec(x), reg.matvec(x)])

    def rmatvec(y: FloatArray) -> FloatArray:
        return op.rmatvec(y[:m]) + reg.rmatvec(y[m:])

    return LinearOperator(
        shape=(m + reg.shape[0], op.shape[1]), matvec=matvec, rmatvec=rmatvec, dtype=np.float64
    )


@dataclass
class _CGLSState:
    x: FloatArray
    data_residuals: List[float]
    augmented: List[float]
    stop_reason: str


def _cgls(
    K: LinearOperator,
    rhs: FloatArray,
    n_data: int,
    x0: FloatArray,
    iters: int,
    rel_tol: float,
    on_iteration: Optional[Callable[[int, float, float], None]] = None,
) -> _CGLSState:
    """
    CGLS for ``min ||K x - rhs||``, warm-started at ``x0``.

    ``n_data`` leading rows of ``K`` are the data rows; their residual norm
    is tracked separately from the full (augmented) residual.
    """
    x = x0.copy()
    r = rhs - K.matvec(x)
    s = K.rmatvec(r)
    p = s.copy()
    gamma = float(s @ s)
    gamma0 = gamma
    state = _CGLSState(x, [], [], "max_iters")
    for k in range(iters):
        if gamma == 0.0 or gamma <= rel_tol * rel_tol * gamma0:
            state.stop_reason = "converged" if gamma == 0.0 else "rel_tol"
            break
        q = K.matvec(p)
        delta = float(q @ q)
        if not delta > 0.0 or not math.isfinite(delta):
            state.stop_reason = "breakdown"
            break
        alpha = gamma / delta
        x += alpha * p
        r -= alpha * q
        s = K.rmatvec(r)
        gamma_new = float(s @ s)
        p = s + (gamma_new / gamma) * p
        gamma = gamma_new

        data_res = float(np.linalg.norm(r[:n_data]))
        aug = float(r @ r)
        state.data_residuals.append(data_res)
        state.augmented.append(aug)
        if on_iteration is not None:
            on_iteration(k + 1, data_res, aug)
    state.x = x
    return state


def cgls_tikhonov(
    A: OperatorLike,
    b: Union[Sinogram, FloatArray],
    config: SolverConfig = SolverConfig(),
    grid: Optional[GridSpec] = None,
    x0: Optional[npt.ArrayLike] = None,
) -> ReconResult:
    """
    CGLS with Tikhonov regularization, minimizing ``||A v - b||^2 + lambda^2 ||v||^2``.

    The objective history is the squared augmented residual, which CGLS
    never increases.  A zero-curvature step ends the run early with
    ``stop_reason == "breakdown"``.  With ``nonneg`` the final iterate is
    clipped at zero.
    """
    op = _linear_operator(A)
    rhs = _rhs(b, op.shape[0])
    n = op.shape[1]
    reg = None
    if config.lam > 0.0:
        lam = config.lam
        reg = LinearOperator(
            (n, n), matvec=lambda x: lam * x, rmatvec=lambda y: lam * y, dtype=np.float64
        )
    K = _stack(op, reg)
    stacked_rhs = np.concatenate([rhs, np.zeros(K.shape[0] - rhs.size)])

    def trace(k: int, data_res: float, aug: float) -> None:
        if logger.isEnabledFor(logging.DEBUG):
            logger.debug("cgls %d: |residual| = %.6g, objective = %.6g", k, data_res, aug)

    state = _cgls(K, stacked_rhs, rhs.size, _start(x0, n), config.iterations, config.rel_tol, trace)
    values = np.maximum(state.x, 0.0) if config.nonneg else state.x
    result = ReconResult(
        values=values,
        residual_history=state.data_residuals,
        objective_history=state.augmented,
        iterations_used=len(state.data_residuals),
        stop_reason=state.stop_reason,
        grid=grid,
    )
    logger.info(
        "cgls (lambda %.4g): %d iterations (%s)",
        config.lam,
        result.iterations_used,
        result.stop_reason,
    )
    return result


def gradient_operator(n: int) -> Tuple[sp.csr_matrix, sp.csr_matrix]:
    """
    Forward differences on an ``n x n`` image with reflexive boundary.

    Images are flat row-major by ``iy`` then ``ix``; returns ``(Dx, Dy)``
    acting along ``ix`` and ``iy``.  The last difference in each direction
    is zero.
    """
    d1 = sp.diags([-np.ones(n), np.ones(n - 1)], [0, 1], shape=(n, n), format="lil")
    d1[n - 1, n - 1] = 0.0
    d1 = d1.tocsr()
    eye = sp.identity(n, format="csr")
    return sp.kron(eye, d1, format="csr"), sp.kron(d1, eye, format="csr")


def tv_value(v: FloatArray, Dx: sp.csr_matrix, Dy: sp.csr_matrix, tau: float) -> float:
    """Smoothed isotropic total variation ``sum sqrt(|grad v|^2 + tau^2)``."""
    gx = Dx @ v
    gy = Dy @ v
    return float(np.sum(np.sqrt(gx * gx + gy * gy + tau * tau)))


def _grid_side(n_cols: int, grid: Optional[GridSpec]) -> int:
    if grid is not None:
        if grid.size != n_cols:
            raise DimensionError(
                f"grid has {grid.size} pixels, operator has {n_cols} columns", "solvers"
            )
        return grid.n
    side = math.isqrt(n_cols)
    if side * side != n_cols:
        raise DimensionError(f"TV needs a square image, operator has {n_cols} columns", "solvers")
    return side


def default_tau(A: OperatorLike, b: Union[Sinogram, FloatArray]) -> float:
    """``1e-3 * max |v_bp|`` with ``v_bp = c A^T b`` scaled to best fit ``b``."""
    op = _linear_operator(A)
    rhs = _rhs(b, op.shape[0])
    bp = op.rmatvec(rhs)
    abp = op.matvec(bp)
    denom = float(abp @ abp)
    if denom == 0.0:
        return TAU_FRACTION
    scale = float(bp @ bp) / denom
    peak = float(np.max(np.abs(bp))) * scale
    return TAU_FRACTION * peak if peak > 0.0 else TAU_FRACTION


def htv(
    A: OperatorLike,
    b: Union[Sinogram, FloatArray],
    config: SolverConfig,
    grid: Optional[GridSpec] = None,
    x0: Optional[npt.ArrayLike] = None,
) -> ReconResult:
    """
    Heuristic total-variation reconstruction with optional non-negativity.

    Minimizes ``||A v - b||^2 + lambda^2 sum sqrt(|grad v|^2 + tau^2)``.
    The objective history is non-increasing.

    Raises:
        ConfigError: If ``lambda`` is not positive
        ConvergenceError: If an inner solve produces non-finite values or breaks down
    """
    if not config.lam > 0.0:
        raise ConfigError("heuristic TV needs a positive lambda", "solvers")
    op = _linear_operator(A)
    rhs = _rhs(b, op.shape[0])
    n_cols = op.shape[1]
    side = _grid_side(n_cols, grid)
    Dx, Dy = gradient_operator(side)
    tau = config.tv_tau if config.tv_tau is not None else default_tau(op, rhs)
    lam2 = config.lam * config.lam
    c = config.lam / math.sqrt(2.0)

    def objective(v: FloatArray) -> Tuple[float, float]:
        res = float(np.linalg.norm(op.matvec(v) - rhs))
        return res, res * res + lam2 * tv_value(v, Dx, Dy, tau)

    v = _start(x0, n_cols)
    if config.nonneg:
        np.maximum(v, 0.0, out=v)
    _, obj = objective(v)
    logger.info(
        "htv: lambda %.4g, tau %.4g, %d outer iterations", config.lam, tau, config.iterations
    )

    result = ReconResult(values=v, grid=grid)
    for k in range(config.iterations):
        gx = Dx @ v
        gy = Dy @ v
        root_w = (gx * gx + gy * gy + tau * tau) ** -0.25
        wdx = sp.diags(c * root_w) @ Dx
        wdy = sp.diags(c * root_w) @ Dy
        reg = aslinearoperator(sp.vstack([wdx, wdy], format="csr"))
        K = _stack(op, reg)
        stacked_rhs = np.concatenate([rhs, np.zeros(reg.shape[0])])

        inner = _cgls(K, stacked_rhs, rhs.size, v, config.inner_iters, 0.0)
        if inner.stop_reason == "breakdown" or not np.all(np.isfinite(inner.x)):
            raise ConvergenceError(
                f"htv inner solve failed at outer iteration {k + 1} ({inner.stop_reason})",
                trace=result.objective_history,
            )
        target = np.maximum(inner.x, 0.0) if config.nonneg else inner.x

        t = 1.0
        accepted = None
        for _ in range(MAX_BACKTRACKS):
            trial = v + t * (target - v)
            res_trial, obj_trial = objective(trial)
            if obj_trial <= obj:
                accepted = (trial, res_trial, obj_trial)
                break
            t *= 0.5
        if accepted is None:
            res_now, _ = objective(v)
            result.residual_history.append(res_now)
            result.objective_history.append(obj)
            result.iterations_used = k + 1
            result.stop_reason = "stalled"
            break

        v_new, res_new, obj_new = accepted
        result.residual_history.append(res_new)
        result.objective_history.append(obj_new)
        result.iterations_used = k + 1
        if logger.isEnabledFor(logging.DEBUG):
            logger.debug(
                "htv %d: |residual| = %.6g, objective = %.6g, step %.3g, inner %d",
                k + 1,
                res_new,
                obj_new,
                t,
                len(inner.data_residuals),
            )
        decrease = obj - obj_new
        v, obj = v_new, obj_new
        if decrease <= config.rel_tol * abs(obj):
            result.stop_reason = "rel_tol"
            break

    result.values = v
    logger.info(
        "htv: %d outer iterations, objective %.6g (%s)",
        result.iterations_used,
        obj,
        result.stop_reason,
    )
    return result


def reconstruct(
    A: OperatorLike,
    b: Union[Sinogram, FloatArray],
    config: SolverConfig,
    grid: Optional[GridSpec] = None,
    x0: Optional[npt.ArrayLike] = None,
) -> ReconResult:
    """Run the method named by ``config.method``."""
    solver = {
        SolverMethod.LANDWEBER: landweber,
        SolverMethod.CGLS: cgls_tikhonov,
        SolverMethod.HTV: htv,
    }[config.method]
    return solver(A, b, config, grid, x0)


def lambda_sweep(
    A: OperatorLike,
    b: Union[Sinogram, FloatArray],
    config: SolverConfig,
    lambdas: Sequence[float],
    grid: Optional[GridSpec] = None,
) -> List[Tuple[float, float, float]]:
    """
    Solve for each lambda and report ``(lambda, ||A v - b||, ||v||)``.

    The triples trace the L-curve used to pick lambda by hand.
    """
    op = _linear_operator(A)
    rhs = _rhs(b, op.shape[0])
    out = []
    for lam in lambdas:
        result = reconstruct(op, rhs, replace(config, lam=float(lam)), grid)
        residual = float(np.linalg.norm(op.matvec(result.values) - rhs))
        out.append((float(lam), residual, float(np.linalg.norm(result.values))))
        logger.info("lambda %.4g: |residual| = %.6g, |v| = %.6g", *out[-1])
    return out


def region_metrics(
    image: Union[Image, FloatArray], region_mask: npt.ArrayLike, true_value: float
) -> Tuple[float, float]:
    """
    Region average and its percentage error.

    Returns:
        ``(avg, 100 * |avg - true_value| / true_value)``

    Raises:
        DimensionError: If the mask is empty or does not match the image
    """
    if isinstance(image, Image):
        values = image.values
    else:
        values = np.asarray(image, dtype=np.float64).ravel()
    mask = np.asarray(region_mask, dtype=bool).ravel()
    if mask.size != values.size:
        raise DimensionError(f"mask has {mask.size} entries, image has {values.size}", "solvers")
    if not mask.any():
        raise DimensionError("region mask is empty", "solvers")
    if true_value == 0.0:
        raise DimensionError("relative region error needs a nonzero true value", "solvers")
    avg = float(values[mask].mean())
    return avg, 100.0 * abs(avg - true_value) / abs(true_value)


def phantom_region_metrics(
    image: Image, regions: Sequence[Region]
) -> Dict[str, Tuple[float, float]]:
    """``region_metrics`` for every metric region of a phantom, keyed by region name."""
    return {
        region.name: region_metrics(image, region_mask(region, image.grid), region.true_value)
        for region in regions
    }
