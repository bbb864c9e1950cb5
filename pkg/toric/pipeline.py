"""
End-to-end experiment runs.

``run_pipeline`` renders the phantom, builds (or loads) the operator,
simulates data, adds noise, reconstructs and writes every artifact with
a provenance header.  Outputs are staged in a temporary directory next to
``output_dir`` and moved into place only when the whole run succeeded.
"""

import logging
import math
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from .analytic import analytic_sinogram
from .artifacts import curve_points, delta_artifact_curves, overlay_image, overlay_score
from .config import ExperimentConfig
from .enums import DataSource, PhantomVariant, TraceMode
from .errors import ConfigError
from .export import (
    png_available,
    provenance_line,
    write_artifact_csv,
    write_image,
    write_metrics_csv,
    write_png,
    write_residual_csv,
    write_sinogram,
)
from .grid import Image
from .noise import GENERATOR_NAME, add_noise
from .operator import (
    OperatorCache,
    SparseOperator,
    apply,
    assemble,
    backproject_normal,
    binary_scale_factor,
)
from .phantoms import render
from .sinogram import Sinogram
from .solvers import phantom_region_metrics, reconstruct
from .validation import validate_config

logger = logging.getLogger(__name__)

# Exclusion disk around the delta when scoring ridges, in pixels.
DELTA_EXCLUSION_PX = 4.0


@dataclass
class PipelineResult:
    """
    Outcome of one run.

    Attributes:
        output_dir: Directory holding the outputs
        files: Output file names, in writing order
        metrics: Scalar metrics as written to ``metrics.csv``
        config_hash: Full SHA-256 of the resolved config
    """

    output_dir: str
    files: List[str] = field(default_factory=list)
    metrics: Dict[str, float] = field(default_factory=dict)
    config_hash: str = ""


def build_operator(config: ExperimentConfig) -> SparseOperator:
    """Assemble or load the operator of a config, with binary rows scaled per ``binary_scale``."""
    grid, geom = config.grid_spec(), config.scan_geometry()
    if config.cache_dir:
        A = OperatorCache(config.cache_dir).get(grid, geom, config.mode, config.assembly_workers)
    else:
        A = assemble(grid, geom, config.mode, config.assembly_workers)
    if config.mode is TraceMode.BINARY:
        factor = binary_scale_factor(grid, config.binary_scale)
        if factor != 1.0:
            A = A.scaled(factor)
    return A


class _Stage:
    """Temporary output directory that becomes ``output_dir`` on commit."""

    def __init__(self, output_dir: str, config_hash: str) -> None:
        self.output_dir = os.path.abspath(output_dir)
        parent = os.path.dirname(self.output_dir)
        os.makedirs(parent, exist_ok=True)
        self.tmp = tempfile.mkdtemp(prefix=".toric-", dir=parent)
        self.config_hash = config_hash
        self.files: List[str] = []

    def path(self, name: str) -> str:
        self.files.append(name)
        return os.path.join(self.tmp, name)

    def commit(self) -> None:
        os.makedirs(self.output_dir, exist_ok=True)
        for name in self.files:
            os.replace(os.path.join(self.tmp, name), os.path.join(self.output_dir, name))
        shutil.rmtree(self.tmp, ignore_errors=True)

    def abort(self) -> None:
        shutil.rmtree(self.tmp, ignore_errors=True)


def run_pipeline(config: ExperimentConfig) -> PipelineResult:
    """
    Run a full experiment.

    Writes ``config.txt``, ``phantom.torimg``, ``sinogram.torsin``,
    ``sinogram_noisy.torsin``, ``reconstruction.torimg``,
    ``residuals.csv`` and ``metrics.csv``; analytic data adds
    ``sinogram_discrete.torsin``; a delta phantom adds
    ``backprojection.torimg``, ``overlay.torimg``, ``artifacts.csv`` and PNG
    previews when matplotlib is installed.

    Raises:
        ConfigError: If the config does not validate
        ToricError: From any stage; no partial outputs are left behind
    """
    result = validate_config(config)
    for warning in result.warnings:
        logger.warning("config: %s", warning)
    if not result.valid:
        raise ConfigError(
            "invalid config: " + "; ".join(result.errors), "pipeline", errors=result.errors
        )

    digest = config.config_hash()
    stage = _Stage(config.output_dir, digest)
    try:
        metrics = _run(config, stage)
    except BaseException:
        stage.abort()
        raise
    stage.commit()
    logger.info("wrote %d files to %s", len(stage.files), stage.output_dir)
    return PipelineResult(stage.output_dir, list(stage.files), metrics, digest)


def _run(config: ExperimentConfig, stage: _Stage) -> Dict[str, float]:
    digest = stage.config_hash
    with open(stage.path("config.txt"), "w", encoding="utf-8", newline="\n") as f:
        f.write(f"{provenance_line(digest)} noise_generator={GENERATOR_NAME}\n")
        f.write(config.canonical_text())

    grid, geom = config.grid_spec(), config.scan_geometry()
    spec = config.phantom_spec()
    phantom = render(spec, grid)
    write_image(phantom, stage.path("phantom.torimg"), digest)

    A = build_operator(config)
    metrics: Dict[str, float] = {"operator_nnz": float(A.nnz)}

    discrete = Sinogram(geom, apply(A, phantom))
    if config.data is DataSource.ANALYTIC:
        clean = analytic_sinogram(geom, spec.to_disks(grid.scale), grid.scale)
        write_sinogram(discrete, stage.path("sinogram_discrete.torsin"), digest)
        metrics["sinogram_relative_error"] = discrete.relative_error(clean)
        logger.info("discrete vs analytic sinogram: %.4g", metrics["sinogram_relative_error"])
    else:
        clean = discrete
    write_sinogram(clean, stage.path("sinogram.torsin"), digest)

    noisy = add_noise(clean, config.noise_spec())
    write_sinogram(noisy, stage.path("sinogram_noisy.torsin"), digest)
    metrics["noise_realized"] = noisy.relative_error(clean)

    recon = reconstruct(A, noisy, config.solver_config(), grid)
    image = recon.image
    write_image(image, stage.path("reconstruction.torimg"), digest)
    write_residual_csv(
        recon.residual_history, recon.objective_history, stage.path("residuals.csv"), digest
    )
    metrics["iterations"] = float(recon.iterations_used)
    metrics["data_residual"] = (
        recon.residual_history[-1]
        if recon.residual_history
        else float(np.linalg.norm(apply(A, image) - noisy.values))
    )
    metrics["image_relative_error"] = image.relative_error(phantom)
    for name, (avg, err) in phantom_region_metrics(image, spec.regions).items():
        metrics[f"avg_{name}"] = avg
        metrics[f"err_{name}"] = err

    if spec.variant is PhantomVariant.DELTA and math.hypot(*config.delta_center) > 0.0:
        metrics.update(_delta_artifacts(config, A, phantom, stage))

    write_metrics_csv(metrics, stage.path("metrics.csv"), digest)
    return metrics


def _delta_artifacts(
    config: ExperimentConfig, A: SparseOperator, phantom: Image, stage: _Stage
) -> Dict[str, float]:
    """Normal-operator backprojection of the delta, predicted curves and their overlay."""
    digest = stage.config_hash
    grid = phantom.grid
    bp = Image(grid, backproject_normal(A, phantom))
    write_image(bp, stage.path("backprojection.torimg"), digest)

    psi1, psi2 = delta_artifact_curves(config.delta_center, config.artifact_samples)
    rows = []
    for curve in (psi1, psi2):
        for alpha, (x, y) in zip(curve.alphas, curve.points):
            rows.append((float(alpha), float(x), float(y), curve.branch.value))
    write_artifact_csv(rows, stage.path("artifacts.csv"), digest)

    points = curve_points([psi1, psi2])
    overlay = overlay_image(bp, points)
    write_image(overlay, stage.path("overlay.torimg"), digest)
    exclusion = DELTA_EXCLUSION_PX * grid.delta / grid.scale
    score = overlay_score(
        points, bp, exclusion, config.delta_center, tolerance_px=config.overlay_tolerance
    )
    logger.info("artifact overlay score %.3f", score)

    if png_available():
        write_png(bp, stage.path("backprojection.png"))
        write_png(overlay, stage.path("overlay.png"))
    else:
        logger.info("matplotlib not installed; skipping PNG previews")
    return {"overlay_score": score, "artifact_points": float(len(points))}
