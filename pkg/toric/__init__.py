"""
toric-py: toric section transform toolkit for Compton scattering tomography

Forward operators, phantoms, noise, iterative reconstruction, microlocal
artifact prediction and Fourier consistency checks for the transform
that integrates images over toric sections (pairs of circular arcs).
"""

__version__ = "0.1.0"

# Core classes
from .geometry import Covector, ToricSection, make_toric_section
from .grid import GridSpec, Image
from .sinogram import ScanGeometry, Sinogram, default_scan_geometry, reduced_scan_geometry
from .operator import OperatorCache, SparseOperator, apply, apply_transpose, assemble
from .analytic import DiskSpec, analytic_sinogram
from .phantoms import PhantomSpec, builtin_phantom, load_phantom, render
from .noise import NoiseSpec, add_noise
from .solvers import ReconResult, SolverConfig, reconstruct
from .artifacts import delta_artifact_curves, overlay_score, predict_artifacts
from .fourier import consistency_check
from .config import ExperimentConfig, load_config
from .pipeline import run_pipeline
from .validation import ValidationResult

# Enums for type safety
from .enums import (
    Arc,
    ArtifactBranch,
    BinaryScale,
    DataSource,
    GridUnits,
    PhantomVariant,
    ShapeKind,
    SolverMethod,
    TraceMode,
)

# Errors
from .errors import (
    ConfigError,
    ConvergenceError,
    DimensionError,
    FormatError,
    GeometryError,
    ToricError,
    UnsupportedShapeError,
)

__all__ = [
    "__version__",
    # Core classes
    "Covector",
    "ToricSection",
    "make_toric_section",
    "GridSpec",
    "Image",
    "ScanGeometry",
    "Sinogram",
    "default_scan_geometry",
    "reduced_scan_geometry",
    "OperatorCache",
    "SparseOperator",
    "apply",
    "apply_transpose",
    "assemble",
    "DiskSpec",
    "analytic_sinogram",
    "PhantomSpec",
    "builtin_phantom",
    "load_phantom",
    "render",
    "NoiseSpec",
    "add_noise",
    "ReconResult",
    "SolverConfig",
    "reconstruct",
    "delta_artifact_curves",
    "overlay_score",
    "predict_artifacts",
    "consistency_check",
    "ExperimentConfig",
    "load_config",
    "run_pipeline",
    "ValidationResult",
    # Enums
    "Arc",
    "ArtifactBranch",
    "BinaryScale",
    "DataSource",
    "GridUnits",
    "PhantomVariant",
    "ShapeKind",
    "SolverMethod",
    "TraceMode",
    # Errors
    "ConfigError",
    "ConvergenceError",
    "DimensionError",
    "FormatError",
    "GeometryError",
    "ToricError",
    "UnsupportedShapeError",
]
