"""
Validation of experiment configs and phantoms.
"""

import math
import os
from typing import TYPE_CHECKING, List

if TYPE_CHECKING:
    from .config import ExperimentConfig

from .enums import DataSource, PhantomVariant, SolverMethod
from .errors import ToricError, UnsupportedShapeError
from .noise import MAX_SEED
from .phantoms import PhantomSpec
from .sinogram import STANDARD_N_ALPHA, STANDARD_N_RADII


class ValidationResult:
    """
    Result of config or phantom validation.

    Attributes:
        valid: Whether no errors were found
        errors: List of validation error messages
        warnings: List of validation warning messages
    """

    def __init__(self) -> None:
        self.valid = True
        self.errors: List[str] = []
        self.warnings: List[str] = []

    def add_error(self, message: str) -> None:
        """Add an error message and mark as invalid."""
        self.errors.append(message)
        self.valid = False

    def add_warning(self, message: str) -> None:
        """Add a warning message."""
        self.warnings.append(message)

    def merge(self, other: "ValidationResult") -> None:
        for message in other.errors:
            self.add_error(message)
        self.warnings.extend(other.warnings)


def validate_phantom(spec: PhantomSpec) -> ValidationResult:
    """
    Validate a phantom.

    Checks for:
    - Phantoms without shapes
    - Regions with a zero true value (relative errors undefined)
    - Duplicate region names
    - Shapes reaching outside the unit ball (warning)
    """
    result = ValidationResult()
    if not spec.shapes:
        result.add_error(f"Phantom '{spec.name}' has no shapes")

    names = set()
    for region in spec.regions:
        if region.name in names:
            result.add_error(f"Duplicate region name: {region.name}")
        names.add(region.name)
        if region.true_value == 0.0:
            result.add_error(f"Region {region.name} has true value 0")

    for description in spec.shapes_outside_unit_ball():
        result.add_warning(f"{description} (outside the unit ball)")
    return result


def _check_positive(result: ValidationResult, name: str, value: float) -> None:
    if not value > 0:
        result.add_error(f"{name} must be positive, got {value}")


def validate_config(config: "ExperimentConfig") -> ValidationResult:
    """
    Validate an experiment config.

    Checks for:
    - Out-of-range numbers
    - Missing phantom files
    - Delta phantoms outside the unit ball
    - Analytic data requested for a phantom without closed-form integrals
    - Settings that are ignored by the chosen geometry (warning)
    - Phantom shapes leaving the unit ball (warning)

    Args:
        config: The config to validate

    Returns:
        ValidationResult with any errors or warnings
    """
    result = ValidationResult()

    if config.grid_n < 2:
        result.add_error(f"grid_n must be at least 2, got {config.grid_n}")
    _check_positive(result, "half_extent", config.half_extent)
    if config.geometry == "reduced":
        _check_positive(result, "n_alpha", config.n_alpha)
        _check_positive(result, "n_radii", config.n_radii)
    elif (config.n_alpha, config.n_radii) != (STANDARD_N_ALPHA, STANDARD_N_RADII):
        result.add_warning("n_alpha and n_radii are ignored with geometry = standard")

    if config.noise < 0.0:
        result.add_error(f"noise must be >= 0, got {config.noise}")
    if not 0 <= config.seed <= MAX_SEED:
        result.add_error(f"seed must be a 64-bit unsigned integer, got {config.seed}")
    if config.lam < 0.0:
        result.add_error(f"lambda must be >= 0, got {config.lam}")
    if config.method is SolverMethod.HTV and config.lam <= 0.0:
        result.add_error("htv needs lambda > 0")
    if config.iters < 0:
        result.add_error(f"iters must be >= 0, got {config.iters}")
    if config.inner_iters < 1:
        result.add_error(f"inner_iters must be positive, got {config.inner_iters}")
    if config.rel_tol < 0.0:
        result.add_error(f"rel_tol must be >= 0, got {config.rel_tol}")
    if config.tv_tau is not None:
        _check_positive(result, "tv_tau", config.tv_tau)
    if config.workers < 0:
        result.add_error(f"workers must be >= 0, got {config.workers}")
    _check_positive(result, "artifact_samples", config.artifact_samples)
    _check_positive(result, "overlay_tolerance", config.overlay_tolerance)

    if config.is_builtin_phantom:
        variant = PhantomVariant(config.phantom)
        if variant is PhantomVariant.DELTA:
            radius = math.hypot(config.delta_x, config.delta_y)
            if radius >= 1.0:
                result.add_error(
                    f"delta at ({config.delta_x}, {config.delta_y}) lies outside the unit ball"
                )
            elif radius == 0.0:
                result.add_warning("delta at the origin: artifact curves are not predicted")
    elif not os.path.isfile(config.phantom_path):
        result.add_error(f"Phantom file not found: {config.phantom_path}")
        return result

    try:
        spec = config.phantom_spec()
    except ToricError as exc:
        result.add_error(f"Phantom could not be loaded: {exc}")
        return result
    result.merge(validate_phantom(spec))

    if config.data is DataSource.ANALYTIC:
        try:
            spec.to_disks()
        except UnsupportedShapeError as exc:
            result.add_error(f"analytic data needs a disk/annulus phantom: {exc.message}")
    return result
