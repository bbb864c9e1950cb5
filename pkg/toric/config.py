"""
Experiment configuration.

A config file is a flat list of ``key = value`` lines (``#`` comments
allowed, no section header needed).  Values are parsed into an
:class:`ExperimentConfig`; command line flags override single keys.
"""

import configparser
import hashlib
import logging
import os
from dataclasses import dataclass, replace
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

from .enums import BinaryScale, DataSource, PhantomVariant, SolverMethod, TraceMode
from .errors import ConfigError
from .grid import GridSpec
from .noise import NoiseSpec
from .phantoms import PhantomSpec, builtin_phantom, load_phantom
from .sinogram import STANDARD_N_ALPHA, STANDARD_N_RADII, ScanGeometry
from .sinogram import default_scan_geometry, reduced_scan_geometry
from .solvers import SolverConfig
from .validation import ValidationResult

logger = logging.getLogger(__name__)

_SECTION = "experiment"
GEOMETRIES = ("standard", "reduced")

# Keys that change where or how fast outputs are produced, not what they contain.
UNHASHED_KEYS = frozenset({"output_dir", "cache_dir", "workers"})


def _parse_bool(text: str) -> bool:
    states = configparser.ConfigParser.BOOLEAN_STATES
    if text.lower() not in states:
        raise ValueError(f"not a boolean: {text!r}")
    return states[text.lower()]


def _parse_optional_float(text: str) -> Optional[float]:
    return None if text.lower() in ("", "none", "auto") else float(text)


def _parse_geometry(text: str) -> str:
    if text not in GEOMETRIES:
        raise ValueError(f"expected one of {', '.join(GEOMETRIES)}, got {text!r}")
    return text


def _parse_int(text: str) -> int:
    return int(text, 0)


def _file_digest(path: str) -> str:
    try:
        with open(path, "rb") as f:
            return hashlib.sha256(f.read()).hexdigest()
    except OSError:
        return "missing"


# config key -> (dataclass field, parser)
KEYS: Dict[str, Tuple[str, Callable[[str], Any]]] = {
    "grid_n": ("grid_n", _parse_int),
    "half_extent": ("half_extent", float),
    "geometry": ("geometry", _parse_geometry),
    "n_alpha": ("n_alpha", _parse_int),
    "n_radii": ("n_radii", _parse_int),
    "mode": ("mode", TraceMode),
    "binary_scale": ("binary_scale", BinaryScale),
    "phantom": ("phantom", str),
    "delta_x": ("delta_x", float),
    "delta_y": ("delta_y", float),
    "data": ("data", DataSource),
    "noise": ("noise", float),
    "seed": ("seed", _parse_int),
    "method": ("method", SolverMethod),
    "lambda": ("lam", float),
    "iters": ("iters", _parse_int),
    "inner_iters": ("inner_iters", _parse_int),
    "nonneg": ("nonneg", _parse_bool),
    "tv_tau": ("tv_tau", _parse_optional_float),
    "rel_tol": ("rel_tol", float),
    "artifact_samples": ("artifact_samples", _parse_int),
    "overlay_tolerance": ("overlay_tolerance", float),
    "output_dir": ("output_dir", str),
    "cache_dir": ("cache_dir", str),
    "workers": ("workers", _parse_int),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Everything one pipeline run needs.

    Attributes:
        grid_n: Pixels per side
        half_extent: Grid covers ``[-L, L]^2`` in world units; the detector ring has radius ``L``
        geometry: ``standard`` (360 x 199) or ``reduced`` (``n_alpha`` x ``n_radii``)
        mode: Trace mode of the operator
        binary_scale: Row scaling for binary operators
        phantom: Built-in phantom name or path to a phantom file
        delta_x, delta_y: Delta position (unit-ball units) for ``phantom = delta``
        data: ``discrete`` (``b = A v``) or ``analytic`` (disk phantoms only)
        noise: Relative noise level
        seed: Key of the noise generator; the only source of randomness
        method, lam, iters, inner_iters, nonneg, tv_tau, rel_tol: Solver settings;
            ``iters = 0`` picks the method default
        artifact_samples: Samples per artifact curve for delta phantoms
        overlay_tolerance: Pixel tolerance of the artifact overlay score
        output_dir: Where outputs go
        cache_dir: Operator cache directory; empty disables caching
        workers: Assembly threads; 0 lets the library choose
        base_dir: Directory relative phantom paths are resolved against
    """

    grid_n: int = 200
    half_extent: float = 1.0
    geometry: str = "standard"
    n_alpha: int = STANDARD_N_ALPHA
    n_radii: int = STANDARD_N_RADII
    mode: TraceMode = TraceMode.BINARY
    binary_scale: BinaryScale = BinaryScale.NONE
    phantom: str = "simple"
    delta_x: float = -0.5
    delta_y: float = 0.0
    data: DataSource = DataSource.DISCRETE
    noise: float = 0.0
    seed: int = 0
    method: SolverMethod = SolverMethod.CGLS
    lam: float = 0.0
    iters: int = 0
    inner_iters: int = 30
    nonneg: bool = False
    tv_tau: Optional[float] = None
    rel_tol: float = 1e-6
    artifact_samples: int = 180
    overlay_tolerance: float = 2.0
    output_dir: str = "toric-out"
    cache_dir: str = ""
    workers: int = 0
    base_dir: str = ""

    @property
    def is_builtin_phantom(self) -> bool:
        return self.phantom in {v.value for v in PhantomVariant if v is not PhantomVariant.CUSTOM}

    @property
    def phantom_path(self) -> str:
        if os.path.isabs(self.phantom) or not self.base_dir:
            return self.phantom
        return os.path.join(self.base_dir, self.phantom)

    @property
    def delta_center(self) -> Tuple[float, float]:
        return (self.delta_x, self.delta_y)

    def grid_spec(self) -> GridSpec:
        return GridSpec(self.grid_n, self.half_extent)

    def scan_geometry(self) -> ScanGeometry:
        if self.geometry == "standard":
            return default_scan_geometry()
        return reduced_scan_geometry(self.n_alpha, self.n_radii)

    def phantom_spec(self) -> PhantomSpec:
        if self.is_builtin_phantom:
            return builtin_phantom(self.phantom, self.delta_center)
        return load_phantom(self.phantom_path)

    def noise_spec(self) -> NoiseSpec:
        return NoiseSpec(self.noise, self.seed)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            method=self.method,
            lam=self.lam,
            max_iters=self.iters or None,
            inner_iters=self.inner_iters,
            rel_tol=self.rel_tol,
            nonneg=self.nonneg,
            tv_tau=self.tv_tau,
        )

    @property
    def assembly_workers(self) -> Optional[int]:
        return self.workers or None

    def to_mapping(self) -> Dict[str, str]:
        """Canonical ``key -> text`` form in key order."""
        out = {}
        for key, (attr, parse) in KEYS.items():
            value = getattr(self, attr)
            if isinstance(value, bool):
                text = "true" if value else "false"
            elif hasattr(value, "value"):
                text = str(value.value)
            elif value is None:
                text = "auto"
            elif parse is float or isinstance(value, float):
                text = repr(float(value))
            else:
                text = str(value)
            out[key] = text
        return out

    def canonical_text(self) -> str:
        return "".join(
            f"{k} = {v}\n" for k, v in self.to_mapping().items() if k not in UNHASHED_KEYS
        )

    def config_hash(self) -> str:
        """
        SHA-256 of the canonical dump; output locations and thread counts are excluded.

        A phantom file also enters the hash through the SHA-256 of its bytes.
        """
        text = self.canonical_text()
        if not self.is_builtin_phantom:
            text += f"phantom_sha256 = {_file_digest(self.phantom_path)}\n"
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def with_overrides(self, overrides: Mapping[str, str]) -> "ExperimentConfig":
        """
        Copy with some keys replaced by parsed text values.

        Raises:
            ConfigError: On unknown keys or unparsable values
        """
        values, result = parse_values(overrides)
        if not result.valid:
            raise ConfigError("invalid config overrides", errors=result.errors)
        return replace(self, **values)


def parse_values(raw: Mapping[str, str]) -> Tuple[Dict[str, Any], ValidationResult]:
    """
    Convert ``key -> text`` pairs into dataclass field values.

    Unknown keys and unparsable values are reported as errors.
    """
    result = ValidationResult()
    values: Dict[str, Any] = {}
    for key, text in raw.items():
        key = key.strip().lower()
        if key not in KEYS:
            result.add_error(f"Unknown config key: {key}")
            continue
        attr, parse = KEYS[key]
        try:
            values[attr] = parse(str(text).strip())
        except ValueError as exc:
            result.add_error(f"Bad value for {key}: {exc}")
    return values, result


def parse_config(text: str, base_dir: str = "") -> ExperimentConfig:
    """
    Parse config text.

    Raises:
        ConfigError: On syntax errors, unknown keys or unparsable values
    """
    parser = configparser.ConfigParser(
        interpolation=None, comment_prefixes=("#", ";"), inline_comment_prefixes=("#",)
    )
    try:
        parser.read_string(f"[{_SECTION}]\n{text}")
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}") from exc
    values, result = parse_values(dict(parser[_SECTION]))
    if not result.valid:
        raise ConfigError("invalid config: " + "; ".join(result.errors), errors=result.errors)
    return ExperimentConfig(base_dir=base_dir, **values)


def load_config(path: str, overrides: Optional[Mapping[str, str]] = None) -> ExperimentConfig:
    """
    Load a config file and apply overrides.

    Relative phantom paths are resolved against the file's directory.

    Raises:
        ConfigError: If the file cannot be read or parsed
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    config = parse_config(text, base_dir=os.path.dirname(os.path.abspath(path)))
    if overrides:
        config = config.with_overrides(overrides)
    logger.info("loaded config %s (hash %s)", path, config.config_hash()[:12])
    return config