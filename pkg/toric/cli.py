"""
``toric`` command line front end.

Each subcommand reads and writes toric-py files, so experiments can be
chained step by step or run in one go with ``toric run --config``.

Exit codes: 0 success, 2 config or input error, 3 numeric failure.
"""

import argparse
import hashlib
import logging
import math
import sys
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Type

import numpy as np

from . import __version__
from .analytic import analytic_sinogram
from .artifacts import (
    delta_artifact_curves,
    overlay_image,
    overlay_score,
    predict_artifacts,
)
from .config import ExperimentConfig, load_config
from .enums import BinaryScale, DataSource, PhantomVariant, SolverMethod, TraceMode
from .errors import ConfigError, DimensionError, FormatError, ToricError
from .export import (
    read_csv,
    read_image,
    read_operator,
    read_sinogram,
    write_artifact_csv,
    write_fourier_csv,
    write_image,
    write_metrics_csv,
    write_operator,
    write_png,
    write_residual_csv,
    write_sinogram,
)
from .fourier import consistency_report
from .geometry import Covector
from .grid import GridSpec, Image
from .noise import NoiseSpec, add_noise
from .operator import SparseOperator, apply, apply_transpose, assemble, backproject_normal
from .operator import binary_scale_factor
from .phantoms import PhantomSpec, builtin_phantom, load_phantom, mollify, render
from .pipeline import DELTA_EXCLUSION_PX, run_pipeline
from .sinogram import ScanGeometry, Sinogram, default_scan_geometry, reduced_scan_geometry
from .solvers import SolverConfig, phantom_region_metrics, reconstruct

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

DEFAULT_T_VALUES = "1.25,1.5,2,3,4"

_BUILTIN_PHANTOMS = [v.value for v in PhantomVariant if v is not PhantomVariant.CUSTOM]


def _args_hash(args: argparse.Namespace) -> str:
    """Hash of the parsed arguments, standing in for a config hash outside ``run``."""
    items = sorted(
        (k, str(v)) for k, v in vars(args).items() if k not in ("func", "verbose", "workers")
    )
    return hashlib.sha256(repr(items).encode("utf-8")).hexdigest()


def _floats(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers: {text}") from exc


def _pair(text: str) -> Tuple[float, float]:
    values = _floats(text)
    if len(values) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma separated numbers: {text}")
    return (values[0], values[1])


def _grid_for(A: SparseOperator, extent: float) -> GridSpec:
    n = math.isqrt(A.n_cols)
    if n * n != A.n_cols:
        raise DimensionError(f"operator has {A.n_cols} columns, not a square grid", "cli")
    return GridSpec(n, extent)


def _load_phantom(name: str, delta: Sequence[float]) -> PhantomSpec:
    if name in _BUILTIN_PHANTOMS:
        return builtin_phantom(name, (delta[0], delta[1]))
    return load_phantom(name)


def _geometry(args: argparse.Namespace) -> ScanGeometry:
    if args.geometry == "standard":
        return default_scan_geometry()
    return reduced_scan_geometry(args.n_alpha, args.n_radii)


def _maybe_png(image: Image, path: Optional[str]) -> None:
    if path:
        write_png(image, path)


# Subcommands


def cmd_build_operator(args: argparse.Namespace) -> int:
    grid = GridSpec(args.grid, args.extent)
    A = assemble(grid, _geometry(args), args.mode, args.workers or None)
    if args.mode is TraceMode.BINARY:
        factor = binary_scale_factor(grid, args.binary_scale)
        if factor != 1.0:
            A = A.scaled(factor)
    write_operator(A, args.out, _args_hash(args))
    print(f"{A.n_rows} x {A.n_cols} operator, {A.nnz} nonzeros -> {args.out}")
    return EXIT_OK


def cmd_phantom(args: argparse.Namespace) -> int:
    spec = _load_phantom(args.variant, args.delta)
    image = render(spec, GridSpec(args.grid, args.extent))
    if args.mollify > 0.0:
        image = mollify(image, args.mollify)
    write_image(image, args.out, _args_hash(args))
    _maybe_png(image, args.png)
    return EXIT_OK


def cmd_sinogram(args: argparse.Namespace) -> int:
    if args.source is DataSource.DISCRETE:
        if not (args.image and args.op):
            raise ConfigError("discrete sinograms need --image and --op", "cli")
        image = read_image(args.image)
        A = read_operator(args.op)
        geom = _geometry(args)
        if geom.n_rows != A.n_rows:
            raise DimensionError(
                f"operator has {A.n_rows} rows, geometry has {geom.n_rows}", "cli"
            )
        sino = Sinogram(geom, apply(A, image))
    else:
        if not args.phantom:
            raise ConfigError("analytic sinograms need --phantom", "cli")
        spec = _load_phantom(args.phantom, args.delta)
        sino = analytic_sinogram(_geometry(args), spec.to_disks(args.extent), args.extent)
    write_sinogram(sino, args.out, _args_hash(args))
    return EXIT_OK


def cmd_add_noise(args: argparse.Namespace) -> int:
    clean = read_sinogram(args.input)
    noisy = add_noise(clean, NoiseSpec(args.eps, args.seed))
    write_sinogram(noisy, args.out, _args_hash(args))
    print(f"realized relative noise {noisy.relative_error(clean):.6g}")
    return EXIT_OK


def cmd_reconstruct(args: argparse.Namespace) -> int:
    if args.lam is None:
        if args.method is not SolverMethod.LANDWEBER:
            raise ConfigError(f"--lambda is required for {args.method.value}", "cli")
        args.lam = 0.0
    sino = read_sinogram(args.input)
    A = read_operator(args.op)
    grid = _grid_for(A, args.extent)
    config = SolverConfig(
        method=args.method,
        lam=args.lam,
        max_iters=args.iters,
        inner_iters=args.inner_iters,
        rel_tol=args.rel_tol,
        nonneg=args.nonneg,
        tv_tau=args.tau,
    )
    result = reconstruct(A, sino, config, grid)
    digest = _args_hash(args)
    write_image(result.image, args.out, digest)
    if args.residuals:
        write_residual_csv(
            result.residual_history, result.objective_history, args.residuals, digest
        )
    print(f"{config.method.value}: {result.iterations_used} iterations ({result.stop_reason})")
    return EXIT_OK


def cmd_backproject(args: argparse.Namespace) -> int:
    A = read_operator(args.op)
    grid = _grid_for(A, args.extent)
    if args.image:
        values = backproject_normal(A, read_image(args.image))
    else:
        values = apply_transpose(A, read_sinogram(args.sinogram))
    image = Image(grid, values)
    write_image(image, args.out, _args_hash(args))
    _maybe_png(image, args.png)
    return EXIT_OK


def cmd_predict_artifacts(args: argparse.Namespace) -> int:
    w = (args.x, args.y)
    rows = []
    if args.xi is not None:
        for point in predict_artifacts(Covector(w, args.xi)):
            rows.append((point.alpha, point.partner[0], point.partner[1], point.branch.value))
    else:
        for curve in delta_artifact_curves(w, args.samples):
            for alpha, (x, y) in zip(curve.alphas, curve.points):
                rows.append((float(alpha), float(x), float(y), curve.branch.value))
    write_artifact_csv(rows, args.out, _args_hash(args))
    print(f"{len(rows)} predicted artifact points -> {args.out}")
    return EXIT_OK


def cmd_overlay(args: argparse.Namespace) -> int:
    bp = read_image(args.backprojection)
    points = np.array([[float(r["x"]), float(r["y"])] for r in read_csv(args.points)])
    overlay = overlay_image(bp, points.reshape(-1, 2))
    write_image(overlay, args.out, _args_hash(args))
    _maybe_png(overlay, args.png)
    if points.size and args.center is not None:
        grid = bp.grid
        exclusion = DELTA_EXCLUSION_PX * grid.delta / grid.scale
        score = overlay_score(points, bp, exclusion, args.center, tolerance_px=args.tolerance)
        print(f"overlay score {score:.4f}")
    return EXIT_OK


def cmd_fourier_check(args: argparse.Namespace) -> int:
    image = read_image(args.image)
    if args.mollify > 0.0:
        image = mollify(image, args.mollify)
    report = consistency_report(
        image,
        list(range(args.lmax + 1)),
        args.t,
        n_alpha=args.n_alpha,
        mode=args.mode,
        workers=args.workers or None,
    )
    rows = [(r.order, r.t, r.lhs, r.rhs, r.mismatch) for r in report.rows]
    write_fourier_csv(rows, args.report, _args_hash(args))
    print(f"max mismatch {report.max_mismatch:.4g}")
    return EXIT_OK


def cmd_metrics(args: argparse.Namespace) -> int:
    image = read_image(args.image)
    metrics: Dict[str, float] = {}
    if args.phantom:
        spec = _load_phantom(args.phantom, args.delta)
        for name, (avg, err) in phantom_region_metrics(image, spec.regions).items():
            metrics[f"avg_{name}"] = avg
            metrics[f"err_{name}"] = err
    if args.reference:
        metrics["image_relative_error"] = image.relative_error(read_image(args.reference))
    write_metrics_csv(metrics, args.out, _args_hash(args))
    for name, value in metrics.items():
        print(f"{name},{value:.6g}")
    return EXIT_OK


def _parse_overrides(pairs: Sequence[str]) -> Dict[str, str]:
    out = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep:
            raise ConfigError(f"override must be key=value, got {pair!r}", "cli")
        out[key.strip()] = value.strip()
    return out


def cmd_run(args: argparse.Namespace) -> int:
    overrides = _parse_overrides(args.set)
    if args.output_dir:
        overrides["output_dir"] = args.output_dir
    if args.noise is not None:
        overrides["noise"] = repr(args.noise)
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.config:
        config = load_config(args.config, overrides)
    else:
        config = ExperimentConfig().with_overrides(overrides)
    result = run_pipeline(config)
    print(f"config {result.config_hash[:12]}: {len(result.files)} files in {result.output_dir}")
    for name, value in result.metrics.items():
        print(f"  {name} = {value:.6g}")
    return EXIT_OK


# Parser


def _add_enum_arg(p: argparse.ArgumentParser, flag: str, enum: Type[Enum], default: Enum) -> None:
    p.add_argument(flag, type=enum, choices=[m.value for m in enum], default=default)


def _add_grid_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid", type=int, default=200, help="pixels per side")
    p.add_argument("--extent", type=float, default=1.0, help="grid half extent L")


def _add_extent_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--extent", type=float, default=1.0, help="grid half extent L")


def _add_geometry_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--geometry", choices=("standard", "reduced"), default="standard")
    p.add_argument("--n-alpha", type=int, default=360)
    p.add_argument("--n-radii", type=int, default=199)


def _add_phantom_args(p: argparse.ArgumentParser, flag: str, required: bool) -> None:
    p.add_argument(
        flag,
        dest=flag.lstrip("-"),
        required=required,
        help=f"built-in phantom ({', '.join(_BUILTIN_PHANTOMS)}) or phantom file",
    )
    p.add_argument("--delta", type=_pair, default=(-0.5, 0.0), help="delta position x,y")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toric", description="Toric section transform toolkit for Compton scattering CT"
    )
    parser.add_argument("--version", action="version", version=f"toric-py {__version__}")
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(
        name: str, func: Callable[[argparse.Namespace], int], summary: str
    ) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=summary)
        p.set_defaults(func=func)
        return p

    p = add("build-operator", cmd_build_operator, "assemble the discrete operator")
    _add_grid_args(p)
    _add_geometry_args(p)
    _add_enum_arg(p, "--mode", TraceMode, TraceMode.BINARY)
    _add_enum_arg(p, "--binary-scale", BinaryScale, BinaryScale.NONE)
    p.add_argument("--workers", type=int, default=0)
    p.add_argument("--out", required=True)

    p = add("phantom", cmd_phantom, "render a phantom")
    _add_grid_args(p)
    _add_phantom_args(p, "--variant", required=True)
    p.add_argument("--mollify", type=float, default=0.0, help="Gaussian sigma in pixels")
    p.add_argument("--out", required=True)
    p.add_argument("--png")

    p = add("sinogram", cmd_sinogram, "discrete or analytic sinogram")
    _add_enum_arg(p, "--source", DataSource, DataSource.DISCRETE)
    _add_extent_arg(p)
    _add_geometry_args(p)
    p.add_argument("--image")
    p.add_argument("--op")
    _add_phantom_args(p, "--phantom", required=False)
    p.add_argument("--out", required=True)

    p = add("add-noise", cmd_add_noise, "add seeded relative Gaussian noise")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--noise", "--eps", dest="eps", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = add("reconstruct", cmd_reconstruct, "reconstruct an image from a sinogram")
    _add_enum_arg(p, "--method", SolverMethod, SolverMethod.CGLS)
    p.add_argument("--lambda", dest="lam", type=float, help="required for cgls and htv")
    p.add_argument("--iters", type=int)
    p.add_argument("--inner-iters", type=int, default=30)
    p.add_argument("--rel-tol", type=float, default=1e-6)
    p.add_argument("--tau", type=float)
    p.add_argument("--nonneg", action="store_true")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--op", required=True)
    _add_extent_arg(p)
    p.add_argument("--out", required=True)
    p.add_argument("--residuals", help="residual history CSV")

    p = add("backproject", cmd_backproject, "A^T b, or A^T A v for an image")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--image")
    source.add_argument("--sinogram")
    p.add_argument("--op", required=True)
    _add_extent_arg(p)
    p.add_argument("--out", required=True)
    p.add_argument("--png")

    p = add("predict-artifacts", cmd_predict_artifacts, "predicted artifact locations")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--xi", type=_pair, help="covector direction dx,dy; omit for a delta")
    p.add_argument("--samples", type=int, default=180)
    p.add_argument("--out", required=True)

    p = add("overlay", cmd_overlay, "burn predicted points into a backprojection")
    p.add_argument("--backprojection", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--center", type=_pair, help="delta position x,y; prints the overlay score")
    p.add_argument("--tolerance", type=float, default=2.0, help="score tolerance in pixels")
    p.add_argument("--out", required=True)
    p.add_argument("--png")

    p = add("fourier-check", cmd_fourier_check, "Fourier/Abel consistency of an image")
    p.add_argument("--image", required=True)
    p.add_argument("--lmax", type=int, default=5)
    p.add_argument("--t", type=_floats, default=_floats(DEFAULT_T_VALUES))
    p.add_argument("--n-alpha", type=int, default=720)
    _add_enum_arg(p, "--mode", TraceMode, TraceMode.LENGTH)
    p.add_argument("--mollify", type=float, default=0.0)
    p.add_argument("--workers", type=int, default=0)
    p.add_argument("--report", required=True)

    p = add("metrics", cmd_metrics, "region averages and relative errors")
    p.add_argument("--image", required=True)
    _add_phantom_args(p, "--phantom", required=False)
    p.add_argument("--reference", help="reference image for the relative error")
    p.add_argument("--out", required=True)

    p = add("run", cmd_run, "full pipeline from a config file")
    p.add_argument("--config")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--output-dir")
    p.add_argument("--noise", type=float, help="relative noise level, overrides the config")
    p.add_argument("--seed", type=int, help="noise generator key, overrides the config")
    return parser


def _configure_logging(verbose: int) -> None:
    level = logging.WARNING if verbose <= 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return int(args.func(args))
    except (ConfigError, FormatError) as exc:
        for message in getattr(exc, "errors", []):
            print(f"  {message}", file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ToricError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if isinstance(exc, ValueError) else EXIT_NUMERIC
    except ArithmeticError as exc:
        print(f"error: [numeric] {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError, ImportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
