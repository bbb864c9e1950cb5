"""
Seeded additive Gaussian noise at a relative level.

``add_noise`` returns ``b + eps * g * ||b||_2 / sqrt(n)`` where ``g`` holds
standard normal samples.  Samples come from the Philox 4x64 counter-based
generator keyed by the seed, turned into normals with the Box-Muller
transform, so the same seed gives the same bytes on every platform and
numpy version that ships Philox.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from .errors import ConfigError
from .sinogram import Sinogram

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

GENERATOR_NAME = "philox4x64-boxmuller-v2"
MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class NoiseSpec:
    """
    Relative Gaussian noise.

    Attributes:
        epsilon: Relative noise level, ``>= 0``
        seed: Generator key in ``[0, 2^64)``
    """

    epsilon: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.epsilon >= 0.0:
            raise ConfigError(f"noise level must be >= 0, got {self.epsilon}", "noise")
        if not 0 <= self.seed <= MAX_SEED:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}", "noise")


def standard_normal(n: int, seed: int) -> FloatArray:
    """``n`` standard normal samples from the keyed Philox stream."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    pairs = (n + 1) // 2
    # interleaved (u1, u2) pairs keep every draw a prefix of longer ones
    u = rng.random(2 * pairs)
    u1 = 1.0 - u[0::2]  # (0, 1]
    u2 = u[1::2]
    radius = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * pairs)
    z[0::2] = radius * np.cos(2.0 * math.pi * u2)
    z[1::2] = radius * np.sin(2.0 * math.pi * u2)
    return z[:n]


def add_noise(b: Sinogram, spec: NoiseSpec) -> Sinogram:
    """
    Add relative Gaussian noise to a sinogram.

    Args:
        b: Clean data
        spec: Level and seed

    Returns:
        New sinogram ``b + eps * g * ||b|| / sqrt(n)``; ``b`` itself is not modified
    """
    n = b.values.size
    if spec.epsilon == 0.0:
        return Sinogram(b.geom, b.values.copy())
    g = standard_normal(n, spec.seed)
    sigma = spec.epsilon * float(np.linalg.norm(b.values)) / math.sqrt(n)
    noisy = Sinogram(b.geom, b.values + sigma * g)
    if logger.isEnabledFor(logging.INFO):
        logger.info(
            "added %.4g relative noise (seed %d): realized %.4g",
            spec.epsilon,
            spec.seed,
            noisy.relative_error(b),
        )
    return noisy
