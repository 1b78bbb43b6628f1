"""PSNR-calibrated Gaussian perturbation of lead fields."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError
from .synth import LeadField

_SEED_LIMIT = 2**64


@dataclass(frozen=True)
class NoiseSpec:
    """Noise level and the seed material that reproduces one realization."""

    psnr_db: float
    seed: int = 0
    realization_index: int = 0

    def __post_init__(self):
        if isinstance(self.psnr_db, bool) or not isinstance(self.psnr_db, (int, float)):
            raise ConfigurationError("psnr_db must be a number")
        if math.isnan(self.psnr_db) or self.psnr_db == -math.inf:
            raise ConfigurationError(f"psnr_db must be finite, got {self.psnr_db!r}")
        if not (0 <= int(self.seed) < _SEED_LIMIT):
            raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if int(self.realization_index) < 0:
            raise ConfigurationError("realization_index must be nonnegative")

    def rng(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed),
                                    spawn_key=(int(self.realization_index),))
        return np.random.default_rng(ss)


def noise_sigma(matrix, psnr_db: float) -> float:
    """Standard deviation giving ``20 log10(max|L| / sigma) = psnr_db``."""
    peak = float(np.max(np.abs(matrix)))
    if psnr_db == math.inf:
        return 0.0
    return peak * 10.0 ** (-psnr_db / 20.0)


def add_noise(field: LeadField, spec: NoiseSpec) -> LeadField:
    """Return ``field`` plus i.i.d. Gaussian noise; ``field`` itself is untouched.

    A ``psnr_db`` of ``+inf`` is accepted as the noiseless limit.
    """
    sigma = noise_sigma(field.matrix, spec.psnr_db)
    E = spec.rng().standard_normal(field.matrix.shape)
    return field.with_matrix(
        field.matrix + sigma * E,
        noise={"psnr_db": spec.psnr_db, "sigma": sigma, "seed": int(spec.seed),
               "realization_index": int(spec.realization_index)},
    )
