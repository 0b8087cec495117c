"""Discrete SLM model: level-to-value mapping, quantisation, random draws.

A phase SLM maps level k to the unit-modulus value e^{2pi i k / L}; an
amplitude SLM maps level k to the real transmittance k / (L - 1) in [0, 1].

All stochastic choices in the package run off ``numpy.random.Generator``
instances backed by the 64-bit PCG64 algorithm, seeded explicitly, so runs
are reproducible bit-for-bit across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PHASE = "phase"
AMPLITUDE = "amplitude"


@dataclass(frozen=True)
class SlmSpec:
    """Modulation kind, level count and grid size of the SLM."""

    modulation: str
    levels: int
    nx: int
    ny: int

    def __post_init__(self):
        if self.modulation not in (PHASE, AMPLITUDE):
            raise ValueError(f"unknown modulation {self.modulation!r}")
        if self.levels < 2:
            raise ValueError("SLM needs at least 2 levels")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("SLM dimensions must be positive")

    @property
    def is_phase(self) -> bool:
        return self.modulation == PHASE

    @property
    def size(self) -> int:
        return self.nx * self.ny


def level_values(spec: SlmSpec) -> np.ndarray:
    """Complex pixel value for every level, as a length-L lookup table."""
    k = np.arange(spec.levels)
    if spec.is_phase:
        return np.exp(2j * np.pi * k / spec.levels)
    return (k / (spec.levels - 1)).astype(np.complex128)


def level_to_complex(spec: SlmSpec, k):
    """Complex pixel value of level index ``k`` (scalar or array)."""
    k = np.asarray(k)
    if np.any(k < 0) or np.any(k >= spec.levels):
        raise ValueError(f"level index out of range [0, {spec.levels})")
    vals = level_values(spec)[k]
    return complex(vals) if vals.ndim == 0 else vals


def quantize_phase(spec: SlmSpec, theta):
    """Nearest level to phase angle ``theta`` (radians) under circular distance.

    Ties are broken toward the higher level index.  Accepts scalars or
    arrays; returns int or int64 array accordingly.
    """
    if not spec.is_phase:
        raise ValueError("quantize_phase requires a phase SLM")
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise ValueError("phase must be finite")
    x = np.mod(theta, 2.0 * np.pi) * (spec.levels / (2.0 * np.pi))
    k = np.floor(x + 0.5).astype(np.int64) % spec.levels
    return int(k) if k.ndim == 0 else k


def quantize_amplitude(spec: SlmSpec, r):
    """Nearest level to magnitude ``r`` after clamping to [0, 1].

    Ties are broken toward the higher level index.
    """
    if spec.is_phase:
        raise ValueError("quantize_amplitude requires an amplitude SLM")
    r = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r)):
        raise ValueError("magnitude must be finite")
    x = np.clip(r, 0.0, 1.0) * (spec.levels - 1)
    k = np.minimum(np.floor(x + 0.5).astype(np.int64), spec.levels - 1)
    return int(k) if k.ndim == 0 else k


def random_level(spec: SlmSpec, rng: np.random.Generator) -> int:
    """Uniform random level index in {0, ..., L-1}."""
    return int(rng.integers(spec.levels))


def make_rng(seed: int) -> np.random.Generator:
    """The package-wide PRNG: PCG64 seeded explicitly."""
    return np.random.Generator(np.random.PCG64(seed))
