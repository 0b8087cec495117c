"""Independent brute-force references for testing the fast paths.

Everything here recomputes from first principles: transforms use a direct
evaluation of the DFT definition (never the FFT) at small sizes, so a bug
shared with the optimised code cannot validate itself.  These routines may
be orders of magnitude slower than the engines; that is the point.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .field import DomainSpec, as_field, dft_unitary, fresnel_prephase
from .metrics import se_phase_insensitive, se_phase_sensitive
from .search import RunState

# Above this edge length the naive transform is replaced by the fast one;
# drift checks stay meaningful, transform validation tests must stay small.
NAIVE_LIMIT = 64


def naive_dft(f) -> np.ndarray:
    """Unitary DFT by direct summation of the definition (no FFT)."""
    f = as_field(f)
    nx, ny = f.shape
    wx = np.exp(-2j * np.pi * np.outer(np.arange(nx), np.arange(nx)) / nx)
    wy = np.exp(-2j * np.pi * np.outer(np.arange(ny), np.arange(ny)) / ny)
    return (wx @ f @ wy.T) / np.sqrt(nx * ny)


def naive_idft(F) -> np.ndarray:
    """Unitary inverse DFT by direct summation."""
    F = as_field(F)
    nx, ny = F.shape
    wx = np.exp(2j * np.pi * np.outer(np.arange(nx), np.arange(nx)) / nx)
    wy = np.exp(2j * np.pi * np.outer(np.arange(ny), np.arange(ny)) / ny)
    return (wx @ F @ wy.T) / np.sqrt(nx * ny)


def naive_forward(H, domain: DomainSpec) -> np.ndarray:
    """Replay field via the naive transform, with the Fresnel pre-phase."""
    H = as_field(H)
    if domain.is_fresnel:
        chi = fresnel_prephase(domain, H.shape[0], H.shape[1])
        H = H * np.exp(1j * chi)
    return naive_dft(H)


def _aperture_from_levels(state: RunState) -> np.ndarray:
    H = state.values[state.levels]
    if state.prephase is not None:
        H = H * state.prephase
    return H


def full_recompute_error(state: RunState) -> float:
    """Total squared error rebuilt from the level grid alone.

    Ignores the cached replay and cached error entirely.  Uses the naive
    transform up to ``NAIVE_LIMIT`` and the fast transform beyond it (at
    large sizes this still checks incremental-accumulation drift, which is
    what matters there).
    """
    H = _aperture_from_levels(state)
    if max(state.spec.nx, state.spec.ny) <= NAIVE_LIMIT:
        R = naive_dft(H)
    else:
        R = dft_unitary(H)
    if state.target.phase_sensitive:
        return se_phase_sensitive(state.target.field, R)
    return se_phase_insensitive(state.target.field, R)


def candidate_errors(state: RunState, x: int, y: int, values) -> np.ndarray:
    """Exact total squared error for pixel (x,y) set to each candidate value.

    ``values`` are physical SLM pixel values (complex or real).  Evaluation
    streams the rank-one replay update for every candidate, chunked to
    bound memory.
    """
    spec = state.spec
    if not (0 <= x < spec.nx and 0 <= y < spec.ny):
        raise ValueError(f"pixel ({x}, {y}) outside SLM grid")
    values = np.asarray(values, dtype=np.complex128).ravel()
    pre = state.prephase[x, y] if state.prephase is not None else 1.0
    cur = state.values[state.levels[x, y]]
    coef = (values - cur) * pre / state.sqrt_n

    ex = np.exp((-2j * np.pi * x / spec.nx) * np.arange(spec.nx))
    ey = np.exp((-2j * np.pi * y / spec.ny) * np.arange(spec.ny))
    K = (ex[:, None] * ey[None, :]).ravel()
    R = state.R.ravel()
    T = state.target.field.ravel()
    Tm = state.target_mag.ravel()

    out = np.empty(values.size)
    chunk = max(1, (1 << 22) // K.size)  # ~64 MiB of complex scratch
    for i in range(0, values.size, chunk):
        Rn = R[None, :] + coef[i:i + chunk, None] * K[None, :]
        if state.target.phase_sensitive:
            d = T[None, :] - Rn
            out[i:i + chunk] = np.sum(d.real ** 2 + d.imag ** 2, axis=1)
        else:
            d = Tm[None, :] - np.abs(Rn)
            out[i:i + chunk] = np.sum(d * d, axis=1)
    return out


def brute_force_best_level(state: RunState, x: int, y: int) -> tuple[int, float]:
    """Exhaustively best level for pixel (x,y) and its true error change.

    Ties go to the lower level index.  The current level is among the
    candidates, so the returned change is never positive.
    """
    errs = candidate_errors(state, x, y, state.values)
    base = errs[state.levels[x, y]]
    k = int(np.argmin(errs))
    return k, float(errs[k] - base)


@dataclass(frozen=True)
class SweepCurve:
    """Exact error as a function of one pixel's continuous value."""

    samples: np.ndarray
    errors: np.ndarray
    x: int
    y: int


def pixel_sweep(state: RunState, x: int, y: int, n_samples: int) -> SweepCurve:
    """Sweep pixel (x,y) over its continuous range, recording exact error.

    Phase SLMs sweep the angle over the closed interval [0, 2pi] (both
    endpoints included, making periodicity directly visible); amplitude
    SLMs sweep the magnitude over [0, 1].  Errors are unnormalised totals.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    if state.spec.is_phase:
        samples = np.linspace(0.0, 2.0 * np.pi, n_samples)
        values = np.exp(1j * samples)
    else:
        samples = np.linspace(0.0, 1.0, n_samples)
        values = samples
    return SweepCurve(samples=samples,
                      errors=candidate_errors(state, x, y, values),
                      x=x, y=y)


def write_sweep_csv(curve: SweepCurve, path, header_lines=()) -> None:
    """Write a sweep as CSV with columns (param, error)."""
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["param", "error"])
        for s, e in zip(curve.samples, curve.errors):
            w.writerow([repr(float(s)), repr(float(e))])
