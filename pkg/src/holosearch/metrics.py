"""Error and quality metrics for replay fields.

Two mean-squared-error forms are provided: the phase-sensitive MSE on the
complex difference |T - R|^2 and the phase-insensitive MSE on the magnitude
difference (|T| - |R|)^2.  Optimisers track the unnormalised total squared
error; the 1/(nx*ny) prefactor is applied only when reporting, so both
``se_*`` (totals) and ``mse_*`` (means) variants exist.

SSIM uses an 8x8 uniform sliding window (stride 1, valid placement only)
with the conventional stabilising constants k1=0.01, k2=0.03 scaled by the
dynamic range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SSIM_WINDOW = 8
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _check_same_shape(a, b):
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def se_phase_sensitive(T, R) -> float:
    """Total squared error sum(|T - R|^2)."""
    T = np.asarray(T)
    R = np.asarray(R)
    _check_same_shape(T, R)
    d = T - R
    return float(np.sum(d.real ** 2 + d.imag ** 2))


def se_phase_insensitive(T, R) -> float:
    """Total squared error sum((|T| - |R|)^2)."""
    T = np.asarray(T)
    R = np.asarray(R)
    _check_same_shape(T, R)
    d = np.abs(T) - np.abs(R)
    return float(np.sum(d * d))


def mse_phase_sensitive(T, R) -> float:
    """Mean squared error on the complex difference."""
    return se_phase_sensitive(T, R) / np.asarray(T).size


def mse_phase_insensitive(T, R) -> float:
    """Mean squared error on the magnitude difference."""
    return se_phase_insensitive(T, R) / np.asarray(T).size


def _window_sums(a: np.ndarray, w: int) -> np.ndarray:
    # Sliding w x w window sums over all valid placements, via integral image.
    c = np.zeros((a.shape[0] + 1, a.shape[1] + 1))
    np.cumsum(np.cumsum(a, axis=0), axis=1, out=c[1:, 1:])
    return c[w:, w:] - c[:-w, w:] - c[w:, :-w] + c[:-w, :-w]


def ssim(a, b, dynamic_range: float, window: int = SSIM_WINDOW) -> float:
    """Mean structural similarity between two real images.

    Identical images give exactly 1.0; the result is symmetric in (a, b).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_same_shape(a, b)
    if not dynamic_range > 0:
        raise ValueError("dynamic_range must be positive")
    if a.ndim != 2 or min(a.shape) < window:
        raise ValueError(f"images must be 2D with both sides >= {window}")

    n = window * window
    mu1 = _window_sums(a, window) / n
    mu2 = _window_sums(b, window) / n
    m11 = _window_sums(a * a, window) / n
    m22 = _window_sums(b * b, window) / n
    m12 = _window_sums(a * b, window) / n
    var1 = m11 - mu1 * mu1
    var2 = m22 - mu2 * mu2
    cov = m12 - mu1 * mu2

    c1 = (SSIM_K1 * dynamic_range) ** 2
    c2 = (SSIM_K2 * dynamic_range) ** 2
    num = (2.0 * mu1 * mu2 + c1) * (2.0 * cov + c2)
    den = (mu1 * mu1 + mu2 * mu2 + c1) * (var1 + var2 + c2)
    return float(np.mean(num / den))


@dataclass(frozen=True)
class ErrorReport:
    """Summary of both MSE forms plus SSIM for one (target, replay) pair.

    ``total_se`` is the unnormalised sum for the configured sensitivity,
    so ``total_se / (nx*ny)`` reproduces the matching MSE field.
    """

    mse_ps: float
    mse_pi: float
    total_se: float
    ssim: float


def error_report(T, R, phase_sensitive: bool, dynamic_range: float = 1.0) -> ErrorReport:
    """Build an :class:`ErrorReport` for a target/replay pair.

    SSIM compares replay intensity |R|^2 against target intensity for
    phase-insensitive reporting, and magnitudes for phase-sensitive
    reporting, both normalised by the target peak.
    """
    T = np.asarray(T)
    R = np.asarray(R)
    se_ps = se_phase_sensitive(T, R)
    se_pi = se_phase_insensitive(T, R)
    if phase_sensitive:
        ta = np.abs(T)
        ra = np.abs(R)
    else:
        ta = np.abs(T) ** 2
        ra = np.abs(R) ** 2
    peak = float(ta.max())
    if peak <= 0:
        peak = 1.0
    s = ssim(ra / peak, ta / peak, dynamic_range=dynamic_range)
    return ErrorReport(
        mse_ps=se_ps / T.size,
        mse_pi=se_pi / T.size,
        total_se=se_ps if phase_sensitive else se_pi,
        ssim=s,
    )
