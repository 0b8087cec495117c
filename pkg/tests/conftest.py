import numpy as np
import pytest

import holosearch as hs


def random_complex(nx, ny, seed=0):
    g = np.random.default_rng(seed)
    return g.normal(size=(nx, ny)) + 1j * g.normal(size=(nx, ny))


def protocol_state(modulation, phase_sensitive, domain=None, n=32, levels=256,
                   seed=7, init="backprojection", quadrant=None):
    """State built the way the benchmark harness builds one.

    ``quadrant`` defaults to the protocol rule (on for phase-sensitive).
    """
    domain = domain or hs.DomainSpec.fraunhofer()
    spec = hs.SlmSpec(modulation, levels, n, n)
    amp = hs.synthetic_amplitude(n, n)
    ph = hs.synthetic_phase(n, n) if phase_sensitive else None
    if modulation == "amplitude":
        amp = hs.symmetrize_point(amp)
        if ph is not None:
            ph = hs.symmetrize_point(ph)
    if quadrant is None:
        quadrant = phase_sensitive
    if quadrant:
        amp = hs.embed_central_quadrant(hs.resize_bilinear(amp, n // 2, n // 2), n, n)
        if ph is not None:
            ph = hs.embed_central_quadrant(hs.resize_bilinear(ph, n // 2, n // 2), n, n)
    target = hs.build_target(amp, ph, spec, phase_sensitive=phase_sensitive)
    return hs.new_run_state(spec, domain, target, seed, init=init)


def fit_relative_residual(ys, columns):
    """Least-squares residual of ys against the given basis columns,
    relative to the RMS variation of ys."""
    A = np.stack(columns, axis=1)
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    resid = ys - A @ coef
    denom = np.linalg.norm(ys - ys.mean())
    if denom == 0:
        denom = 1.0
    return float(np.linalg.norm(resid) / denom)


def angdiff(a, b):
    """Absolute angular distance, wrapped to [0, pi]."""
    return abs((a - b + np.pi) % (2.0 * np.pi) - np.pi)


class ScriptedRng:
    """Deterministic stand-in for numpy's Generator in targeted step tests."""

    def __init__(self, ints=(), floats=()):
        self._ints = list(ints)
        self._floats = list(floats)

    def integers(self, high, size=None):
        assert size is None, "scripted rng only supports scalar draws"
        v = self._ints.pop(0)
        assert 0 <= v < high
        return v

    def random(self, size=None):
        assert size is None, "scripted rng only supports scalar draws"
        return self._floats.pop(0)


@pytest.fixture
def fraunhofer():
    return hs.DomainSpec.fraunhofer()


@pytest.fixture
def fresnel():
    return hs.DomainSpec.fresnel(wavelength=633e-9, distance=0.1, pitch=8e-6)
