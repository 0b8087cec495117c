"""Complex fields and the transforms linking the SLM plane to the replay plane.

A field is a 2D ``complex128`` array indexed ``[x, y]``: axis 0 is x with
``nx`` samples, axis 1 is y with ``ny`` samples.  The same layout is used for
the diffraction (SLM) plane, indexed ``[x, y]``, and the replay plane,
indexed ``[u, v]``.

All transforms are unitary (``1/sqrt(nx*ny)`` normalisation both ways), so
total energy ``sum(|f|**2)`` is preserved.  Far-field propagation is the
plain unitary DFT; mid-field propagation multiplies the aperture by the
quadratic phase ``exp(1j*chi)`` before transforming, with ``chi`` given by
:func:`fresnel_prephase`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FRAUNHOFER = "fraunhofer"
FRESNEL = "fresnel"


@dataclass(frozen=True)
class DomainSpec:
    """Propagation regime between the SLM and the replay plane.

    ``wavelength`` (m), ``distance`` (m) and ``pitch`` (m/pixel) are only
    meaningful, and required, for the Fresnel regime.
    """

    kind: str = FRAUNHOFER
    wavelength: float | None = None
    distance: float | None = None
    pitch: float | None = None

    def __post_init__(self):
        if self.kind not in (FRAUNHOFER, FRESNEL):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind == FRESNEL:
            if self.wavelength is None or not self.wavelength > 0:
                raise ValueError("Fresnel domain requires wavelength > 0")
            if self.distance is None or self.distance == 0:
                raise ValueError("Fresnel domain requires distance != 0")
            if self.pitch is None or not self.pitch > 0:
                raise ValueError("Fresnel domain requires pitch > 0")

    @classmethod
    def fraunhofer(cls) -> "DomainSpec":
        return cls(FRAUNHOFER)

    @classmethod
    def fresnel(cls, wavelength: float, distance: float, pitch: float) -> "DomainSpec":
        return cls(FRESNEL, wavelength, distance, pitch)

    @property
    def is_fresnel(self) -> bool:
        return self.kind == FRESNEL


def as_field(f) -> np.ndarray:
    """Validate and return ``f`` as a 2D complex128 field.

    Rejects empty or non-2D arrays and non-finite entries.
    """
    a = np.asarray(f)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"field must be a non-empty 2D array, got shape {a.shape}")
    a = a.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(a)):
        raise ValueError("field contains non-finite entries")
    return a


def dft_unitary(f) -> np.ndarray:
    """Unitary forward DFT, F[u,v] = sum f[x,y] e^{-2pi i(ux/nx + vy/ny)} / sqrt(nx*ny)."""
    return np.fft.fft2(as_field(f), norm="ortho")


def idft_unitary(F) -> np.ndarray:
    """Unitary inverse DFT; exact inverse of :func:`dft_unitary`."""
    return np.fft.ifft2(as_field(F), norm="ortho")


def fresnel_prephase(domain: DomainSpec, nx: int, ny: int) -> np.ndarray:
    """Quadratic phase map chi(x, y) in radians for the Fresnel regime.

    chi = pi * pitch^2 * ((x - nx/2)^2 + (y - ny/2)^2) / (wavelength * distance)

    Coordinates are centred on (nx/2, ny/2) and converted to metres via the
    pixel pitch before squaring, keeping the argument of the exponential
    dimensionless.
    """
    if not domain.is_fresnel:
        raise ValueError("fresnel_prephase requires a Fresnel domain")
    if nx < 1 or ny < 1:
        raise ValueError("dimensions must be positive")
    xs = (np.arange(nx) - nx / 2.0) * domain.pitch
    ys = (np.arange(ny) - ny / 2.0) * domain.pitch
    return (np.pi / (domain.wavelength * domain.distance)) * (
        xs[:, None] ** 2 + ys[None, :] ** 2
    )


def fresnel_prephase_at(domain: DomainSpec, x: int, y: int, nx: int, ny: int) -> float:
    """chi at a single aperture pixel; see :func:`fresnel_prephase`."""
    if not domain.is_fresnel:
        raise ValueError("fresnel_prephase_at requires a Fresnel domain")
    px = (x - nx / 2.0) * domain.pitch
    py = (y - ny / 2.0) * domain.pitch
    return float(np.pi / (domain.wavelength * domain.distance) * (px * px + py * py))


def forward_transform(H, domain: DomainSpec) -> np.ndarray:
    """Replay field of aperture ``H`` in the given domain.

    Fraunhofer: unitary DFT of H.  Fresnel: unitary DFT of H * exp(1j*chi).
    The pre-phase is unit modulus, so energy is conserved in both regimes.
    """
    H = as_field(H)
    if not domain.is_fresnel:
        return dft_unitary(H)
    chi = fresnel_prephase(domain, H.shape[0], H.shape[1])
    return dft_unitary(H * np.exp(1j * chi))


def delta_replay(dh: complex, x: int, y: int, nx: int, ny: int,
                 domain: DomainSpec | None = None) -> np.ndarray:
    """Replay-plane change caused by adding ``dh`` to aperture pixel (x, y).

    Returns the full (nx, ny) array of per-pixel deltas

        dR[u,v] = dh' * e^{-2pi i (ux/nx + vy/ny)} / sqrt(nx*ny)

    without performing a full transform, where dh' = dh * exp(1j*chi(x,y))
    in the Fresnel regime and dh' = dh otherwise.  Callers may fold the
    entries on the fly or add the array to a cached replay field.
    """
    if nx < 1 or ny < 1:
        raise ValueError("dimensions must be positive")
    if not (0 <= x < nx and 0 <= y < ny):
        raise ValueError(f"pixel ({x}, {y}) outside {nx}x{ny} aperture")
    dh = complex(dh)
    if domain is not None and domain.is_fresnel:
        dh *= np.exp(1j * fresnel_prephase_at(domain, x, y, nx, ny))
    ex = np.exp((-2j * np.pi * x / nx) * np.arange(nx))
    ey = np.exp((-2j * np.pi * y / ny) * np.arange(ny))
    return (dh / np.sqrt(nx * ny)) * (ex[:, None] * ey[None, :])
