"""Target preparation: image I/O, symmetrisation, quadrant embedding, scaling.

The preparation protocol for benchmark targets is:

1. load (or synthesise) a grayscale amplitude image, values in [0, 1];
2. for amplitude-modulated SLMs, replace it with a point-symmetric version
   (a real aperture can only produce a point-symmetric replay magnitude);
3. optionally attach a second image as the phase component;
4. for phase-sensitive targets, shrink the image into the central quadrant
   of the replay plane and zero the surround (restoring degrees of freedom);
5. scale the target so its energy matches what the SLM can deliver under
   planar unit-intensity illumination.

Images are exchanged as binary PGM (P5), 8-bit or 16-bit big-endian.
Arrays follow the package convention: axis 0 is x, axis 1 is y.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .slm import SlmSpec


@dataclass(frozen=True)
class TargetField:
    """Prepared complex target with its sensitivity flag and energy."""

    field: np.ndarray
    phase_sensitive: bool
    energy: float


# ---------------------------------------------------------------------------
# PGM I/O

def _read_pgm_tokens(data: bytes, count: int):
    # Header tokens separated by whitespace; '#' starts a comment to EOL.
    tokens = []
    i = 0
    while len(tokens) < count:
        if i >= len(data):
            raise ValueError("truncated PGM header")
        c = data[i:i + 1]
        if c == b"#":
            while i < len(data) and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j:j + 1].isspace():
                j += 1
            tokens.append(data[i:j])
            i = j
    return tokens, i + 1  # skip the single whitespace after maxval


def load_image(path) -> np.ndarray:
    """Read a binary (P5) PGM file as a float image in [0, 1]."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read image {path!r}: {exc}") from exc
    if not data.startswith(b"P5"):
        raise ValueError(f"{path!r}: not a binary PGM (P5) file")
    tokens, offset = _read_pgm_tokens(data, 4)
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if width < 1 or height < 1:
        raise ValueError(f"{path!r}: bad PGM dimensions {width}x{height}")
    if not 0 < maxval < 65536:
        raise ValueError(f"{path!r}: unsupported PGM depth maxval={maxval}")
    dtype = ">u2" if maxval > 255 else np.uint8
    count = width * height
    raw = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
    if raw.size != count:
        raise ValueError(f"{path!r}: truncated PGM pixel data")
    return raw.reshape(height, width).astype(float) / maxval


def save_image(path, img: np.ndarray, maxval: int = 65535) -> None:
    """Write a float image in [0, 1] as binary PGM, atomically."""
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise ValueError("image must be 2D")
    if not 0 < maxval < 65536:
        raise ValueError(f"unsupported PGM depth maxval={maxval}")
    q = np.rint(np.clip(img, 0.0, 1.0) * maxval)
    payload = q.astype(">u2" if maxval > 255 else np.uint8).tobytes()
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n{maxval}\n".encode()
    write_atomic(path, header + payload)


def write_atomic(path, payload: bytes) -> None:
    # Write-then-rename so readers never observe a partial file.
    d = os.path.dirname(os.fspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# Geometry

def resize_bilinear(img: np.ndarray, nx: int, ny: int) -> np.ndarray:
    """Bilinear resample to (nx, ny) with pixel-centre alignment."""
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise ValueError("image must be 2D")
    if nx < 1 or ny < 1:
        raise ValueError("output dimensions must be positive")

    def coords(n_out, n_in):
        c = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        return np.clip(c, 0.0, n_in - 1.0)

    def interp_rows(a, c):
        if a.shape[0] == 1:
            return np.repeat(a, len(c), axis=0)
        lo = np.minimum(np.floor(c).astype(np.intp), a.shape[0] - 2)
        t = (c - lo)[:, None]
        return a[lo] + (a[lo + 1] - a[lo]) * t

    out = interp_rows(img, coords(nx, img.shape[0]))
    out = interp_rows(out.T, coords(ny, img.shape[1]))
    return out.T


def symmetrize_point(img: np.ndarray) -> np.ndarray:
    """Point-symmetric version of an image, built from four half-size tiles.

    The output O satisfies O[u, v] == O[(nx-u) % nx, (ny-v) % ny] exactly:
    the image is downsampled to half resolution and tiled 2x2 with
    180-degree-rotated pairs, then the wrap-around seam (row 0 / column 0,
    where the symmetry maps an index to itself shifted) is made exact by
    copying each pixel's orbit partner.
    """
    img = np.asarray(img, dtype=float)
    nx, ny = img.shape
    if nx % 2 or ny % 2:
        raise ValueError("point symmetrisation requires even dimensions")
    half = resize_bilinear(img, nx // 2, ny // 2)
    rot = half[::-1, ::-1]
    tiled = np.block([[half, rot], [rot, half]])
    partner = np.roll(tiled[::-1, ::-1], (1, 1), axis=(0, 1))
    u = np.arange(nx)[:, None]
    v = np.arange(ny)[None, :]
    pu = (-u) % nx
    pv = (-v) % ny
    canonical = (u < pu) | ((u == pu) & (v <= pv))
    return np.where(canonical, tiled, partner)


def embed_central_quadrant(img: np.ndarray, nx: int, ny: int) -> np.ndarray:
    """Resample ``img`` to (nx/2, ny/2) and centre it in an (nx, ny) zero field."""
    img = np.asarray(img, dtype=float)
    qx, qy = nx // 2, ny // 2
    if img.shape[0] > qx or img.shape[1] > qy:
        raise ValueError(
            f"image {img.shape} larger than central quadrant ({qx}, {qy})"
        )
    out = np.zeros((nx, ny))
    x0 = (nx - qx) // 2
    y0 = (ny - qy) // 2
    out[x0:x0 + qx, y0:y0 + qy] = resize_bilinear(img, qx, qy)
    return out


# ---------------------------------------------------------------------------
# Target construction

def scale_energy(T: np.ndarray, budget: float) -> np.ndarray:
    """Rescale a field so sum(|T|^2) equals ``budget`` exactly."""
    T = np.asarray(T)
    if not budget > 0:
        raise ValueError("energy budget must be positive")
    e = float(np.sum(T.real ** 2 + T.imag ** 2))
    if e <= 0:
        raise ValueError("cannot scale a zero-energy target")
    return T * np.sqrt(budget / e)


def energy_budget(spec: SlmSpec) -> float:
    """Replay energy deliverable by the SLM under unit planar illumination.

    Phase SLM pixels are unit modulus, so the aperture (and unitary replay)
    energy is exactly nx*ny.  Amplitude pixels are uniform on [0, 1] at
    initialisation, whose mean square is 1/3, giving nx*ny/3 in expectation.
    """
    if spec.is_phase:
        return float(spec.size)
    return spec.size / 3.0


def build_target(ampl_img: np.ndarray, phase_img: np.ndarray | None,
                 spec: SlmSpec, phase_sensitive: bool, domain=None) -> TargetField:
    """Assemble an energy-scaled complex target from prepared images.

    ``ampl_img`` supplies |T|; a phase image (values in [0, 1], mapped to
    [0, 2pi)) is only meaningful for phase-sensitive targets.  Both images
    must already be at replay-plane resolution (symmetrised / quadrant
    embedded as the protocol demands).
    """
    ampl = np.asarray(ampl_img, dtype=float)
    if ampl.shape != (spec.nx, spec.ny):
        raise ValueError(
            f"amplitude image shape {ampl.shape} != replay plane ({spec.nx}, {spec.ny})"
        )
    if np.any(ampl < 0) or not np.all(np.isfinite(ampl)):
        raise ValueError("amplitude image must be finite and non-negative")
    if phase_img is not None and not phase_sensitive:
        raise ValueError("phase image given but target is phase-insensitive")

    if phase_sensitive and phase_img is not None:
        ph = np.asarray(phase_img, dtype=float)
        if ph.shape != ampl.shape:
            raise ValueError("phase image shape differs from amplitude image")
        T = ampl * np.exp(2j * np.pi * ph)
    else:
        T = ampl.astype(np.complex128)

    budget = energy_budget(spec)
    return TargetField(field=scale_energy(T, budget),
                       phase_sensitive=phase_sensitive,
                       energy=budget)


# ---------------------------------------------------------------------------
# Built-in synthetic test images (license-clean stand-ins for the classic
# photographic test targets; deliberately asymmetric, with structure that
# survives half-resolution resampling).

def synthetic_amplitude(nx: int, ny: int) -> np.ndarray:
    """Off-centre radial gradient combined with a coarse checkerboard.

    The black level is raised to 0.08, matching the behaviour of the
    classic photographic test targets (no true blacks): several closed
    forms divide by the replay magnitude where the target is lit, and
    exact zeros would make those regions artificially pathological.
    """
    x = np.arange(nx)[:, None] / nx
    y = np.arange(ny)[None, :] / ny
    r = np.sqrt((x - 0.37) ** 2 + (y - 0.58) ** 2)
    base = np.clip(1.15 - 1.6 * r, 0.0, 1.0)
    cell = max(4, min(nx, ny) // 16)
    checker = ((np.arange(nx)[:, None] // cell + np.arange(ny)[None, :] // cell) % 2)
    img = 0.72 * base + 0.28 * checker
    return 0.08 + 0.92 * np.clip(img, 0.0, 1.0)


def synthetic_phase(nx: int, ny: int) -> np.ndarray:
    """Diagonal ramp with concentric rings, for use as a phase component."""
    x = np.arange(nx)[:, None] / nx
    y = np.arange(ny)[None, :] / ny
    r = np.sqrt((x - 0.62) ** 2 + (y - 0.31) ** 2)
    img = 0.5 + 0.3 * np.sin(9.0 * np.pi * r) * (1.0 - r) + 0.2 * (x - y)
    return np.clip(img, 0.0, 1.0)
