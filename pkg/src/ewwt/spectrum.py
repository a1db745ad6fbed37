"""Fourier-domain plumbing.

All spectra use the centered layout: the DC bin sits at ``(H // 2, W // 2)``.
Transforms are unitary, so ``sum(f**2) == sum(abs(F)**2)``.
"""
import os

import numpy as np
import scipy.fft

from .errors import InvalidInputError, SymmetryViolationError

MIN_SIZE = 8
REAL_RESIDUE_TOL = 1e-9


def _workers():
    # EWWT_THREADS: 0 or unset means let scipy decide (all cores).
    n = int(os.environ.get("EWWT_THREADS", "0") or 0)
    return -1 if n <= 0 else n


def as_image(data, min_size=MIN_SIZE):
    """Validate and return a float64 copy-free view of a 2D real image."""
    arr = np.asarray(data)
    if arr.ndim != 2:
        raise InvalidInputError(f"expected a 2D image, got shape {arr.shape}")
    if np.iscomplexobj(arr):
        raise InvalidInputError("image must be real valued")
    arr = arr.astype(np.float64, copy=False)
    h, w = arr.shape
    if h < min_size or w < min_size:
        raise InvalidInputError(f"image must be at least {min_size}x{min_size}, got {h}x{w}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("image contains non-finite values")
    return arr


def center(dims):
    h, w = dims
    return h // 2, w // 2


def forward_fft(image):
    """Unitary 2D DFT of a real image, DC-centered."""
    f = as_image(image)
    return scipy.fft.fftshift(scipy.fft.fft2(f, norm="ortho", workers=_workers()))


def inverse_fft(spectrum, real=True):
    """Inverse of :func:`forward_fft`.

    With ``real=True`` the imaginary part is dropped if it stays below
    ``1e-9 * max(1, max|Re|)``; otherwise a :class:`SymmetryViolationError`
    is raised.
    """
    spec = np.asarray(spectrum)
    if spec.ndim != 2:
        raise InvalidInputError(f"expected a 2D spectrum, got shape {spec.shape}")
    out = scipy.fft.ifft2(scipy.fft.ifftshift(spec), norm="ortho", workers=_workers())
    if not real:
        return out
    residue = np.max(np.abs(out.imag)) if out.size else 0.0
    scale = max(1.0, float(np.max(np.abs(out.real)))) if out.size else 1.0
    if residue > REAL_RESIDUE_TOL * scale:
        raise SymmetryViolationError(
            f"imaginary residue {residue:.3e} exceeds tolerance for a real result"
        )
    return np.ascontiguousarray(out.real)


def symmetric_index(coord, dims):
    """Hermitian mate of a frequency bin in centered layout."""
    k, l = int(coord[0]), int(coord[1])
    h, w = int(dims[0]), int(dims[1])
    if not (0 <= k < h and 0 <= l < w):
        raise InvalidInputError(f"coordinate {(k, l)} outside a {h}x{w} grid")
    return (2 * (h // 2) - k) % h, (2 * (w // 2) - l) % w


def symmetric_map(dims):
    """Row and column index arrays ``(rows, cols)`` such that
    ``plane[rows, cols]`` is ``plane`` evaluated at ``sym(c)`` for every ``c``."""
    h, w = dims
    rows = (2 * (h // 2) - np.arange(h)) % h
    cols = (2 * (w // 2) - np.arange(w)) % w
    return np.ix_(rows, cols)


def reflect(plane):
    """Return ``plane`` composed with the symmetry map."""
    plane = np.asarray(plane)
    return plane[symmetric_map(plane.shape)]


def magnitude_spectrum(image):
    """Centered modulus of the unitary spectrum.

    The result is made exactly sym-symmetric by averaging with its mirror;
    for real input the two differ only by FFT round-off.
    """
    mag = np.abs(forward_fft(image))
    return 0.5 * (mag + reflect(mag))


def export_spectrum(spectrum, path):
    """Write a spectrum as little-endian (re, im) float64 pairs plus a JSON sidecar."""
    from .imageio import write_raw_complex

    return write_raw_complex(spectrum, path, layout="centered")
