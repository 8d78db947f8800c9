"""2-D Fourier transforms, windows, labels and circulant-matrix semantics.

Conventions used everywhere in this package:

* a "plane" is a real 2-D array of shape (M, N), row-major;
* a "spectrum" is the complex array of the same shape;
* the forward transform is unnormalized, the inverse divides by M*N
  (NumPy's default), so Parseval reads ||dft2(p)||^2 = M*N*||p||^2;
* element-wise spectrum products implement circular convolution;
  correlation conjugates the template spectrum at the call site.
"""
import numpy as np

from .errors import GridMismatch, GridTooSmall, ImaginaryResidue, NonPositiveSigma

# |imag| of an inverse transform above this fraction of the spectrum norm is
# treated as a conjugate-symmetry bug rather than roundoff.
IMAG_TOL = 1e-8


def dft2(p):
    """Forward 2-D DFT of a real plane."""
    return np.fft.fft2(p)


def idft2(s):
    """Inverse 2-D DFT; returns the real plane.

    Raises ImaginaryResidue if the imaginary residue exceeds
    IMAG_TOL * ||s||, which signals a non-Hermitian spectrum upstream.
    """
    back = np.fft.ifft2(s)
    scale = np.linalg.norm(s)
    residue = np.max(np.abs(back.imag)) if back.size else 0.0
    if residue > IMAG_TOL * scale:
        raise ImaginaryResidue(
            f"imaginary residue {residue:.3e} exceeds {IMAG_TOL:.0e} * ||s|| = "
            f"{IMAG_TOL * scale:.3e}"
        )
    return back.real


def hann_window(shape):
    """Separable Hann (cosine) taper for an (M, N) grid, values in [0, 1].

    c(m, n) = 0.25 * (1 - cos(2*pi*m/(M-1))) * (1 - cos(2*pi*n/(N-1)))
    """
    m, n = shape
    if m < 2 or n < 2:
        raise GridTooSmall(f"Hann window needs at least a 2x2 grid, got {m}x{n}")
    return np.outer(np.hanning(m), np.hanning(n))


def gaussian_labels(shape, sigma):
    """Gaussian regression target with its peak wrapped to index (0, 0).

    Built centered at (floor(M/2), floor(N/2)) and circularly shifted so a
    zero-displacement response maximum means "no motion".
    """
    if sigma <= 0:
        raise NonPositiveSigma(f"sigma must be > 0, got {sigma}")
    m, n = shape
    cy, cx = m // 2, n // 2
    rows = np.arange(m) - cy
    cols = np.arange(n) - cx
    y = np.exp(-(rows[:, None] ** 2 + cols[None, :] ** 2) / (2.0 * sigma**2))
    return np.roll(y, (-cy, -cx), axis=(0, 1))


def label_sigma(shape, factor=0.1):
    """Default label bandwidth: factor * sqrt(M*N)."""
    m, n = shape
    return factor * np.sqrt(m * n)


def circulant_apply(base, v):
    """Apply the circulant matrix with base vector ``base`` to plane ``v``.

    Computed as idft2(dft2(base) * dft2(v)), i.e. 2-D circular convolution.
    Used by test oracles and documentation; the solvers work on spectra
    directly.
    """
    if base.shape != v.shape:
        raise GridMismatch(f"grids differ: {base.shape} vs {v.shape}")
    return idft2(dft2(base) * dft2(v))


def signed_shift(index, size):
    """Map a wrapped array index to a signed displacement.

    Indices above size/2 wrap to negatives, e.g. size-1 -> -1.
    """
    return index - size if index > size // 2 else index
