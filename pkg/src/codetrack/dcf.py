"""Baseline dual correlation filter: training, response maps, localization.

Everything operates on multi-channel feature stacks of shape (D, M, N) and
stores models in the spectrum domain. Detection uses the linear-kernel
correlation form: the template spectrum is conjugated, and the filter is
rescaled by 1/(2*lambda) so a well-matched patch scores near the label
peak (exactly in the small-lambda limit). These conventions make response
scores directly comparable against the confidence thresholds.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .fourier import dft2, idft2, signed_shift


@dataclass
class DualFilter:
    """Dual filter plane together with its cached spectrum."""

    u: np.ndarray
    u_hat: np.ndarray

    @classmethod
    def from_spectrum(cls, u_hat):
        return cls(u=idft2(u_hat), u_hat=u_hat)


def filter_from_power(y_hat, power, lam):
    """Closed-form dual filter spectrum from a summed feature power spectrum.

    u_hat = y_hat / (power / (2*lam) + 1/2); the denominator is bounded
    below by 1/2, so there is no division hazard.
    """
    return y_hat / (power / (2.0 * lam) + 0.5)


def _check_stack(x, y, c):
    if x.ndim != 3:
        raise DimensionMismatch(f"feature stack must be (D, M, N), got {x.shape}")
    if x.shape[1:] != y.shape or y.shape != c.shape:
        raise DimensionMismatch(
            f"grids differ: features {x.shape[1:]}, labels {y.shape}, window {c.shape}"
        )


def dcf_train(x, y, c, lam):
    """Train a dual correlation filter on a windowed feature stack.

    Channels are combined by summing their windowed power spectra.
    """
    _check_stack(x, y, c)
    if lam <= 0:
        raise DimensionMismatch(f"lam must be > 0, got {lam}")
    xc_hat = np.fft.fft2(c[None] * x, axes=(-2, -1))
    power = np.sum(np.abs(xc_hat) ** 2, axis=0)
    u_hat = filter_from_power(dft2(y), power, lam)
    return DualFilter.from_spectrum(u_hat)


@dataclass
class CfModel:
    """Running appearance template and filter, kept as spectra."""

    template_hat: np.ndarray  # (D, M, N) complex
    filter_hat: np.ndarray  # (M, N) complex
    lam: float

    @property
    def grid(self):
        return self.template_hat.shape[1:]


def make_model(x, filt, lam):
    """Model from an initial feature stack and trained filter."""
    return CfModel(
        template_hat=np.fft.fft2(np.asarray(x, dtype=float), axes=(-2, -1)),
        filter_hat=filt.u_hat.copy(),
        lam=lam,
    )


def response_map(model, x, c):
    """Confidence map of a new feature stack against the model.

    Correlation of the windowed input with the windowed template, shaped by
    the filter: a patch matching the template shifted by (a, b) produces a
    peak at index (a, b).
    """
    if x.shape != model.template_hat.shape:
        raise DimensionMismatch(
            f"feature stack {x.shape} does not match model {model.template_hat.shape}"
        )
    if x.shape[1:] != c.shape:
        raise DimensionMismatch(f"window {c.shape} does not match grid {x.shape[1:]}")
    xc_hat = np.fft.fft2(c[None] * x, axes=(-2, -1))
    template = np.fft.ifft2(model.template_hat, axes=(-2, -1)).real
    tc_hat = np.fft.fft2(c[None] * template, axes=(-2, -1))
    corr = np.sum(xc_hat * np.conj(tc_hat), axis=0)
    return idft2(model.filter_hat / (2.0 * model.lam) * corr)


def localize(resp):
    """Argmax of a response plane as a signed displacement.

    Indices above half the grid wrap to negative displacements; exact ties
    resolve to the lexicographically smallest (dy, dx).
    """
    m, n = resp.shape
    peak = resp.max()
    ties = np.argwhere(resp == peak)
    best = min(
        (signed_shift(int(a), m), signed_shift(int(b), n)) for a, b in ties
    )
    return best[0], best[1], float(peak)


def update_model(model, x_new, u_new, eta):
    """Exponential moving average of template and filter spectra."""
    x_hat = np.fft.fft2(np.asarray(x_new, dtype=float), axes=(-2, -1))
    if x_hat.shape != model.template_hat.shape:
        raise DimensionMismatch(
            f"update stack {x_hat.shape} does not match model "
            f"{model.template_hat.shape}"
        )
    return CfModel(
        template_hat=(1.0 - eta) * model.template_hat + eta * x_hat,
        filter_hat=(1.0 - eta) * model.filter_hat + eta * u_new.u_hat,
        lam=model.lam,
    )
