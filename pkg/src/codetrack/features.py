"""Search-window cropping and per-layer feature extraction.

Layers are grayscale intensities or HOG cell histograms computed on a
fixed-size canvas, so every model keeps a constant grid as the target
moves and rescales. The HOG kernel is compiled when the extension built;
otherwise the NumPy twin is used. ``COMPILED_KERNELS`` reports which one
is active.
"""
from dataclasses import dataclass

import cv2
import numpy as np

from .boxes import BBox
from .errors import EmptyWindow

try:
    from ._gradhist import hog_cells

    COMPILED_KERNELS = True
except ImportError:  # pragma: no cover - depends on the build
    from ._gradhist_np import hog_cells

    COMPILED_KERNELS = False

LUMA = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class LayerSpec:
    """One feature layer: kind ("gray" or "hog"), cell size, fusion weight."""

    kind: str
    cell: int
    weight: float


DEFAULT_LAYERS = (
    LayerSpec("gray", 1, 0.25),
    LayerSpec("hog", 8, 0.5),
    LayerSpec("hog", 4, 1.0),
)


def to_gray(image):
    """Grayscale float image in [0, 1] from uint8 gray or RGB rasters."""
    arr = np.asarray(image)
    if arr.ndim == 3:
        arr = LUMA[0] * arr[..., 0] + LUMA[1] * arr[..., 1] + LUMA[2] * arr[..., 2]
    arr = arr.astype(np.float64)
    if arr.max() > 1.5:
        arr = arr / 255.0
    return arr


def crop_window(image, bbox, padding):
    """Crop the search window around a box, replicating edges outside.

    The window is the box inflated by ``padding`` (side factor
    1 + padding), rounded to whole pixels.
    """
    h, w = image.shape[:2]
    if bbox.x + bbox.w <= 0 or bbox.y + bbox.h <= 0 or bbox.x >= w or bbox.y >= h:
        raise EmptyWindow(f"box {bbox.as_tuple()} outside {w}x{h} image")
    win_w = max(2, int(round(bbox.w * (1.0 + padding))))
    win_h = max(2, int(round(bbox.h * (1.0 + padding))))
    x0 = int(round(bbox.cx - 0.5 * win_w))
    y0 = int(round(bbox.cy - 0.5 * win_h))
    xs = np.clip(np.arange(x0, x0 + win_w), 0, w - 1)
    ys = np.clip(np.arange(y0, y0 + win_h), 0, h - 1)
    return image[np.ix_(ys, xs)], (win_h, win_w)


def gray_cells(window, cell):
    """Mean-subtracted intensities pooled to the cell grid, shape (1, cr, cw)."""
    h, w = window.shape
    cr, cw = h // cell, w // cell
    if cell > 1:
        pooled = window[: cr * cell, : cw * cell].reshape(cr, cell, cw, cell)
        pooled = pooled.mean(axis=(1, 3))
    else:
        pooled = window
    return (pooled - pooled.mean())[None]


def extract_features(image, bbox, spec, padding, canvas):
    """Feature stack of one layer for the padded window around ``bbox``.

    The cropped window is resized to a square canvas of ``canvas`` pixels
    before cell pooling, so the output grid is (canvas//cell)^2 regardless
    of the box size.
    """
    window, _ = crop_window(image, bbox, padding)
    window = cv2.resize(window, (canvas, canvas), interpolation=cv2.INTER_LINEAR)
    if spec.kind == "gray":
        return gray_cells(window, spec.cell)
    if spec.kind == "hog":
        return hog_cells(window, spec.cell)
    raise ValueError(f"unknown layer kind {spec.kind!r}")


def window_scale(bbox, padding, canvas):
    """Original pixels per canvas pixel for the padded window of ``bbox``."""
    win_w = max(2, int(round(bbox.w * (1.0 + padding))))
    win_h = max(2, int(round(bbox.h * (1.0 + padding))))
    return win_h / canvas, win_w / canvas
