"""Gradient-histogram (HOG) cell features, NumPy implementation.

Fallback for the compiled kernel in ``_gradhist.pyx``; both compute the
identical 31-channel cell descriptor (18 contrast-sensitive orientation
bins, 9 contrast-insensitive bins, 4 texture-energy channels) with soft
bilinear binning into cells and four-neighbourhood block normalization
truncated at 0.2.
"""
import numpy as np

N_ORIENT = 9
TRUNC = 0.2
TEXTURE_SCALE = 0.2357  # ~ 1/sqrt(18)
NORM_EPS = 1e-12


def hog_cells(img, cell):
    """31-channel HOG cell features of a grayscale image.

    Parameters
    ----------
    img : float64 array (H, W)
    cell : int, cell side in pixels

    Returns
    -------
    float64 array (31, H//cell, W//cell)
    """
    img = np.ascontiguousarray(img, dtype=np.float64)
    h, w = img.shape
    cr, cw = h // cell, w // cell
    if cr < 1 or cw < 1:
        raise ValueError(f"image {h}x{w} smaller than one {cell}px cell")
    hh, ww = cr * cell, cw * cell

    # central-difference gradients, one-sided at the borders
    xp = np.minimum(np.arange(w) + 1, w - 1)
    xm = np.maximum(np.arange(w) - 1, 0)
    yp = np.minimum(np.arange(h) + 1, h - 1)
    ym = np.maximum(np.arange(h) - 1, 0)
    dx = img[:, xp] - img[:, xm]
    dy = img[yp, :] - img[ym, :]

    dx = dx[:hh, :ww]
    dy = dy[:hh, :ww]
    mag = np.hypot(dx, dy)
    ang = np.mod(np.arctan2(dy, dx) + 2.0 * np.pi, 2.0 * np.pi)
    binw = 2.0 * np.pi / (2 * N_ORIENT)
    obin = np.minimum((ang / binw).astype(np.intp), 2 * N_ORIENT - 1)

    # soft bilinear binning of pixel energy into the 4 surrounding cells
    cy = (np.arange(hh) + 0.5) / cell - 0.5
    cx = (np.arange(ww) + 0.5) / cell - 0.5
    iy0 = np.floor(cy).astype(np.intp)
    ix0 = np.floor(cx).astype(np.intp)
    wy1 = cy - iy0
    wx1 = cx - ix0
    iy0c = np.clip(iy0, 0, cr - 1)
    iy1c = np.clip(iy0 + 1, 0, cr - 1)
    ix0c = np.clip(ix0, 0, cw - 1)
    ix1c = np.clip(ix0 + 1, 0, cw - 1)

    hist = np.zeros((cr, cw, 2 * N_ORIENT))
    wy1g, wx1g = wy1[:, None], wx1[None, :]
    for rows, wy in ((iy0c, 1.0 - wy1g), (iy1c, wy1g)):
        for cols, wx in ((ix0c, 1.0 - wx1g), (ix1c, wx1g)):
            np.add.at(
                hist,
                (
                    np.broadcast_to(rows[:, None], (hh, ww)).ravel(),
                    np.broadcast_to(cols[None, :], (hh, ww)).ravel(),
                    obin.ravel(),
                ),
                (wy * wx * mag).ravel(),
            )

    insens = hist[:, :, :N_ORIENT] + hist[:, :, N_ORIENT:]
    energy = np.sum(insens**2, axis=2)

    # four 2x2-block energies around each cell, edges replicated
    ep = np.pad(energy, 1, mode="edge")
    blocks = np.empty((cr, cw, 4))
    blocks[:, :, 0] = ep[0:-2, 0:-2] + ep[0:-2, 1:-1] + ep[1:-1, 0:-2] + ep[1:-1, 1:-1]
    blocks[:, :, 1] = ep[0:-2, 1:-1] + ep[0:-2, 2:] + ep[1:-1, 1:-1] + ep[1:-1, 2:]
    blocks[:, :, 2] = ep[1:-1, 0:-2] + ep[1:-1, 1:-1] + ep[2:, 0:-2] + ep[2:, 1:-1]
    blocks[:, :, 3] = ep[1:-1, 1:-1] + ep[1:-1, 2:] + ep[2:, 1:-1] + ep[2:, 2:]
    norms = 1.0 / np.sqrt(blocks + NORM_EPS)

    out = np.empty((31, cr, cw))
    sens_n = np.minimum(hist[:, :, :, None] * norms[:, :, None, :], TRUNC)
    insens_n = np.minimum(insens[:, :, :, None] * norms[:, :, None, :], TRUNC)
    out[: 2 * N_ORIENT] = 0.5 * np.transpose(np.sum(sens_n, axis=3), (2, 0, 1))
    out[2 * N_ORIENT : 3 * N_ORIENT] = 0.5 * np.transpose(
        np.sum(insens_n, axis=3), (2, 0, 1)
    )
    out[3 * N_ORIENT :] = TEXTURE_SCALE * np.transpose(
        np.sum(sens_n, axis=2), (2, 0, 1)
    )
    return out
