# cython: boundscheck=False, wraparound=False, cdivision=True
"""Gradient-histogram (HOG) cell features, compiled kernel.

Same contract and arithmetic as ``_gradhist_np.hog_cells``; kept in exact
step-for-step correspondence so the two can be cross-checked.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, floor, hypot, sqrt

cnp.import_array()

DEF N_ORIENT = 9
DEF TRUNC = 0.2
DEF TEXTURE_SCALE = 0.2357
DEF NORM_EPS = 1e-12
DEF TWO_PI = 6.283185307179586


def hog_cells(img, int cell):
    """31-channel HOG cell features of a grayscale image.

    Matches ``codetrack._gradhist_np.hog_cells`` to floating-point
    accumulation order.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] im = np.ascontiguousarray(
        img, dtype=np.float64
    )
    cdef Py_ssize_t h = im.shape[0]
    cdef Py_ssize_t w = im.shape[1]
    cdef Py_ssize_t cr = h // cell
    cdef Py_ssize_t cw = w // cell
    if cr < 1 or cw < 1:
        raise ValueError(f"image {h}x{w} smaller than one {cell}px cell")
    cdef Py_ssize_t hh = cr * cell
    cdef Py_ssize_t ww = cw * cell

    cdef cnp.ndarray[cnp.float64_t, ndim=3] hist = np.zeros((cr, cw, 2 * N_ORIENT))
    cdef double[:, :, ::1] hv = hist
    cdef double[:, ::1] iv = im

    cdef Py_ssize_t x, y, xm, xp, ym, yp, ob, iy0, ix0, iy0c, iy1c, ix0c, ix1c
    cdef double dx, dy, mag, ang, binw, cy, cx, wy1, wx1
    binw = TWO_PI / (2 * N_ORIENT)

    for y in range(hh):
        ym = y - 1 if y > 0 else 0
        yp = y + 1 if y < h - 1 else h - 1
        cy = (y + 0.5) / cell - 0.5
        iy0 = <Py_ssize_t> floor(cy)
        wy1 = cy - iy0
        iy0c = iy0 if iy0 >= 0 else 0
        iy0c = iy0c if iy0c <= cr - 1 else cr - 1
        iy1c = iy0 + 1 if iy0 + 1 >= 0 else 0
        iy1c = iy1c if iy1c <= cr - 1 else cr - 1
        for x in range(ww):
            xm = x - 1 if x > 0 else 0
            xp = x + 1 if x < w - 1 else w - 1
            dx = iv[y, xp] - iv[y, xm]
            dy = iv[yp, x] - iv[ym, x]
            mag = hypot(dx, dy)
            ang = atan2(dy, dx) + TWO_PI
            ang = ang - TWO_PI * floor(ang / TWO_PI)
            ob = <Py_ssize_t> (ang / binw)
            if ob > 2 * N_ORIENT - 1:
                ob = 2 * N_ORIENT - 1
            cx = (x + 0.5) / cell - 0.5
            ix0 = <Py_ssize_t> floor(cx)
            wx1 = cx - ix0
            ix0c = ix0 if ix0 >= 0 else 0
            ix0c = ix0c if ix0c <= cw - 1 else cw - 1
            ix1c = ix0 + 1 if ix0 + 1 >= 0 else 0
            ix1c = ix1c if ix1c <= cw - 1 else cw - 1
            hv[iy0c, ix0c, ob] += (1.0 - wy1) * (1.0 - wx1) * mag
            hv[iy0c, ix1c, ob] += (1.0 - wy1) * wx1 * mag
            hv[iy1c, ix0c, ob] += wy1 * (1.0 - wx1) * mag
            hv[iy1c, ix1c, ob] += wy1 * wx1 * mag

    cdef cnp.ndarray[cnp.float64_t, ndim=3] insens = np.empty((cr, cw, N_ORIENT))
    cdef double[:, :, ::1] cv = insens
    cdef cnp.ndarray[cnp.float64_t, ndim=2] energy = np.zeros((cr, cw))
    cdef double[:, ::1] ev = energy
    cdef Py_ssize_t i, j, o
    cdef double e
    for i in range(cr):
        for j in range(cw):
            e = 0.0
            for o in range(N_ORIENT):
                cv[i, j, o] = hv[i, j, o] + hv[i, j, o + N_ORIENT]
                e += cv[i, j, o] * cv[i, j, o]
            ev[i, j] = e

    cdef cnp.ndarray[cnp.float64_t, ndim=3] out = np.empty((31, cr, cw))
    cdef double[:, :, ::1] ov = out
    cdef Py_ssize_t im1, ip1, jm1, jp1, k
    cdef double n[4]
    cdef double val, acc, tex
    for i in range(cr):
        im1 = i - 1 if i > 0 else 0
        ip1 = i + 1 if i < cr - 1 else cr - 1
        for j in range(cw):
            jm1 = j - 1 if j > 0 else 0
            jp1 = j + 1 if j < cw - 1 else cw - 1
            n[0] = ev[im1, jm1] + ev[im1, j] + ev[i, jm1] + ev[i, j]
            n[1] = ev[im1, j] + ev[im1, jp1] + ev[i, j] + ev[i, jp1]
            n[2] = ev[i, jm1] + ev[i, j] + ev[ip1, jm1] + ev[ip1, j]
            n[3] = ev[i, j] + ev[i, jp1] + ev[ip1, j] + ev[ip1, jp1]
            for k in range(4):
                n[k] = 1.0 / sqrt(n[k] + NORM_EPS)
            for k in range(4):
                tex = 0.0
                for o in range(2 * N_ORIENT):
                    val = hv[i, j, o] * n[k]
                    tex += val if val < TRUNC else TRUNC
                ov[27 + k, i, j] = TEXTURE_SCALE * tex
            for o in range(2 * N_ORIENT):
                acc = 0.0
                for k in range(4):
                    val = hv[i, j, o] * n[k]
                    acc += val if val < TRUNC else TRUNC
                ov[o, i, j] = 0.5 * acc
            for o in range(N_ORIENT):
                acc = 0.0
                for k in range(4):
                    val = cv[i, j, o] * n[k]
                    acc += val if val < TRUNC else TRUNC
                ov[2 * N_ORIENT + o, i, j] = 0.5 * acc
    return out
