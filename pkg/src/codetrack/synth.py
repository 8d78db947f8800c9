"""Deterministic synthetic sequences for regression tests and demos.

A strongly textured square target moves over a smooth textured background;
ground truth is exact by construction. All generators are pure functions
of their seed.
"""
import os

import cv2
import numpy as np

from .boxes import BBox

FRAME_W, FRAME_H = 320, 240
TARGET = 64


def _background(rng):
    coarse = rng.uniform(70.0, 150.0, size=(18, 24))
    bg = cv2.resize(coarse, (FRAME_W, FRAME_H), interpolation=cv2.INTER_CUBIC)
    return np.clip(bg, 0, 255)


def _target_master(rng, side=256):
    """High-contrast smooth pattern with a bright ring, at master resolution.

    Smooth gradients (cubic block upsampling) keep HOG responses stable
    under the small resampling-ratio changes the scale pyramid probes.
    """
    blocks = rng.uniform(0.0, 255.0, size=(8, 8))
    patch = cv2.resize(blocks, (side, side), interpolation=cv2.INTER_NEAREST)
    yy, xx = np.mgrid[0:side, 0:side]
    rad = np.hypot(yy - side / 2, xx - side / 2)
    ring = np.abs(rad - side * 0.33) < side * 0.06
    patch[ring] = 255.0
    patch[rad < side * 0.12] = 20.0
    # band-limit the block edges so resampling at nearby ratios stays stable
    patch = cv2.GaussianBlur(patch, (0, 0), side / 128.0)
    return np.clip(patch, 0, 255)


def _render(bg, master, box):
    """Composite the master patch at exact float position and scale.

    An affine warp keeps motion and zoom continuous (no integer-size
    resampling lattice), like a camera would.
    """
    frame = bg.copy()
    side = master.shape[0]
    warp = np.array(
        [[box.w / side, 0.0, box.x], [0.0, box.h / side, box.y]]
    )
    cv2.warpAffine(
        master,
        warp,
        (FRAME_W, FRAME_H),
        dst=frame,
        flags=cv2.INTER_LINEAR,
        borderMode=cv2.BORDER_TRANSPARENT,
    )
    return np.clip(frame, 0, 255).astype(np.uint8)


def _sequence(positions_sizes, seed):
    rng = np.random.default_rng(seed)
    bg = _background(rng)
    master = _target_master(rng)
    frames, boxes = [], []
    for (x, y), (w, h) in positions_sizes:
        box = BBox(float(x), float(y), float(w), float(h))
        frames.append(_render(bg, master, box))
        boxes.append(box)
    return frames, boxes


def static_sequence(n_frames=50, seed=0):
    pos = ((FRAME_W - TARGET) // 2, (FRAME_H - TARGET) // 2)
    return _sequence([(pos, (TARGET, TARGET))] * n_frames, seed)


def translation_sequence(n_frames=100, velocity=(2, 0), seed=0):
    vx, vy = velocity
    x0, y0 = 20, (FRAME_H - TARGET) // 2
    steps = [
        ((x0 + vx * t, y0 + vy * t), (TARGET, TARGET)) for t in range(n_frames)
    ]
    return _sequence(steps, seed)


def zoom_sequence(n_frames=60, rate=1.01, seed=0):
    cx, cy = FRAME_W / 2, FRAME_H / 2
    steps = []
    for t in range(n_frames):
        side = TARGET * rate**t
        steps.append(((cx - side / 2, cy - side / 2), (side, side)))
    return _sequence(steps, seed)


def teleport_sequence(n_frames=60, jump_at=30, seed=0):
    a = (30, 30)
    b = (FRAME_W - TARGET - 30, FRAME_H - TARGET - 30)
    steps = [
        ((a if t < jump_at else b), (TARGET, TARGET)) for t in range(n_frames)
    ]
    return _sequence(steps, seed)


def write_otb_sequence(root, name, frames, boxes):
    """Write frames and ground truth in the benchmark directory layout."""
    seq_dir = os.path.join(root, name)
    img_dir = os.path.join(seq_dir, "img")
    os.makedirs(img_dir, exist_ok=True)
    for i, frame in enumerate(frames):
        cv2.imwrite(os.path.join(img_dir, f"{i + 1:04d}.png"), frame)
    with open(os.path.join(seq_dir, "groundtruth_rect.txt"), "w") as fh:
        for box in boxes:
            # 1-based coordinates, the convention of the published datasets
            fh.write(
                f"{box.x + 1:.0f},{box.y + 1:.0f},{box.w:.0f},{box.h:.0f}\n"
            )
    return seq_dir
