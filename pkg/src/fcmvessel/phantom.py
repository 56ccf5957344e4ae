"""
Synthetic fundus-like test images with a known vessel mask.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

WIDTHS = (1, 2, 3, 4, 5)


def _bezier(p: np.ndarray, samples: int) -> np.ndarray:
    t = np.linspace(0.0, 1.0, samples)[:, None]
    p0, p1, p2, p3 = p
    return ((1 - t) ** 3 * p0 + 3 * (1 - t) ** 2 * t * p1
            + 3 * (1 - t) * t ** 2 * p2 + t ** 3 * p3)


def _stroke(shape, curve: np.ndarray, width: int) -> np.ndarray:
    h, w = shape
    rc = np.round(curve).astype(int)
    ok = (rc[:, 0] >= 0) & (rc[:, 0] < h) & (rc[:, 1] >= 0) & (rc[:, 1] < w)
    center = np.zeros(shape, dtype=bool)
    center[rc[ok, 0], rc[ok, 1]] = True
    if width <= 1:
        return center
    dist = ndimage.distance_transform_edt(~center)
    return dist <= (width - 1) / 2.0


def make_phantom(seed: int = 0, width: int = 256, height: int = 256,
                 n_vessels: int = 10, contrast: float = 0.35, noise: float = 0.02):
    """Generate ``(rgb_image, vessel_mask)``.

    The green channel is a bright background under a smooth illumination
    gradient, crossed by dark cubic-Bezier vessels of widths 1 to 5 pixels.
    Deterministic for a given seed.
    """
    if width < 8 or height < 8:
        raise ValueError("phantom must be at least 8x8")
    rng = np.random.default_rng(seed)
    shape = (height, width)
    scale = np.array([height - 1, width - 1], dtype=np.float64)

    mask = np.zeros(shape, dtype=bool)
    samples = 8 * (width + height)
    for k in range(n_vessels):
        # endpoints on opposite borders so curves cross the whole field
        a, b = rng.random(2)
        if k % 2:
            ends = np.array([[a, 0.0], [b, 1.0]])
        else:
            ends = np.array([[0.0, a], [1.0, b]])
        ctrl = rng.random((2, 2))
        pts = np.vstack([ends[0], ctrl, ends[1]]) * scale
        mask |= _stroke(shape, _bezier(pts, samples), WIDTHS[k % len(WIDTHS)])

    yy, xx = np.mgrid[0:height, 0:width] / scale[:, None, None]
    gx, gy = rng.uniform(-0.15, 0.15, size=2)
    r2 = (yy - 0.5) ** 2 + (xx - 0.5) ** 2
    illum = 0.65 + gx * (xx - 0.5) + gy * (yy - 0.5) - 0.25 * r2

    green = illum * np.where(mask, 1.0 - contrast, 1.0)
    green = green + rng.normal(0.0, noise, size=shape)
    green = np.clip(green, 0.0, 1.0)

    rgb = np.empty(shape + (3,), dtype=np.uint8)
    rgb[:, :, 0] = np.round(np.clip(green * 1.3, 0, 1) * 255)
    rgb[:, :, 1] = np.round(green * 255)
    rgb[:, :, 2] = np.round(green * 0.4 * 255)
    return rgb, mask
