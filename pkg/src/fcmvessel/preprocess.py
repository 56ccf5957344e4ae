"""
Contrast enhancement and shade correction of the green-channel image.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imageio import check_gray


@dataclass(frozen=True)
class ClaheParams:
    tile_cols: int = 8
    tile_rows: int = 8
    clip_limit: float = 4.0  # multiple of the uniform bin height
    bins: int = 256

    def __post_init__(self):
        if self.tile_cols < 1 or self.tile_rows < 1:
            raise ValueError("tile grid must be at least 1x1")
        if self.bins < 2:
            raise ValueError("bins must be >= 2")
        if not self.clip_limit >= 1:
            raise ValueError("clip_limit must be >= 1")


@dataclass(frozen=True)
class BackgroundModel:
    image: np.ndarray
    window: int


def _tile_edges(length: int, count: int) -> np.ndarray:
    return np.linspace(0, length, count + 1).round().astype(int)


def bin_index(img: np.ndarray, bins: int) -> np.ndarray:
    """Histogram bin of every pixel; [0, 1] split into ``bins`` equal bins."""
    return np.minimum((img * bins).astype(np.int64), bins - 1)


def clipped_histogram(bin_idx: np.ndarray, bins: int, clip_limit: float) -> np.ndarray:
    """Histogram clipped at ``clip_limit`` times the mean bin height.

    Excess mass is spread evenly over all bins, so the total is preserved.
    """
    hist = np.bincount(bin_idx.ravel(), minlength=bins).astype(np.float64)
    limit = clip_limit * bin_idx.size / bins
    excess = np.maximum(hist - limit, 0.0).sum()
    return np.minimum(hist, limit) + excess / bins


def tile_mapping(bin_idx: np.ndarray, bins: int, clip_limit: float) -> np.ndarray:
    """Lookup table bin -> equalized intensity (normalized cumulative histogram)."""
    hist = clipped_histogram(bin_idx, bins, clip_limit)
    cdf = np.cumsum(hist)
    return np.clip(cdf / cdf[-1], 0.0, 1.0)


def _interp_axis(length: int, edges: np.ndarray):
    # Per-pixel neighbouring tile indices and weight of the second one; pixels
    # outside the outermost tile centres use the nearest tile only.
    centers = (edges[:-1] + edges[1:] - 1) / 2.0
    pos = np.arange(length, dtype=np.float64)
    hi = np.searchsorted(centers, pos, side="right")
    lo = np.clip(hi - 1, 0, len(centers) - 1)
    hi = np.clip(hi, 0, len(centers) - 1)
    span = centers[hi] - centers[lo]
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(span > 0, (pos - centers[lo]) / np.where(span > 0, span, 1.0), 0.0)
    return lo, hi, np.clip(w, 0.0, 1.0)


def adaptive_hist_eq(img: np.ndarray, p: ClaheParams = ClaheParams()) -> np.ndarray:
    """Contrast-limited adaptive histogram equalization.

    Each of the ``tile_rows x tile_cols`` tiles gets its own clipped-histogram
    equalization mapping; pixel outputs are bilinearly interpolated between
    the mappings of the four nearest tile centres.
    """
    img = check_gray(img)
    h, w = img.shape
    if h < p.tile_rows or w < p.tile_cols:
        raise ValueError(
            f"image {h}x{w} is smaller than the {p.tile_rows}x{p.tile_cols} tile grid")

    idx = bin_index(img, p.bins)
    redges = _tile_edges(h, p.tile_rows)
    cedges = _tile_edges(w, p.tile_cols)
    luts = np.empty((p.tile_rows, p.tile_cols, p.bins))
    for r in range(p.tile_rows):
        for c in range(p.tile_cols):
            tile = idx[redges[r]:redges[r + 1], cedges[c]:cedges[c + 1]]
            luts[r, c] = tile_mapping(tile, p.bins, p.clip_limit)

    r0, r1, wr = _interp_axis(h, redges)
    c0, c1, wc = _interp_axis(w, cedges)
    R0, R1, WR = r0[:, None], r1[:, None], wr[:, None]
    C0, C1, WC = c0[None, :], c1[None, :], wc[None, :]
    # a + w*(b - a) form: equal neighbouring mappings interpolate exactly
    top = luts[R0, C0, idx]
    top = top + WC * (luts[R0, C1, idx] - top)
    bot = luts[R1, C0, idx]
    bot = bot + WC * (luts[R1, C1, idx] - bot)
    out = top + WR * (bot - top)
    return np.clip(out, 0.0, 1.0)


def estimate_background(img: np.ndarray, window: int = 75) -> BackgroundModel:
    """Median filter with a ``window x window`` square and replicate padding."""
    img = check_gray(img)
    if window < 3 or window % 2 == 0:
        raise ValueError(f"median window must be odd and >= 3, got {window}")
    bg = ndimage.median_filter(img, size=window, mode="nearest")
    return BackgroundModel(image=bg, window=window)


def subtract_background(img: np.ndarray, bg: BackgroundModel) -> np.ndarray:
    """Shade-corrected image ``bg - img`` rescaled to [0, 1].

    Vessels are darker than their surroundings in the green channel, so this
    polarity makes them bright. A constant difference yields all zeros.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.shape != bg.image.shape:
        raise ValueError(f"image shape {img.shape} does not match background {bg.image.shape}")
    diff = bg.image - img
    lo, hi = diff.min(), diff.max()
    if hi == lo:
        return np.zeros_like(diff)
    out = (diff - lo) / (hi - lo)
    return np.clip(out, 0.0, 1.0)
