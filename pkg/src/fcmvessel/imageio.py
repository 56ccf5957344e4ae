"""
Image and mask I/O.

Images travel through the package as plain numpy arrays:

* RGB image: ``uint8`` array of shape ``(H, W, 3)``
* gray image: ``float64`` array of shape ``(H, W)`` with values in [0, 1]
* binary mask: ``bool`` array of shape ``(H, W)``, True = vessel
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

HIGHLIGHT = (255, 0, 0)


class ImageDecodeError(ValueError):
    """File exists but is not a decodable raster."""


class ChannelError(ValueError):
    """Raster decoded but does not have the expected channel layout."""


def _open(path) -> Image.Image:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image file: {path}")
    try:
        im = Image.open(path)
        im.load()
    except (OSError, SyntaxError, ValueError) as exc:
        raise ImageDecodeError(f"cannot decode {path}: {exc}") from exc
    return im


def check_rgb(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ChannelError(f"expected an (H, W, 3) RGB array, got shape {img.shape}")
    if img.dtype != np.uint8:
        raise TypeError(f"expected uint8 RGB array, got {img.dtype}")
    return img


def check_gray(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise ValueError(f"expected a non-empty 2-D gray image, got shape {img.shape}")
    if not np.all(np.isfinite(img)) or img.min() < 0.0 or img.max() > 1.0:
        raise ValueError("gray image intensities must be finite and within [0, 1]")
    return img


def load_rgb(path) -> np.ndarray:
    """Load an 8-bit, 3-channel PNG/PPM as an ``(H, W, 3)`` uint8 array."""
    im = _open(path)
    if im.mode != "RGB":
        raise ChannelError(f"{path}: expected 8-bit RGB raster, got mode {im.mode!r}")
    return np.array(im, dtype=np.uint8)


def extract_green(img: np.ndarray) -> np.ndarray:
    """Green channel scaled to [0, 1]."""
    img = check_rgb(img)
    return img[:, :, 1].astype(np.float64) / 255.0


def load_mask(path) -> np.ndarray:
    """Load a mask raster; a pixel is True iff its first channel is nonzero."""
    im = _open(path)
    arr = np.array(im)
    if arr.ndim == 3:
        arr = arr[:, :, 0]
    return arr != 0


def save_mask(mask: np.ndarray, path) -> None:
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {mask.shape}")
    Image.fromarray(np.where(mask, 255, 0).astype(np.uint8)).save(path)


def overlay(base: np.ndarray, mask: np.ndarray) -> np.ndarray:
    base = check_rgb(base)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != base.shape[:2]:
        raise ValueError(f"mask shape {mask.shape} does not match image shape {base.shape[:2]}")
    out = base.copy()
    out[mask] = HIGHLIGHT
    return out


def save_overlay(base: np.ndarray, mask: np.ndarray, path) -> None:
    """Write ``base`` with mask pixels painted pure red."""
    Image.fromarray(overlay(base, mask)).save(path)


def save_rgb(img: np.ndarray, path) -> None:
    Image.fromarray(check_rgb(img)).save(path)
