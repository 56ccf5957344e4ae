"""
End-to-end vessel segmentation: green channel, CLAHE, median shade
correction, FCM on pixel intensities, then hardening and speckle removal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import imageio
from .fcm import FcmConfig, FcmResult, fcm_cluster
from .preprocess import ClaheParams, adaptive_hist_eq, estimate_background, subtract_background

EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass
class PipelineConfig:
    clahe: ClaheParams = field(default_factory=ClaheParams)
    median_window: int = 75
    fcm: FcmConfig = field(default_factory=FcmConfig)
    min_component_px: int = 30
    fov_mask: np.ndarray | None = None

    def __post_init__(self):
        if self.median_window < 3 or self.median_window % 2 == 0:
            raise ValueError(f"median_window must be odd and >= 3, got {self.median_window}")
        if self.min_component_px < 0:
            raise ValueError("min_component_px must be >= 0")


def defuzzify(u: np.ndarray, width: int, height: int) -> np.ndarray:
    """Label image of maximum-membership cluster indices (ties -> lower index)."""
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[1] != width * height:
        raise ValueError(f"membership with {u.shape[-1]} columns cannot fill a {width}x{height} image")
    return np.argmax(u, axis=0).reshape(height, width)


def select_vessel_cluster(centroids) -> int:
    """Index of the brightest centroid; vessels are bright after shade correction."""
    return int(np.argmax(np.asarray(centroids, dtype=np.float64).reshape(-1)))


def binarize(labels: np.ndarray, vessel: int, c: int | None = None) -> np.ndarray:
    if vessel < 0 or (c is not None and vessel >= c):
        raise ValueError(f"vessel cluster index {vessel} out of range")
    return np.asarray(labels) == vessel


def filter_small_components(mask: np.ndarray, min_px: int) -> np.ndarray:
    """Drop 8-connected foreground components smaller than ``min_px`` pixels."""
    mask = np.asarray(mask, dtype=bool)
    if min_px <= 0 or not mask.any():
        return mask.copy()
    labels, count = ndimage.label(mask, structure=EIGHT_CONNECTED)
    sizes = np.bincount(labels.ravel(), minlength=count + 1)
    keep = sizes >= min_px
    keep[0] = False
    return keep[labels]


def shade_corrected(img: np.ndarray, cfg: PipelineConfig) -> np.ndarray:
    """The preprocessing chain up to the image that gets clustered."""
    gray = imageio.extract_green(img)
    eq = adaptive_hist_eq(gray, cfg.clahe)
    bg = estimate_background(eq, cfg.median_window)
    return subtract_background(eq, bg)


def segment_vessels(img: np.ndarray, cfg: PipelineConfig = None) -> tuple[np.ndarray, FcmResult]:
    """Segment the vessels of an RGB fundus image.

    Returns the binary vessel mask and the FCM result. When ``cfg.fov_mask``
    is set, only pixels inside it are clustered and everything outside is
    reported as background.
    """
    cfg = cfg or PipelineConfig()
    img = imageio.check_rgb(img)
    h, w = img.shape[:2]
    fov = cfg.fov_mask
    if fov is not None:
        fov = np.asarray(fov, dtype=bool)
        if fov.shape != (h, w):
            raise ValueError(f"FOV mask shape {fov.shape} does not match image {(h, w)}")

    norm = shade_corrected(img, cfg)
    values = norm.ravel() if fov is None else norm[fov]
    result = fcm_cluster(values, cfg.fcm)

    vessel = select_vessel_cluster(result.centroids)
    if fov is None:
        labels = defuzzify(result.membership, w, h)
        mask = binarize(labels, vessel, cfg.fcm.c)
    else:
        mask = np.zeros((h, w), dtype=bool)
        mask[fov] = np.argmax(result.membership, axis=0) == vessel
    return filter_small_components(mask, cfg.min_component_px), result
