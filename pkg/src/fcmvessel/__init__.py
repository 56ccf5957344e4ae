"""Unsupervised retinal vessel segmentation with Fuzzy C-Means."""

from .fcm import FcmConfig, FcmResult, fcm_cluster
from .metrics import ConfusionCounts, MetricsReport, compute_metrics, confusion, dice
from .preprocess import ClaheParams
from .segmentation import PipelineConfig, segment_vessels

__version__ = "0.1.0"

__all__ = [
    "ClaheParams", "ConfusionCounts", "FcmConfig", "FcmResult", "MetricsReport",
    "PipelineConfig", "compute_metrics", "confusion", "dice", "fcm_cluster",
    "segment_vessels",
]
