"""
Faithfulness and temporal-consistency metrics.
"""

from .ssim import ssim, ssim_map, video_ssim, gaussian_window, window_size_for
from .consistency import temporal_consistency, drift
from .report import MetricReport, evaluate

__all__ = [
    "ssim",
    "ssim_map",
    "video_ssim",
    "gaussian_window",
    "window_size_for",
    "temporal_consistency",
    "drift",
    "MetricReport",
    "evaluate",
]
