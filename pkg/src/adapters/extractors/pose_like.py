"""
Keypoint raster at the object centroid
"""

import torch

from ..base import IControlExtractor
from .common import intensity


class PoseLikeExtractor(IControlExtractor):
    """One hot pixel per frame at the rounded centroid of the foreground.

    Foreground pixels are those whose intensity differs from the frame median
    by more than half of the largest such difference. Frames without contrast
    produce an all-zero raster.
    """

    def get_kind_name(self) -> str:
        return "pose_like"

    def extract(self, video: torch.Tensor) -> torch.Tensor:
        img = intensity(video)
        n, _, height, width = img.shape
        out = torch.zeros_like(img)
        rows = torch.arange(height, dtype=torch.float64).view(height, 1).expand(height, width)
        cols = torch.arange(width, dtype=torch.float64).view(1, width).expand(height, width)
        for i in range(n):
            frame = img[i, 0]
            deviation = (frame - frame.median()).abs()
            peak = deviation.max()
            if peak == 0:
                continue
            fg = deviation > 0.5 * peak
            r = int(torch.round(rows[fg].mean()))
            c = int(torch.round(cols[fg].mean()))
            out[i, 0, r, c] = 1.0
        return out
