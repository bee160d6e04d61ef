"""
Depth-like map
"""

import torch

from ..base import IControlExtractor
from .common import blur, intensity


class DepthLikeExtractor(IControlExtractor):
    """Blurred intensity"""

    def get_kind_name(self) -> str:
        return "depth_like"

    def extract(self, video: torch.Tensor) -> torch.Tensor:
        return blur(intensity(video))
