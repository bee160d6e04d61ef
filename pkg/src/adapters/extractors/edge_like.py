"""
Binary edge map
"""

import torch

from ..base import IControlExtractor
from .common import gradient_magnitude


class EdgeLikeExtractor(IControlExtractor):
    """Thresholded gradient magnitude"""

    def __init__(self, threshold: float = 0.1):
        self.threshold = threshold

    def get_kind_name(self) -> str:
        return "edge_like"

    def extract(self, video: torch.Tensor) -> torch.Tensor:
        return (gradient_magnitude(video) > self.threshold).to(torch.float64)
