"""
Soft boundary map
"""

import torch

from ..base import IControlExtractor
from .common import gradient_magnitude


class BoundaryLikeExtractor(IControlExtractor):
    """Gradient magnitude scaled per frame to [0, 1]"""

    def get_kind_name(self) -> str:
        return "boundary_like"

    def extract(self, video: torch.Tensor) -> torch.Tensor:
        mag = gradient_magnitude(video)
        peak = mag.amax(dim=(1, 2, 3), keepdim=True)
        return torch.where(peak > 0, mag / torch.where(peak > 0, peak, torch.ones_like(peak)),
                           torch.zeros_like(mag))
