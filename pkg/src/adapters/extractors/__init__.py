"""
Toy control extractors.
"""

from .edge_like import EdgeLikeExtractor
from .boundary_like import BoundaryLikeExtractor
from .depth_like import DepthLikeExtractor
from .pose_like import PoseLikeExtractor

__all__ = [
    "EdgeLikeExtractor",
    "BoundaryLikeExtractor",
    "DepthLikeExtractor",
    "PoseLikeExtractor",
]
