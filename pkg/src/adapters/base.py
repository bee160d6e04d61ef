"""
Control extractor interface and registry
"""

from abc import ABC, abstractmethod
from typing import Dict, List, Optional, Sequence, Union

import torch

from ..models.controls import ControlStack
from ..models.video import check_video


class IControlExtractor(ABC):
    """Interface for per-frame control extractors"""

    @abstractmethod
    def get_kind_name(self) -> str:
        """Get control kind name"""
        pass

    @abstractmethod
    def extract(self, video: torch.Tensor) -> torch.Tensor:
        """Map an N x C x H x W clip to N x 1 x H x W controls"""
        pass

    def validate(self, video: torch.Tensor) -> bool:
        """Validate input video"""
        check_video(video)
        return True


class ExtractorRegistry:
    """Simple registry for control extractors"""

    def __init__(self):
        self._extractors: Dict[str, IControlExtractor] = {}
        self._register_default_extractors()

    def register_extractor(self, extractor: IControlExtractor):
        """Register control extractor"""
        self._extractors[extractor.get_kind_name()] = extractor

    def get_extractor(self, kind: str) -> IControlExtractor:
        """Get extractor by kind name"""
        if kind not in self._extractors:
            raise ValueError(f"Unknown control kind: {kind}")
        return self._extractors[kind]

    def get_available_kinds(self) -> List[str]:
        """Get list of available control kinds"""
        return list(self._extractors.keys())

    def _register_default_extractors(self):
        from .extractors.edge_like import EdgeLikeExtractor
        from .extractors.boundary_like import BoundaryLikeExtractor
        from .extractors.depth_like import DepthLikeExtractor
        from .extractors.pose_like import PoseLikeExtractor

        for extractor in (EdgeLikeExtractor(), BoundaryLikeExtractor(),
                          DepthLikeExtractor(), PoseLikeExtractor()):
            self.register_extractor(extractor)


def extract_controls(video: torch.Tensor, kind: Union[str, Sequence[str]],
                     registry: Optional[ExtractorRegistry] = None,
                     scales: Optional[List[float]] = None) -> ControlStack:
    """Run one extractor per kind and stack the results."""
    registry = registry or ExtractorRegistry()
    kinds = [kind] if isinstance(kind, str) else list(kind)
    controls = []
    for name in kinds:
        extractor = registry.get_extractor(name)
        extractor.validate(video)
        controls.append(extractor.extract(video))
    return ControlStack(controls=controls, scales=list(scales or []), kinds=kinds)
