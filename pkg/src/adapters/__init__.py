"""
Control extractors for ClipForge.
"""

from .base import IControlExtractor, ExtractorRegistry, extract_controls

__all__ = [
    "IControlExtractor",
    "ExtractorRegistry",
    "extract_controls",
]
