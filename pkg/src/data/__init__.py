"""
Synthetic clips for desk-scale experiments.
"""

from .synthetic import synthesize_video, SYNTHETIC_KINDS

__all__ = [
    "synthesize_video",
    "SYNTHETIC_KINDS",
]
