"""
ClipForge - control-conditioned video editing with a toy diffusion engine.
"""

__version__ = "1.0.0"

from .models import ControlStack, PromptEmbedding, embed_prompt, ClipForgeError
from .network import Denoiser, DenoiserConfig
from .platform import ModelManager, DenoiserFactory, RunConfig, run_subcommand
from .adapters.base import ExtractorRegistry

__all__ = [
    "ControlStack",
    "PromptEmbedding",
    "embed_prompt",
    "ClipForgeError",
    "Denoiser",
    "DenoiserConfig",
    "ModelManager",
    "DenoiserFactory",
    "RunConfig",
    "run_subcommand",
    "ExtractorRegistry",
]
