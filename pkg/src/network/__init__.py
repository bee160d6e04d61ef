"""
Toy control-conditioned video denoiser.
"""

from .attention import (
    Projection,
    ZeroLinear,
    AttentionWeights,
    self_attention,
    key_frame_attention,
    temporal_attention,
    temporal_branch,
)
from .blocks import SpatioTemporalBlock, ResBlock, Stage, timestep_embedding
from .denoiser import DenoiserConfig, Denoiser, ControlBranch, control_fusion, predict_noise
from .lora import DEFAULT_LORA_TARGETS, attach_lora, merge_lora, lora_parameters, has_lora, restore_adapters

__all__ = [
    "Projection",
    "ZeroLinear",
    "AttentionWeights",
    "self_attention",
    "key_frame_attention",
    "temporal_attention",
    "temporal_branch",
    "SpatioTemporalBlock",
    "ResBlock",
    "Stage",
    "timestep_embedding",
    "DenoiserConfig",
    "Denoiser",
    "ControlBranch",
    "control_fusion",
    "predict_noise",
    "DEFAULT_LORA_TARGETS",
    "attach_lora",
    "merge_lora",
    "lora_parameters",
    "has_lora",
    "restore_adapters",
]
