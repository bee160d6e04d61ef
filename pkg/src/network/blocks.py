"""
Frame-wise building blocks of the toy denoiser
"""

import copy
import math

import torch
import torch.nn as nn
import torch.nn.functional as F
from einops import rearrange

from .attention import (
    AttentionWeights,
    ZeroLinear,
    key_frame_attention,
    self_attention,
    temporal_branch,
)

TEMPORAL_POSITIONS = ("with", "before")
TEMPORAL_INITS = ("copy", "random")
TEMPORAL_STAGES = ("down1", "down2", "mid", "up2", "up1")
DEFAULT_TEMPORAL_STAGES = ("down1", "down2", "up2", "up1")


def timestep_embedding(t: int, dim: int, dtype: torch.dtype = torch.float64) -> torch.Tensor:
    """Sinusoidal embedding of one integer timestep, shape (1, dim)."""
    half = dim // 2
    freqs = torch.exp(-math.log(10000.0) * torch.arange(half, dtype=torch.float64) / half)
    args = float(t) * freqs
    emb = torch.cat([torch.cos(args), torch.sin(args)])
    if dim % 2:
        emb = torch.cat([emb, torch.zeros(1, dtype=torch.float64)])
    return emb.unsqueeze(0).to(dtype)


def groups_for(channels: int) -> int:
    for groups in (8, 4, 2):
        if channels % groups == 0:
            return groups
    return 1


class ResBlock(nn.Module):
    """Residual block of 3x3 convolutions applied to each frame independently."""

    def __init__(self, channels: int, emb_dim: int):
        super().__init__()
        self.norm1 = nn.GroupNorm(groups_for(channels), channels)
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1)
        self.emb_proj = nn.Linear(emb_dim, channels)
        self.norm2 = nn.GroupNorm(groups_for(channels), channels)
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1)

    def forward(self, x: torch.Tensor, emb: torch.Tensor) -> torch.Tensor:
        h = self.conv1(F.silu(self.norm1(x)))
        h = h + self.emb_proj(F.silu(emb))[:, :, None, None]
        h = self.conv2(F.silu(self.norm2(h)))
        return x + h


class SpatioTemporalBlock(nn.Module):
    """Attention block: key-frame attention at the former self-attention site,
    an optional zero-gated temporal branch and a feed-forward layer.

    The temporal attention projections start as copies of the self-attention
    projections, or freshly drawn with ``temporal_init="random"``.
    """

    def __init__(self, dim: int, temporal: bool = True, temporal_position: str = "with",
                 temporal_init: str = "copy"):
        super().__init__()
        if temporal_position not in TEMPORAL_POSITIONS:
            raise ValueError(f"Unknown temporal position: {temporal_position}")
        if temporal_init not in TEMPORAL_INITS:
            raise ValueError(f"Unknown temporal init: {temporal_init}")
        self.dim = dim
        self.temporal_position = temporal_position
        self.norm1 = nn.LayerNorm(dim)
        self.attn = AttentionWeights(dim)
        if temporal:
            self.temporal_attn = copy.deepcopy(self.attn) if temporal_init == "copy" else AttentionWeights(dim)
            self.temporal_gate = ZeroLinear(dim)
        else:
            self.temporal_attn = None
            self.temporal_gate = None
        self.norm2 = nn.LayerNorm(dim)
        self.ff = nn.Sequential(nn.Linear(dim, 2 * dim), nn.GELU(), nn.Linear(2 * dim, dim))

    @property
    def has_temporal(self) -> bool:
        return self.temporal_attn is not None

    def _spatial(self, tokens, key_frame, kv_mode, use_key_frame):
        if use_key_frame:
            return key_frame_attention(tokens, self.attn, key_frame, kv_mode)
        return self_attention(tokens, self.attn)

    def forward(self, x: torch.Tensor, key_frame: int = 1, kv_mode: str = "key_frame",
                use_temporal: bool = True, use_key_frame: bool = True) -> torch.Tensor:
        height, width = x.shape[-2:]
        tokens = rearrange(x, "n d h w -> n (h w) d")
        temporal = use_temporal and self.has_temporal
        if temporal and self.temporal_position == "before":
            tokens = tokens + temporal_branch(self.norm1(tokens), self.temporal_attn, self.temporal_gate)
            normed = self.norm1(tokens)
            tokens = tokens + self._spatial(normed, key_frame, kv_mode, use_key_frame)
        else:
            normed = self.norm1(tokens)
            update = self._spatial(normed, key_frame, kv_mode, use_key_frame)
            if temporal:
                update = update + temporal_branch(normed, self.temporal_attn, self.temporal_gate)
            tokens = tokens + update
        tokens = tokens + self.ff(self.norm2(tokens))
        return rearrange(tokens, "n (h w) d -> n d h w", h=height, w=width)


class Stage(nn.Module):
    """One resolution level: residual block followed by an attention block."""

    def __init__(self, channels: int, emb_dim: int, temporal: bool, temporal_position: str = "with",
                 temporal_init: str = "copy"):
        super().__init__()
        self.res = ResBlock(channels, emb_dim)
        self.block = SpatioTemporalBlock(channels, temporal=temporal, temporal_position=temporal_position,
                                         temporal_init=temporal_init)

    def forward(self, x, emb, key_frame=1, kv_mode="key_frame", use_temporal=True, use_key_frame=True):
        return self.block(self.res(x, emb), key_frame, kv_mode, use_temporal, use_key_frame)


def copy_matching_parameters(target: nn.Module, source: nn.Module) -> None:
    """Copy every parameter of ``source`` whose name also exists in ``target``."""
    own = dict(target.named_parameters())
    with torch.no_grad():
        for name, param in source.named_parameters():
            if name in own and own[name].shape == param.shape:
                own[name].copy_(param)
