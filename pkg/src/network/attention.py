"""
Attention projections and the self / key-frame / temporal attention forms.

Features at an attention site are token tensors of shape (N, S, d): N frames,
S spatial sites per frame, width d.
"""

import math
from typing import Optional

import torch
import torch.nn as nn
import torch.nn.functional as F
from einops import rearrange

from ..models.errors import ShapeMismatchError

KV_MODES = ("key_frame", "self", "key_and_self")


class Projection(nn.Module):
    """Bias-free d_out x d_in projection with an optional low-rank adapter.

    The applied weight is ``weight + lora_scale * lora_B @ lora_A`` when an
    adapter is attached.
    """

    def __init__(self, d_in: int, d_out: Optional[int] = None):
        super().__init__()
        d_out = d_in if d_out is None else d_out
        self.weight = nn.Parameter(torch.empty(d_out, d_in))
        nn.init.normal_(self.weight, std=1.0 / math.sqrt(d_in))
        self.register_parameter("lora_A", None)
        self.register_parameter("lora_B", None)
        self.register_buffer("lora_scale", None)

    @property
    def has_lora(self) -> bool:
        return self.lora_A is not None

    @property
    def rank(self) -> int:
        return 0 if self.lora_A is None else int(self.lora_A.shape[0])

    def effective_weight(self) -> torch.Tensor:
        if self.lora_A is None:
            return self.weight
        return self.weight + self.lora_scale * (self.lora_B @ self.lora_A)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return F.linear(x, self.effective_weight())


class ZeroLinear(nn.Module):
    """Zero-initialized linear layer (the zero gate on a new branch)."""

    def __init__(self, in_features: int, out_features: Optional[int] = None):
        super().__init__()
        self.linear = nn.Linear(in_features, in_features if out_features is None else out_features)
        nn.init.zeros_(self.linear.weight)
        nn.init.zeros_(self.linear.bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.linear(x)


class AttentionWeights(nn.Module):
    """W_Q, W_K, W_V, W_O of one attention site."""

    def __init__(self, dim: int):
        super().__init__()
        self.dim = dim
        self.to_q = Projection(dim)
        self.to_k = Projection(dim)
        self.to_v = Projection(dim)
        self.to_out = Projection(dim)


def _check_tokens(v: torch.Tensor, w: AttentionWeights) -> None:
    if v.dim() != 3:
        raise ShapeMismatchError(f"attention input must be N x S x d, got {tuple(v.shape)}")
    if v.shape[-1] != w.dim:
        raise ShapeMismatchError(f"feature width {v.shape[-1]} does not match d={w.dim}")


def _attend(q_src: torch.Tensor, kv_src: torch.Tensor, w: AttentionWeights) -> torch.Tensor:
    q = w.to_q(q_src)
    k = w.to_k(kv_src)
    v = w.to_v(kv_src)
    scores = q @ k.transpose(-1, -2) / math.sqrt(w.dim)
    return w.to_out(torch.softmax(scores, dim=-1) @ v)


def self_attention(v: torch.Tensor, w: AttentionWeights) -> torch.Tensor:
    """Per-frame attention: queries, keys and values all come from the same frame."""
    _check_tokens(v, w)
    return _attend(v, v, w)


def key_frame_attention(v: torch.Tensor, w: AttentionWeights, k: int = 1,
                        kv_mode: str = "key_frame") -> torch.Tensor:
    """Every frame queries the keys and values of key frame k (1-based).

    ``kv_mode="key_and_self"`` concatenates the key frame's tokens with the
    frame's own tokens; ``kv_mode="self"`` falls back to self-attention.
    """
    _check_tokens(v, w)
    frames = v.shape[0]
    if not 1 <= k <= frames:
        raise ShapeMismatchError(f"key frame {k} outside [1, {frames}]")
    if kv_mode == "self":
        return self_attention(v, w)
    key = v[k - 1:k].expand(frames, -1, -1)
    if kv_mode == "key_frame":
        return _attend(v, key, w)
    if kv_mode == "key_and_self":
        return _attend(v, torch.cat([key, v], dim=1), w)
    raise ValueError(f"Unknown kv mode: {kv_mode}")


def temporal_branch(v: torch.Tensor, w: AttentionWeights, gate: nn.Module) -> torch.Tensor:
    """gate(attention across frames at each spatial site)."""
    _check_tokens(v, w)
    seq = rearrange(v, "n s d -> s n d")
    out = rearrange(_attend(seq, seq, w), "s n d -> n s d")
    return gate(out)


def temporal_attention(v: torch.Tensor, w: AttentionWeights, gate: nn.Module) -> torch.Tensor:
    """Residual temporal branch: v + gate(attn over frames)."""
    return v + temporal_branch(v, w, gate)
