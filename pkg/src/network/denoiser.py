"""
The toy control-conditioned video denoiser
"""

from dataclasses import dataclass, asdict
from typing import Any, Dict, List, Optional, Sequence, Tuple

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..models.controls import ControlStack, apply_mask_to_controls
from ..models.errors import ControlStackError, ShapeMismatchError
from ..models.prompt import PromptEmbedding
from ..models.video import LatentVideo, check_video
from .attention import KV_MODES
from .blocks import (
    DEFAULT_TEMPORAL_STAGES,
    TEMPORAL_INITS,
    TEMPORAL_POSITIONS,
    TEMPORAL_STAGES,
    Stage,
    copy_matching_parameters,
    groups_for,
    timestep_embedding,
)

DTYPES = {"float64": torch.float64, "float32": torch.float32}


@dataclass
class DenoiserConfig:
    channels: int = 4
    width: int = 32
    control_channels: int = 1
    num_controls: int = 1
    text_dim: int = 16
    max_tokens: int = 8
    kv_mode: str = "key_frame"
    temporal_position: str = "with"
    # ablation switches for temporal attention: initialization and placement
    temporal_init: str = "copy"
    temporal_stages: Tuple[str, ...] = DEFAULT_TEMPORAL_STAGES
    control_temporal: bool = False
    use_temporal: bool = True
    use_controls: bool = True
    use_key_frame: bool = True
    dtype: str = "float64"

    def validate(self) -> None:
        if self.kv_mode not in KV_MODES:
            raise ValueError(f"Unknown kv mode: {self.kv_mode}")
        if self.temporal_position not in TEMPORAL_POSITIONS:
            raise ValueError(f"Unknown temporal position: {self.temporal_position}")
        if self.temporal_init not in TEMPORAL_INITS:
            raise ValueError(f"Unknown temporal init: {self.temporal_init}")
        for stage in self.temporal_stages:
            if stage not in TEMPORAL_STAGES:
                raise ValueError(f"Unknown temporal stage: {stage}")
        if self.dtype not in DTYPES:
            raise ValueError(f"Unknown dtype: {self.dtype}")
        for name in ("channels", "width", "control_channels", "text_dim", "max_tokens"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.num_controls < 0:
            raise ValueError("num_controls must be >= 0")

    @property
    def torch_dtype(self) -> torch.dtype:
        return DTYPES[self.dtype]

    def has_temporal(self, stage: str, control: bool = False) -> bool:
        """Whether ``stage`` of the main network (or of a control branch) carries temporal attention."""
        return stage in self.temporal_stages and (self.control_temporal or not control)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["temporal_stages"] = list(self.temporal_stages)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DenoiserConfig":
        data = dict(data)
        if "temporal_stages" in data:
            data["temporal_stages"] = tuple(data["temporal_stages"])
        return cls(**data)


def control_fusion(h_u: torch.Tensor, branch_features: Sequence[Tuple[torch.Tensor, float]]) -> torch.Tensor:
    """h = h_u + sum_i lambda_i h_c,i."""
    h = h_u
    for idx, (h_c, scale) in enumerate(branch_features):
        if h_c.shape != h_u.shape:
            raise ShapeMismatchError(
                f"control feature {idx} has shape {tuple(h_c.shape)}, expected {tuple(h_u.shape)}"
            )
        h = h + scale * h_c
    return h


def _make_stage(cfg: DenoiserConfig, name: str, control: bool = False) -> Stage:
    return Stage(cfg.width, cfg.width, temporal=cfg.has_temporal(name, control),
                 temporal_position=cfg.temporal_position, temporal_init=cfg.temporal_init)


class ControlBranch(nn.Module):
    """Trainable copy of the main encoder and middle stage for one control type.

    Its outputs pass through zero convolutions before reaching the decoder
    skips, so a fresh branch contributes nothing. Temporal attention is only
    present when ``cfg.control_temporal`` is set.
    """

    def __init__(self, cfg: DenoiserConfig):
        super().__init__()
        width = cfg.width
        self.cond_embed = nn.Sequential(
            nn.Conv2d(cfg.control_channels, width, 3, padding=1), nn.SiLU(),
            nn.Conv2d(width, width, 3, padding=1),
        )
        self.conv_in = nn.Conv2d(cfg.channels, width, 3, padding=1)
        self.down1 = _make_stage(cfg, "down1", control=True)
        self.downsample1 = nn.Conv2d(width, width, 3, stride=2, padding=1)
        self.down2 = _make_stage(cfg, "down2", control=True)
        self.downsample2 = nn.Conv2d(width, width, 3, stride=2, padding=1)
        self.mid = _make_stage(cfg, "mid", control=True)
        self.zero_convs = nn.ModuleList(nn.Conv2d(width, width, 1) for _ in range(3))
        for conv in self.zero_convs:
            nn.init.zeros_(conv.weight)
            nn.init.zeros_(conv.bias)

    def forward(self, xt, control, emb, key_frame, kv_mode, use_key_frame,
                use_temporal: bool = True) -> List[torch.Tensor]:
        h = self.conv_in(xt) + self.cond_embed(control)
        s1 = self.down1(h, emb, key_frame, kv_mode, use_temporal, use_key_frame)
        s2 = self.down2(self.downsample1(s1), emb, key_frame, kv_mode, use_temporal, use_key_frame)
        m = self.mid(self.downsample2(s2), emb, key_frame, kv_mode, use_temporal, use_key_frame)
        return [conv(feat) for conv, feat in zip(self.zero_convs, (s1, s2, m))]


class Denoiser(nn.Module):
    """eps_theta(X_t, C, p, t) on latent videos of shape N x C x H x W (H, W divisible by 4)."""

    def __init__(self, cfg: Optional[DenoiserConfig] = None):
        super().__init__()
        self.cfg = cfg or DenoiserConfig()
        self.cfg.validate()
        cfg = self.cfg
        width = cfg.width
        self.time_mlp = nn.Sequential(nn.Linear(width, width), nn.SiLU(), nn.Linear(width, width))
        self.prompt_proj = nn.Linear(self.cfg.text_dim, width)
        self.conv_in = nn.Conv2d(self.cfg.channels, width, 3, padding=1)
        self.down1 = _make_stage(cfg, "down1")
        self.downsample1 = nn.Conv2d(width, width, 3, stride=2, padding=1)
        self.down2 = _make_stage(cfg, "down2")
        self.downsample2 = nn.Conv2d(width, width, 3, stride=2, padding=1)
        self.mid = _make_stage(cfg, "mid")
        self.fuse2 = nn.Conv2d(2 * width, width, 1)
        self.up2 = _make_stage(cfg, "up2")
        self.fuse1 = nn.Conv2d(2 * width, width, 1)
        self.up1 = _make_stage(cfg, "up1")
        self.norm_out = nn.GroupNorm(groups_for(width), width)
        self.conv_out = nn.Conv2d(width, self.cfg.channels, 3, padding=1)
        self.control_branches = nn.ModuleList(ControlBranch(self.cfg) for _ in range(self.cfg.num_controls))
        for branch in self.control_branches:
            copy_matching_parameters(branch, self)
        self.to(self.cfg.torch_dtype)

    def embed(self, prompt: PromptEmbedding, t: int) -> torch.Tensor:
        dtype = self.conv_in.weight.dtype
        time = self.time_mlp(timestep_embedding(t, self.cfg.width, dtype))
        text = self.prompt_proj(prompt.vectors.to(dtype).mean(dim=0, keepdim=True))
        return time + text

    def _control_features(self, xt, stack, emb, key_frame, kv_mode, use_key_frame, use_temporal):
        if stack is None or len(stack) == 0:
            return []
        if len(stack) > len(self.control_branches):
            raise ControlStackError(
                f"{len(stack)} controls given but the model has {len(self.control_branches)} branches"
            )
        stack.validate(frames=int(xt.shape[0]))
        masked = apply_mask_to_controls(stack)
        per_branch = []
        for branch, control, scale in zip(self.control_branches, masked.controls, masked.scales):
            if control.shape[1] != self.cfg.control_channels or control.shape[-2:] != xt.shape[-2:]:
                raise ShapeMismatchError(
                    f"control shape {tuple(control.shape)} does not fit latent {tuple(xt.shape)}"
                )
            feats = branch(xt, control.to(xt.dtype), emb, key_frame, kv_mode, use_key_frame, use_temporal)
            per_branch.append((feats, float(scale)))
        return per_branch

    def forward(self, xt: LatentVideo, stack: Optional[ControlStack], prompt: PromptEmbedding,
                t: int, key_frame: int = 1, branches: bool = True) -> LatentVideo:
        """Predict the noise in xt; ``branches=False`` deletes temporal and control branches."""
        check_video(xt, "xt")
        if xt.shape[1] != self.cfg.channels:
            raise ShapeMismatchError(f"expected {self.cfg.channels} channels, got {xt.shape[1]}")
        if xt.shape[-1] % 4 or xt.shape[-2] % 4:
            raise ShapeMismatchError(f"height and width must be divisible by 4, got {tuple(xt.shape[-2:])}")
        frames = int(xt.shape[0])
        if not 1 <= key_frame <= frames:
            raise ShapeMismatchError(f"key frame {key_frame} outside [1, {frames}]")
        cfg = self.cfg
        use_temporal = branches and cfg.use_temporal
        use_controls = branches and cfg.use_controls
        kv_mode, use_kf = cfg.kv_mode, cfg.use_key_frame
        emb = self.embed(prompt, t)

        controls = []
        if use_controls:
            controls = self._control_features(xt, stack, emb, key_frame, kv_mode, use_kf, use_temporal)

        h = self.conv_in(xt)
        s1 = self.down1(h, emb, key_frame, kv_mode, use_temporal, use_kf)
        s2 = self.down2(self.downsample1(s1), emb, key_frame, kv_mode, use_temporal, use_kf)
        m = self.mid(self.downsample2(s2), emb, key_frame, kv_mode, use_temporal, use_kf)

        if controls:
            s1 = control_fusion(s1, [(feats[0], scale) for feats, scale in controls])
            s2 = control_fusion(s2, [(feats[1], scale) for feats, scale in controls])
            m = control_fusion(m, [(feats[2], scale) for feats, scale in controls])

        u = F.interpolate(m, scale_factor=2, mode="nearest")
        u = self.up2(self.fuse2(torch.cat([u, s2], dim=1)), emb, key_frame, kv_mode, use_temporal, use_kf)
        u = F.interpolate(u, scale_factor=2, mode="nearest")
        u = self.up1(self.fuse1(torch.cat([u, s1], dim=1)), emb, key_frame, kv_mode, use_temporal, use_kf)
        return self.conv_out(F.silu(self.norm_out(u)))


def predict_noise(xt: LatentVideo, stack: Optional[ControlStack], prompt: PromptEmbedding, t: int,
                  params: Denoiser, key_frame: int = 1) -> LatentVideo:
    """Full forward pass of the denoiser."""
    return params(xt, stack, prompt, t, key_frame=key_frame)
