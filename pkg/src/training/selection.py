"""
Trainable-parameter selection
"""

import re
from dataclasses import dataclass, field, asdict
from typing import Any, Dict, Iterable, Tuple

import torch.nn as nn

# group name -> regex over named_parameters() names
PARAMETER_GROUPS: Dict[str, str] = {
    "keyframe_out": r"^(?!control_branches\.)(.*\.)?attn\.to_out\.weight$",
    "control_keyframe_out": r"^control_branches\.(.*\.)?attn\.to_out\.weight$",
    "temporal_attention": r"^(.*\.)?temporal_attn\.to_(q|k|v|out)\.weight$",
    "temporal_gate": r"^(.*\.)?temporal_gate\.linear\.(weight|bias)$",
    "lora": r"^(.*\.)?lora_(A|B)$",
}

DEFAULT_TRAINABLE = ("keyframe_out", "control_keyframe_out", "temporal_attention", "temporal_gate")

# iterations per control kind
DEFAULT_ITERATIONS = {"edge_like": 80, "boundary_like": 300, "depth_like": 500, "pose_like": 1500}


@dataclass
class TrainConfig:
    iterations: int = 80
    learning_rate: float = 3e-5
    trainable_set: Tuple[str, ...] = DEFAULT_TRAINABLE
    seed: int = 0
    adam_betas: Tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8
    key_frame: int = 1
    progress: bool = False
    log_every: int = 50

    def validate(self) -> None:
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning rate must be positive, got {self.learning_rate}")
        for group in self.trainable_set:
            if group not in PARAMETER_GROUPS:
                raise ValueError(f"Unknown parameter group: {group}")

    def metadata(self) -> Dict[str, Any]:
        meta = asdict(self)
        meta.pop("progress")
        meta.pop("log_every")
        meta["optimizer"] = "adam"
        meta["trainable_set"] = list(self.trainable_set)
        meta["adam_betas"] = list(self.adam_betas)
        return meta


def select_parameters(params: nn.Module, groups: Iterable[str]) -> Dict[str, nn.Parameter]:
    """Parameters belonging to any of the named groups, in module order."""
    patterns = []
    for group in groups:
        if group not in PARAMETER_GROUPS:
            raise ValueError(f"Unknown parameter group: {group}")
        patterns.append(re.compile(PARAMETER_GROUPS[group]))
    return {
        name: p for name, p in params.named_parameters()
        if any(pattern.match(name) for pattern in patterns)
    }


def count_trainable(params: nn.Module, cfg: TrainConfig) -> int:
    """Number of scalar parameters a run with ``cfg`` would update."""
    return sum(p.numel() for p in select_parameters(params, cfg.trainable_set).values())
