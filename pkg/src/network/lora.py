"""
Low-rank adapters on attention projections
"""

import fnmatch
import logging
import math
from typing import Dict, Iterable, List, Optional

import torch
import torch.nn as nn

from ..models.errors import LoRAError
from .attention import Projection

logger = logging.getLogger(__name__)

# main-branch key-frame attention projections at every stage
DEFAULT_LORA_TARGETS = ("down*.block.attn.*", "mid.block.attn.*", "up*.block.attn.*")


def projection_modules(model: nn.Module) -> Dict[str, Projection]:
    return {name: mod for name, mod in model.named_modules() if isinstance(mod, Projection)}


def match_targets(model: nn.Module, targets: Iterable[str] = DEFAULT_LORA_TARGETS) -> Dict[str, Projection]:
    patterns = list(targets)
    return {
        name: mod for name, mod in projection_modules(model).items()
        if any(fnmatch.fnmatchcase(name, pattern) for pattern in patterns)
    }


def attach_lora(params: nn.Module, targets: Iterable[str] = DEFAULT_LORA_TARGETS, rank: int = 4,
                scale: float = 1.0, seed: int = 0) -> nn.Module:
    """Attach fresh adapters (B = 0) to every projection matching ``targets``."""
    selected = match_targets(params, targets)
    if not selected:
        raise LoRAError(f"no projection matches {list(targets)}")
    if rank < 1:
        raise LoRAError(f"rank must be >= 1, got {rank}")
    gen = torch.Generator().manual_seed(seed)
    for name, proj in selected.items():
        d_out, d_in = proj.weight.shape
        if rank > min(d_in, d_out):
            raise LoRAError(f"rank {rank} exceeds dimension {min(d_in, d_out)} of {name}")
        if proj.has_lora:
            raise LoRAError(f"{name} already carries an adapter")
        dtype = proj.weight.dtype
        a = torch.randn(rank, d_in, generator=gen, dtype=torch.float64) / math.sqrt(d_in)
        proj.lora_A = nn.Parameter(a.to(dtype))
        proj.lora_B = nn.Parameter(torch.zeros(d_out, rank, dtype=dtype))
        proj.lora_scale = torch.tensor(float(scale), dtype=dtype)
    logger.info("attached rank-%d adapters to %d projections", rank, len(selected))
    return params


def lora_parameters(params: nn.Module) -> Dict[str, nn.Parameter]:
    return {name: p for name, p in params.named_parameters() if name.endswith(("lora_A", "lora_B"))}


def has_lora(params: nn.Module) -> bool:
    return any(proj.has_lora for proj in projection_modules(params).values())


def merge_lora(params: nn.Module) -> nn.Module:
    """Fold every adapter into its base weight and remove it."""
    merged = 0
    with torch.no_grad():
        for proj in projection_modules(params).values():
            if not proj.has_lora:
                continue
            proj.weight.copy_(proj.effective_weight())
            proj.lora_A = None
            proj.lora_B = None
            proj.lora_scale = None
            merged += 1
    logger.info("merged %d adapters", merged)
    return params


def restore_adapters(params: nn.Module, state: Dict[str, torch.Tensor]) -> List[str]:
    """Recreate adapter slots present in a saved state so ``load_state_dict`` can fill them."""
    restored = []
    for name, proj in projection_modules(params).items():
        key = f"{name}.lora_A" if name else "lora_A"
        if key not in state or proj.has_lora:
            continue
        prefix = key[: -len("lora_A")]
        dtype = proj.weight.dtype
        proj.lora_A = nn.Parameter(torch.zeros_like(state[key], dtype=dtype))
        proj.lora_B = nn.Parameter(torch.zeros_like(state[prefix + "lora_B"], dtype=dtype))
        proj.lora_scale = torch.zeros((), dtype=dtype)
        restored.append(name)
    return restored
