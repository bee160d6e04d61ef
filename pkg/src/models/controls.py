"""
Visual control stack model
"""

from dataclasses import dataclass, field
from typing import List, Optional

import torch

from .errors import ControlStackError


@dataclass
class ControlStack:
    """Per-frame visual conditions, one tensor per control type.

    Each control is N x C_c x H x W. ``scales`` holds the control scale of each
    control; ``masks`` optionally holds one binary mask per control (or None).
    """

    controls: List[torch.Tensor] = field(default_factory=list)
    scales: List[float] = field(default_factory=list)
    masks: Optional[List[Optional[torch.Tensor]]] = None
    kinds: List[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.scales:
            default = 1.0 if len(self.controls) == 1 else 0.5
            self.scales = [default] * len(self.controls)
        self.validate()

    def validate(self, frames: Optional[int] = None) -> None:
        """Check frame counts, scales and mask values."""
        if len(self.scales) != len(self.controls):
            raise ControlStackError(
                f"{len(self.controls)} controls but {len(self.scales)} scales"
            )
        for idx, scale in enumerate(self.scales):
            if scale < 0:
                raise ControlStackError(f"control {idx} has negative scale {scale}")
        counts = {int(c.shape[0]) for c in self.controls}
        if len(counts) > 1:
            raise ControlStackError(f"controls disagree on frame count: {sorted(counts)}")
        if frames is not None and counts and counts != {frames}:
            raise ControlStackError(
                f"controls have {counts.pop()} frames, expected {frames}"
            )
        if self.masks is not None:
            if len(self.masks) != len(self.controls):
                raise ControlStackError(
                    f"{len(self.controls)} controls but {len(self.masks)} masks"
                )
            for idx, mask in enumerate(self.masks):
                if mask is None:
                    continue
                if not torch.all((mask == 0) | (mask == 1)):
                    raise ControlStackError(f"mask {idx} is not binary")

    @property
    def frames(self) -> int:
        return int(self.controls[0].shape[0]) if self.controls else 0

    def __len__(self) -> int:
        return len(self.controls)

    def select_frames(self, indices: List[int]) -> "ControlStack":
        """Gather the given 0-based frame indices from every control and mask."""
        index = torch.as_tensor(indices, dtype=torch.long)
        masks = None
        if self.masks is not None:
            masks = [
                None if m is None else (m.index_select(0, index) if m.shape[0] > 1 else m)
                for m in self.masks
            ]
        return ControlStack(
            controls=[c.index_select(0, index) for c in self.controls],
            scales=list(self.scales),
            masks=masks,
            kinds=list(self.kinds),
        )

    def with_scales(self, scales: List[float]) -> "ControlStack":
        return ControlStack(
            controls=list(self.controls), scales=list(scales),
            masks=None if self.masks is None else list(self.masks), kinds=list(self.kinds),
        )


def apply_mask_to_controls(stack: ControlStack) -> ControlStack:
    """Multiply each control by its mask; controls without a mask pass through."""
    if stack.masks is None:
        return stack
    masked = []
    for idx, (control, mask) in enumerate(zip(stack.controls, stack.masks)):
        if mask is None:
            masked.append(control)
            continue
        if not torch.all((mask == 0) | (mask == 1)):
            raise ControlStackError(f"mask {idx} is not binary")
        try:
            masked.append(control * mask.to(control.dtype))
        except RuntimeError as exc:
            raise ControlStackError(
                f"mask {idx} of shape {tuple(mask.shape)} does not broadcast to "
                f"control shape {tuple(control.shape)}"
            ) from exc
    return ControlStack(controls=masked, scales=list(stack.scales), masks=None, kinds=list(stack.kinds))
