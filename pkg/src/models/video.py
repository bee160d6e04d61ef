"""
Latent video helpers
"""

from typing import Sequence

import torch

from .errors import ShapeMismatchError

# A latent video is a real tensor of shape (N, C, H, W); noise predictions share the shape.
LatentVideo = torch.Tensor


def check_video(x: LatentVideo, name: str = "video") -> None:
    """Validate the (N, C, H, W) layout, N >= 1 and finite entries."""
    if x.dim() != 4:
        raise ShapeMismatchError(f"{name} must be N x C x H x W, got shape {tuple(x.shape)}")
    if x.shape[0] < 1:
        raise ShapeMismatchError(f"{name} has no frames")
    if not torch.isfinite(x).all():
        raise ShapeMismatchError(f"{name} contains non-finite entries")


def check_same_shape(*tensors: torch.Tensor, names: Sequence[str] = ()) -> None:
    """Raise when the given tensors do not all share one shape."""
    if not tensors:
        return
    first = tuple(tensors[0].shape)
    for idx, other in enumerate(tensors[1:], start=1):
        if tuple(other.shape) != first:
            label = names[idx] if idx < len(names) else f"tensor {idx}"
            head = names[0] if names else "tensor 0"
            raise ShapeMismatchError(
                f"shape mismatch: {head} {first} vs {label} {tuple(other.shape)}"
            )


def broadcast_frame(frame: torch.Tensor, frames: int) -> LatentVideo:
    """Repeat one C x H x W frame N times; every output frame is the same values."""
    if frame.dim() != 3:
        raise ShapeMismatchError(f"frame must be C x H x W, got {tuple(frame.shape)}")
    return frame.unsqueeze(0).expand(frames, -1, -1, -1).clone()


def frame_count(x: LatentVideo) -> int:
    return int(x.shape[0])
