"""
Deterministic synthetic clips with known motion
"""

import logging
from typing import Callable, Dict, Tuple

import torch

from ..models.errors import ShapeMismatchError

logger = logging.getLogger(__name__)

VideoWithMasks = Tuple[torch.Tensor, torch.Tensor]


def _square_size(height: int, width: int) -> int:
    return max(1, min(height, width) // 3)


def _palette(gen: torch.Generator, channels: int) -> Tuple[torch.Tensor, torch.Tensor]:
    background = -0.6 + 0.2 * torch.rand(channels, generator=gen, dtype=torch.float64)
    foreground = 0.5 + 0.3 * torch.rand(channels, generator=gen, dtype=torch.float64)
    return background, foreground


def _paint(video, masks, frame, rows, cols, color):
    for r in rows:
        for c in cols:
            video[frame, :, r, c] = color
            masks[frame, 0, r, c] = 0.0


def _bounce(step: int, span: int) -> int:
    """Offset in [0, span] after ``step`` unit moves, reflecting at both ends."""
    if span <= 0:
        return 0
    k = step % (2 * span)
    return k if k <= span else 2 * span - k


def _moving_square(N, C, H, W, gen) -> VideoWithMasks:
    background, foreground = _palette(gen, C)
    size = _square_size(H, W)
    top0 = int(torch.randint(0, H - size + 1, (1,), generator=gen))
    left0 = int(torch.randint(0, W - size + 1, (1,), generator=gen))
    video = torch.empty(N, C, H, W, dtype=torch.float64)
    masks = torch.ones(N, 1, H, W, dtype=torch.float64)
    for i in range(N):
        # the background brightens across the clip, so no two frames coincide
        shade = 0.2 * i / max(N - 1, 1)
        video[i] = (background + shade).view(C, 1, 1).expand(C, H, W)
        left = _bounce(left0 + i, W - size)
        top = _bounce(top0 + i // 3, H - size)
        _paint(video, masks, i, range(top, top + size), range(left, left + size), foreground)
    return video, masks


def _gradient_drift(N, C, H, W, gen) -> VideoWithMasks:
    gains = 0.5 + 0.5 * torch.rand(C, generator=gen, dtype=torch.float64)
    cols = torch.arange(W, dtype=torch.float64)
    video = torch.empty(N, C, H, W, dtype=torch.float64)
    for i in range(N):
        ramp = -1.0 + 2.0 * torch.remainder(cols + i, W) / max(W - 1, 1)
        video[i] = gains.view(C, 1, 1) * ramp.view(1, 1, W).expand(C, H, W)
    return video, torch.ones(N, 1, H, W, dtype=torch.float64)


def _two_object(N, C, H, W, gen) -> VideoWithMasks:
    background, first = _palette(gen, C)
    second = -first
    size = _square_size(H, W)
    video = background.view(1, C, 1, 1).repeat(N, 1, H, W)
    masks = torch.ones(N, 1, H, W, dtype=torch.float64)
    for i in range(N):
        # one object bounces along the top rows, the other along the right columns
        left = _bounce(i, W - size)
        top = _bounce(H - size + i, H - size)
        _paint(video, masks, i, range(size), range(left, left + size), first)
        _paint(video, masks, i, range(top, top + size), range(W - size, W), second)
    return video, masks


SYNTHETIC_KINDS: Dict[str, Callable[..., VideoWithMasks]] = {
    "moving_square": _moving_square,
    "gradient_drift": _gradient_drift,
    "two_object": _two_object,
}


def synthesize_video(kind: str = "moving_square", N: int = 8, H: int = 8, W: int = 8,
                     seed: int = 0, channels: int = 4) -> VideoWithMasks:
    """Return an N x C x H x W clip and N x 1 x H x W unedited-area masks (1 = background)."""
    if kind not in SYNTHETIC_KINDS:
        raise ValueError(f"Unknown synthetic video kind: {kind}")
    if N < 1 or H < 1 or W < 1 or channels < 1:
        raise ShapeMismatchError(f"invalid clip dims N={N} C={channels} H={H} W={W}")
    gen = torch.Generator().manual_seed(seed)
    video, masks = SYNTHETIC_KINDS[kind](N, channels, H, W, gen)
    logger.debug("synthesized %s clip %s", kind, tuple(video.shape))
    return video, masks
