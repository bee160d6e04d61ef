"""
Structural similarity, optionally restricted to an unedited-area mask
"""

import math
from typing import Optional

import torch
import torch.nn.functional as F

from ..models.errors import MetricError

K1 = 0.01
K2 = 0.03
WINDOW_SIZE = 11
WINDOW_SIGMA = 1.5


def gaussian_window(size: int, sigma: float = WINDOW_SIGMA) -> torch.Tensor:
    coords = torch.arange(size, dtype=torch.float64) - size // 2
    g = torch.exp(-(coords ** 2) / (2 * sigma ** 2))
    g = g / g.sum()
    return g[:, None] @ g[None, :]


def window_size_for(height: int, width: int) -> int:
    """11, clamped to the image and kept odd."""
    size = min(WINDOW_SIZE, height, width)
    return size if size % 2 else size - 1


def _as_chw(frame: torch.Tensor) -> torch.Tensor:
    if frame.dim() == 2:
        return frame.unsqueeze(0)
    if frame.dim() == 3:
        return frame
    raise MetricError(f"frame must be H x W or C x H x W, got {tuple(frame.shape)}")


def _window_filter(channels: int, height: int, width: int):
    size = window_size_for(height, width)
    if size < 1:
        raise MetricError(f"frame {height}x{width} is too small for SSIM")
    kernel = gaussian_window(size).expand(channels, 1, size, size)

    def filt(img):
        return F.conv2d(img.unsqueeze(0), kernel, groups=channels).squeeze(0)

    return filt


def ssim_map(x: torch.Tensor, y: torch.Tensor, data_range: float = 2.0) -> torch.Tensor:
    """Per-channel SSIM at every fully-covered window position, C x H' x W'."""
    x = _as_chw(x).to(torch.float64)
    y = _as_chw(y).to(torch.float64)
    if x.shape != y.shape:
        raise MetricError(f"shape mismatch: {tuple(x.shape)} vs {tuple(y.shape)}")
    if data_range <= 0:
        raise MetricError(f"data range must be positive, got {data_range}")
    filt = _window_filter(*x.shape)
    mu_x, mu_y = filt(x), filt(y)
    sigma_xx = filt(x * x) - mu_x ** 2
    sigma_yy = filt(y * y) - mu_y ** 2
    sigma_xy = filt(x * y) - mu_x * mu_y
    c1 = (K1 * data_range) ** 2
    c2 = (K2 * data_range) ** 2
    return ((2 * mu_x * mu_y + c1) * (2 * sigma_xy + c2)) / (
        (mu_x ** 2 + mu_y ** 2 + c1) * (sigma_xx + sigma_yy + c2)
    )


def ssim(x: torch.Tensor, y: torch.Tensor, mask: Optional[torch.Tensor] = None,
         data_range: float = 2.0) -> float:
    """Mean SSIM with every window weighted by its mask coverage (1 = counted).

    A window's coverage is the Gaussian-weighted share of its pixels inside
    the mask. Every pixel lies in some window, so any non-empty mask counts.
    """
    values = ssim_map(x, y, data_range)
    channels = values.shape[0]
    height, width = _as_chw(x).shape[-2:]
    if mask is None:
        mask = torch.ones(height, width, dtype=torch.float64)
    mask = _as_chw(mask.to(torch.float64))
    if mask.shape[-2:] != (height, width):
        raise MetricError(f"mask shape {tuple(mask.shape)} does not match frame {height}x{width}")
    if not torch.all((mask == 0) | (mask == 1)):
        raise MetricError("mask is not binary")
    if not torch.any(mask == 1):
        raise MetricError("mask selects no pixels")
    filt = _window_filter(channels, height, width)
    coverage = filt(mask.expand(channels, -1, -1).contiguous())
    return float((values * coverage).sum() / coverage.sum())


def video_ssim(x: torch.Tensor, y: torch.Tensor, masks: Optional[torch.Tensor] = None,
               data_range: float = 2.0) -> float:
    """Frame-averaged SSIM of two N x C x H x W videos."""
    if x.shape != y.shape:
        raise MetricError(f"shape mismatch: {tuple(x.shape)} vs {tuple(y.shape)}")
    scores = []
    for i in range(x.shape[0]):
        mask = None if masks is None else masks[i if masks.shape[0] > 1 else 0]
        scores.append(ssim(x[i], y[i], mask, data_range))
    return math.fsum(scores) / len(scores)
