"""
Shared image operators for the toy extractors
"""

import torch
import torch.nn.functional as F


def intensity(video: torch.Tensor) -> torch.Tensor:
    """Channel mean, N x 1 x H x W."""
    return video.to(torch.float64).mean(dim=1, keepdim=True)


def gradient_magnitude(video: torch.Tensor) -> torch.Tensor:
    """Central-difference gradient magnitude of the intensity, replicate-padded."""
    img = F.pad(intensity(video), (1, 1, 1, 1), mode="replicate")
    gx = (img[:, :, 1:-1, 2:] - img[:, :, 1:-1, :-2]) / 2.0
    gy = (img[:, :, 2:, 1:-1] - img[:, :, :-2, 1:-1]) / 2.0
    return torch.sqrt(gx ** 2 + gy ** 2)


def blur(img: torch.Tensor) -> torch.Tensor:
    """3 x 3 binomial blur, replicate-padded."""
    k = torch.tensor([1.0, 2.0, 1.0], dtype=img.dtype)
    kernel = (k[:, None] * k[None, :]) / 16.0
    padded = F.pad(img, (1, 1, 1, 1), mode="replicate")
    return F.conv2d(padded, kernel.view(1, 1, 3, 3))
