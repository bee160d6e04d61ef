"""
Frame-feature cosine consistency
"""

import torch

from ..models.errors import MetricError


def _cosine(a: torch.Tensor, b: torch.Tensor) -> float:
    a = a.reshape(-1).to(torch.float64)
    b = b.reshape(-1).to(torch.float64)
    na, nb = torch.linalg.vector_norm(a), torch.linalg.vector_norm(b)
    if na == 0 or nb == 0:
        raise MetricError("zero-norm frame")
    return float(torch.dot(a, b) / (na * nb))


def temporal_consistency(video: torch.Tensor) -> float:
    """Mean cosine similarity of adjacent flattened frames."""
    if video.shape[0] < 2:
        raise MetricError(f"need at least two frames, got {video.shape[0]}")
    values = [_cosine(video[i], video[i + 1]) for i in range(video.shape[0] - 1)]
    return sum(values) / len(values)


def drift(video: torch.Tensor) -> float:
    """Cosine similarity of the first and last frame."""
    if video.shape[0] < 2:
        raise MetricError(f"need at least two frames, got {video.shape[0]}")
    return _cosine(video[0], video[-1])
