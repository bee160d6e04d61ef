"""
Window plans and fusion weight functions
"""

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

import torch

from ..models.errors import WindowPlanError

MAX_WINDOW_LENGTH = 256


@dataclass(frozen=True)
class WindowPlan:
    """Overlapping windows over frames 1..N; ranges are 1-based and inclusive."""

    N: int
    L: int
    a: int
    windows: Tuple[Tuple[int, int], ...]

    @property
    def n(self) -> int:
        return len(self.windows)

    @property
    def stride(self) -> int:
        return self.L - self.a

    @property
    def key_indices(self) -> List[int]:
        """1-based first frame of every stored window."""
        return [start for start, _ in self.windows]

    def lengths(self) -> List[int]:
        return [end - start + 1 for start, end in self.windows]

    def to_dict(self) -> Dict[str, object]:
        return {"N": self.N, "L": self.L, "a": self.a, "windows": [list(w) for w in self.windows]}


def plan_windows(N: int, L: int, a: int, max_length: int = MAX_WINDOW_LENGTH) -> WindowPlan:
    """Split frames 1..N into windows of length L overlapping by a frames.

    Window j starts at (j-1)(L-a)+1 and ends at min((j-1)(L-a)+L, N) for
    j = 1..floor(N/(L-a))+1; windows that would start past N are dropped. A
    video that fits in one window (N <= L) gets the single window [1, N].
    """
    if N < 1:
        raise WindowPlanError(f"N must be >= 1, got {N}")
    if L < 1:
        raise WindowPlanError(f"L must be >= 1, got {L}")
    if L > max_length:
        raise WindowPlanError(f"L={L} exceeds the maximum window length {max_length}")
    if not 0 <= a < L:
        raise WindowPlanError(f"need 0 <= a < L, got a={a}, L={L}")
    if N <= L:
        return WindowPlan(N=N, L=L, a=a, windows=((1, N),))
    stride = L - a
    count = N // stride + 1
    windows = []
    for j in range(1, count + 1):
        start = (j - 1) * stride + 1
        if start > N:
            break
        windows.append((start, min((j - 1) * stride + L, N)))
    return WindowPlan(N=N, L=L, a=a, windows=tuple(windows))


def _gaussian(u: torch.Tensor, sigma: float) -> torch.Tensor:
    return -((u - 0.5) ** 2) / (2.0 * sigma ** 2)


def _constant(u: torch.Tensor, sigma: float) -> torch.Tensor:
    return torch.zeros_like(u)


def _linear(u: torch.Tensor, sigma: float) -> torch.Tensor:
    return torch.log(1.0 - (u - 0.5).abs())


def _cosine(u: torch.Tensor, sigma: float) -> torch.Tensor:
    return torch.log(0.5 + 0.5 * torch.cos(math.pi * (u - 0.5)))


def _inverse_sqrt(u: torch.Tensor, sigma: float, floor: float = 0.05) -> torch.Tensor:
    return 0.5 * math.log(floor) - 0.5 * torch.log((u - 0.5).abs() + floor)


# log-weights; a narrow gaussian underflows in linear space
WEIGHT_SHAPES: Dict[str, Callable[[torch.Tensor, float], torch.Tensor]] = {
    "gaussian": _gaussian,
    "constant": _constant,
    "linear": _linear,
    "cosine": _cosine,
    "inverse_sqrt": _inverse_sqrt,
}


@dataclass(frozen=True)
class WeightFunction:
    """Positive weight profile over window positions, symmetric about u = 1/2."""

    kind: str = "gaussian"
    sigma: float = 0.1

    def __post_init__(self):
        if self.kind not in WEIGHT_SHAPES:
            raise ValueError(f"Unknown weight function: {self.kind}")
        if self.sigma <= 0:
            raise WindowPlanError(f"sigma must be positive, got {self.sigma}")


def eval_log_weights(f: WeightFunction, length: int) -> torch.Tensor:
    """Log-weights at positions u = l/length for l = 1..length (float64)."""
    if length < 1:
        raise WindowPlanError(f"window length must be >= 1, got {length}")
    u = torch.arange(1, length + 1, dtype=torch.float64) / length
    return WEIGHT_SHAPES[f.kind](u, f.sigma)


def eval_weights(f: WeightFunction, length: int) -> torch.Tensor:
    """Weights at positions u = l/length, floored at the smallest positive float64."""
    return torch.exp(eval_log_weights(f, length)).clamp_min(torch.finfo(torch.float64).tiny)


KEY_FUSION_MODES = ("key_only", "literal")


@dataclass(frozen=True)
class KeyFusionConfig:
    """Blend weight of the key-frame video prediction."""

    w: float = 0.3
    mode: str = "key_only"

    def __post_init__(self):
        if not 0.0 <= self.w <= 1.0:
            raise WindowPlanError(f"key fusion weight must lie in [0, 1], got {self.w}")
        if self.mode not in KEY_FUSION_MODES:
            raise ValueError(f"Unknown key fusion mode: {self.mode}")


def check_guardrails(plan: WindowPlan, kf: KeyFusionConfig) -> List[str]:
    """Warnings for settings outside the recommended ranges a in [L/2, L), w in [0.2, 0.5]."""
    warnings = []
    if not plan.L / 2 <= plan.a < plan.L:
        warnings.append(f"overlap a={plan.a} outside recommended [{plan.L / 2:g}, {plan.L})")
    if not 0.2 <= kf.w <= 0.5:
        warnings.append(f"key fusion weight w={kf.w:g} outside recommended [0.2, 0.5]")
    return warnings
