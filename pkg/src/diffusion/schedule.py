"""
Noise schedules
"""

from dataclasses import dataclass
from typing import Sequence

import torch

from ..models.errors import ScheduleError

SCHEDULE_KINDS = ("linear", "scaled_linear")


@dataclass(frozen=True)
class NoiseSchedule:
    """beta, alpha and cumulative alpha_bar tables over timesteps 1..T.

    Vectors are stored 0-based (entry t-1 belongs to timestep t); alpha_bar at
    timestep 0 is 1 by convention.
    """

    T: int
    beta: torch.Tensor
    alpha: torch.Tensor
    alpha_bar: torch.Tensor

    @classmethod
    def from_betas(cls, betas: Sequence[float]) -> "NoiseSchedule":
        beta = torch.as_tensor(list(betas), dtype=torch.float64)
        if beta.numel() == 0:
            raise ScheduleError("schedule needs at least one timestep")
        if not torch.all((beta > 0) & (beta < 1)):
            raise ScheduleError("every beta must lie in (0, 1)")
        alpha = 1.0 - beta
        return cls(T=int(beta.numel()), beta=beta, alpha=alpha, alpha_bar=torch.cumprod(alpha, dim=0))

    def check_timestep(self, t: int, allow_zero: bool = True) -> None:
        low = 0 if allow_zero else 1
        if not low <= int(t) <= self.T:
            raise ScheduleError(f"timestep {t} outside [{low}, {self.T}]")

    def alpha_bar_at(self, t: int) -> float:
        """Cumulative alpha at timestep t as a python float (1.0 at t = 0)."""
        self.check_timestep(t)
        if t == 0:
            return 1.0
        return float(self.alpha_bar[int(t) - 1])

    def to_dict(self):
        return {"T": self.T, "beta": [float(b) for b in self.beta]}


def build_schedule(T: int, kind: str = "scaled_linear",
                   beta_start: float = 0.00085, beta_end: float = 0.012) -> NoiseSchedule:
    """Build a schedule of T betas spaced between beta_start and beta_end."""
    if T < 1:
        raise ScheduleError(f"T must be positive, got {T}")
    if not 0 < beta_start <= beta_end < 1:
        raise ScheduleError(
            f"need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}"
        )
    if kind == "linear":
        beta = torch.linspace(beta_start, beta_end, T, dtype=torch.float64)
    elif kind == "scaled_linear":
        beta = torch.linspace(beta_start ** 0.5, beta_end ** 0.5, T, dtype=torch.float64) ** 2
    else:
        raise ValueError(f"Unknown schedule kind: {kind}")
    return NoiseSchedule.from_betas(beta.tolist())


def timestep_grid(T: int, steps: int) -> list:
    """Uniform stride over [1, T], largest timestep first."""
    if not 1 <= steps <= T:
        raise ScheduleError(f"steps must lie in [1, {T}], got {steps}")
    if steps == 1:
        return [T]
    return [T - round(i * (T - 1) / (steps - 1)) for i in range(steps)]
