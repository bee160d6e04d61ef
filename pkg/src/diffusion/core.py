"""
Timestep-indexed diffusion math: forward perturbation, DDIM step and inversion,
guidance and the training residual.
"""

import math

import torch

from ..models.errors import ScheduleError
from ..models.video import LatentVideo, check_same_shape
from .schedule import NoiseSchedule


def forward_sample(x0: LatentVideo, t: int, eps: LatentVideo, sched: NoiseSchedule) -> LatentVideo:
    """Perturb x0 to timestep t: sqrt(ab_t) x0 + sqrt(1 - ab_t) eps."""
    check_same_shape(x0, eps, names=("x0", "eps"))
    ab = sched.alpha_bar_at(t)
    return math.sqrt(ab) * x0 + math.sqrt(1.0 - ab) * eps


def _check_pair(t: int, t_prev: int, sched: NoiseSchedule) -> None:
    if t_prev >= t:
        raise ScheduleError(f"need t > t_prev, got t={t}, t_prev={t_prev}")
    if t_prev < 0:
        raise ScheduleError(f"t_prev must be >= 0, got {t_prev}")
    sched.check_timestep(t)


def ddim_step(xt: LatentVideo, eps_pred: LatentVideo, t: int, t_prev: int,
              sched: NoiseSchedule) -> LatentVideo:
    """Deterministic DDIM update from timestep t down to t_prev."""
    _check_pair(t, t_prev, sched)
    check_same_shape(xt, eps_pred, names=("xt", "eps_pred"))
    ab_t = sched.alpha_bar_at(t)
    ab_prev = sched.alpha_bar_at(t_prev)
    x0_hat = (xt - math.sqrt(1.0 - ab_t) * eps_pred) / math.sqrt(ab_t)
    return math.sqrt(ab_prev) * x0_hat + math.sqrt(1.0 - ab_prev) * eps_pred


def ddim_invert_step(x_prev: LatentVideo, eps_pred: LatentVideo, t: int, t_prev: int,
                     sched: NoiseSchedule) -> LatentVideo:
    """DDIM inversion from timestep t_prev up to t; eps_pred is taken at (x_prev, t_prev)."""
    _check_pair(t, t_prev, sched)
    check_same_shape(x_prev, eps_pred, names=("x_prev", "eps_pred"))
    ab_t = sched.alpha_bar_at(t)
    ab_prev = sched.alpha_bar_at(t_prev)
    x0_hat = (x_prev - math.sqrt(1.0 - ab_prev) * eps_pred) / math.sqrt(ab_prev)
    return math.sqrt(ab_t) * x0_hat + math.sqrt(1.0 - ab_t) * eps_pred


def cfg_combine(eps_uncond: LatentVideo, eps_cond: LatentVideo, s: float) -> LatentVideo:
    """Classifier-free guidance: eps_uncond + s (eps_cond - eps_uncond)."""
    check_same_shape(eps_uncond, eps_cond, names=("eps_uncond", "eps_cond"))
    if s < 0:
        raise ValueError(f"guidance scale must be >= 0, got {s}")
    return eps_uncond + s * (eps_cond - eps_uncond)


def training_residual(eps: torch.Tensor, eps_pred: torch.Tensor) -> torch.Tensor:
    """Mean squared elementwise difference, as a 0-dim tensor (differentiable)."""
    check_same_shape(eps, eps_pred, names=("eps", "eps_pred"))
    return torch.mean((eps - eps_pred) ** 2)
