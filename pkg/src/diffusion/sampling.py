"""
Sampler configuration, initial values and the DDIM editing loop
"""

import logging
from dataclasses import dataclass, asdict
from typing import Any, Callable, Dict, List, Optional

import torch
from tqdm import tqdm

from ..models.controls import ControlStack
from ..models.errors import ScheduleError
from ..models.observers import RunEvent, RunSubject
from ..models.prompt import PromptEmbedding, null_prompt
from ..models.video import LatentVideo, broadcast_frame, check_video
from .core import cfg_combine, ddim_invert_step, ddim_step, forward_sample
from .schedule import NoiseSchedule, timestep_grid

logger = logging.getLogger(__name__)

INIT_MODES = ("ddim_inversion", "noisy_source", "gaussian")

# model(x, stack, prompt, t) -> noise prediction of the same shape as x
NoiseModel = Callable[[LatentVideo, Optional[ControlStack], PromptEmbedding, int], LatentVideo]


@dataclass
class SamplerConfig:
    steps: int = 50
    guidance_scale: float = 12.0
    init_mode: str = "ddim_inversion"
    M: Optional[int] = None
    seed: int = 0
    progress: bool = False

    def validate(self, sched: NoiseSchedule) -> None:
        if self.init_mode not in INIT_MODES:
            raise ValueError(f"Unknown init mode: {self.init_mode}")
        if not 1 <= self.steps <= sched.T:
            raise ScheduleError(f"steps must lie in [1, {sched.T}], got {self.steps}")
        if self.guidance_scale < 0:
            raise ValueError(f"guidance scale must be >= 0, got {self.guidance_scale}")
        if self.M is not None and not 1 <= self.M <= sched.T:
            raise ScheduleError(f"M must lie in [1, {sched.T}], got {self.M}")

    def start_timestep(self, sched: NoiseSchedule) -> int:
        return sched.T if self.M is None else int(self.M)

    def metadata(self) -> Dict[str, Any]:
        meta = asdict(self)
        meta.pop("progress")
        meta["unconditional_prompt"] = "zeros"
        meta["inversion_guidance"] = 1.0
        return meta


def sampling_timesteps(sched: NoiseSchedule, cfg: SamplerConfig) -> List[int]:
    """Descending timesteps of the sampling trajectory; the first entry is M."""
    start = cfg.start_timestep(sched)
    kept = [t for t in timestep_grid(sched.T, cfg.steps) if t <= start]
    if not kept or kept[0] != start:
        kept.insert(0, start)
    return kept


def guided_noise(model: NoiseModel, x: LatentVideo, stack: Optional[ControlStack],
                 prompt: PromptEmbedding, t: int, scale: float,
                 uncond: Optional[PromptEmbedding] = None) -> LatentVideo:
    """Noise prediction with classifier-free guidance; scale 1 skips the unconditional pass."""
    eps_cond = model(x, stack, prompt, t)
    if scale == 1.0:
        return eps_cond
    if uncond is None:
        uncond = null_prompt(*prompt.vectors.shape, dtype=prompt.vectors.dtype)
    eps_uncond = model(x, stack, uncond, t)
    return cfg_combine(eps_uncond, eps_cond, scale)


def ddim_invert(x0: LatentVideo, model: NoiseModel, stack: Optional[ControlStack],
                prompt: PromptEmbedding, sched: NoiseSchedule, timesteps: List[int],
                progress: bool = False,
                noise_fn: Optional[Callable[[LatentVideo, int], LatentVideo]] = None) -> LatentVideo:
    """Run inversion from x0 up through the given descending timesteps (guidance 1).

    ``noise_fn(x, t)`` replaces the full-clip model prediction.
    """
    if noise_fn is None:
        def noise_fn(x, t):
            return model(x, stack, prompt, t)
    ascending = sorted(timesteps)
    x = x0
    t_prev = 0
    with torch.no_grad():
        for t in tqdm(ascending, desc="invert", disable=not progress):
            eps = noise_fn(x, t_prev)
            x = ddim_invert_step(x, eps, t, t_prev, sched)
            t_prev = t
    return x


class DDIMSampler(RunSubject):
    """Deterministic sampler; notifies SAMPLING_STEP for every update."""

    def __init__(self, sched: NoiseSchedule, cfg: SamplerConfig):
        super().__init__()
        cfg.validate(sched)
        self.sched = sched
        self.cfg = cfg

    def sample(self, x_init: LatentVideo, model: NoiseModel, stack: Optional[ControlStack],
               prompt: PromptEmbedding,
               noise_fn: Optional[Callable[[LatentVideo, int], LatentVideo]] = None) -> LatentVideo:
        """Denoise x_init from M to 0.

        ``noise_fn(x, t)`` overrides the guided model prediction (used by the
        long-video fusion loop).
        """
        timesteps = sampling_timesteps(self.sched, self.cfg)
        if noise_fn is None:
            def noise_fn(x, t):
                return guided_noise(model, x, stack, prompt, t, self.cfg.guidance_scale)
        x = x_init
        with torch.no_grad():
            for idx, t in enumerate(tqdm(timesteps, desc="ddim", disable=not self.cfg.progress)):
                t_prev = timesteps[idx + 1] if idx + 1 < len(timesteps) else 0
                eps = noise_fn(x, t)
                x = ddim_step(x, eps, t, t_prev, self.sched)
                self.notify_observers(RunEvent.SAMPLING_STEP, {"t": t, "t_prev": t_prev})
        return x


def edit_video(x0: LatentVideo, model: NoiseModel, stack: Optional[ControlStack],
               source_prompt: PromptEmbedding, target_prompt: PromptEmbedding,
               sched: NoiseSchedule, cfg: SamplerConfig) -> LatentVideo:
    """Short-video editing: initial value from the source, DDIM sampling with the target prompt."""
    x_init = make_initial_value(x0, cfg, sched, model, stack, source_prompt)
    logger.info("editing %d frames from t=%d (%s)", x0.shape[0], cfg.start_timestep(sched), cfg.init_mode)
    return DDIMSampler(sched, cfg).sample(x_init, model, stack, target_prompt)
