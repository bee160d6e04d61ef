"""
Diffusion math and DDIM sampling.
"""

from .schedule import NoiseSchedule, build_schedule, timestep_grid
from .core import forward_sample, ddim_step, ddim_invert_step, cfg_combine, training_residual
from .sampling import (
    SamplerConfig,
    DDIMSampler,
    sampling_timesteps,
    guided_noise,
    ddim_invert,
    make_initial_value,
    edit_video,
)

__all__ = [
    "NoiseSchedule",
    "build_schedule",
    "timestep_grid",
    "forward_sample",
    "ddim_step",
    "ddim_invert_step",
    "cfg_combine",
    "training_residual",
    "SamplerConfig",
    "DDIMSampler",
    "sampling_timesteps",
    "guided_noise",
    "ddim_invert",
    "make_initial_value",
    "edit_video",
]
