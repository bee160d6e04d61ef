"""
Long-video editing: per-window denoising, fusion, key-frame video blending and
one DDIM step per timestep.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, TextIO

import torch

from ..diffusion.sampling import (
    DDIMSampler,
    NoiseModel,
    SamplerConfig,
    ddim_invert,
    guided_noise,
    make_initial_value,
    sampling_timesteps,
)
from ..diffusion.schedule import NoiseSchedule
from ..models.controls import ControlStack
from ..models.errors import WindowPlanError
from ..models.prompt import PromptEmbedding
from ..models.video import LatentVideo, check_video
from .fusion import extract_keyframe_video, fuse_keyframe, fuse_windows, normalized_weights
from .windows import KeyFusionConfig, WeightFunction, WindowPlan, check_guardrails

logger = logging.getLogger(__name__)


def predict_windows(xt: LatentVideo, stack: Optional[ControlStack], prompt: PromptEmbedding, t: int,
                    model: NoiseModel, plan: WindowPlan, guidance_scale: float = 1.0,
                    order: Optional[Sequence[int]] = None, workers: int = 1) -> List[LatentVideo]:
    """Noise prediction for every window, returned in window order.

    ``order`` only changes the evaluation order; each window's key frame is its
    own first frame.
    """
    order = list(range(plan.n)) if order is None else list(order)
    if sorted(order) != list(range(plan.n)):
        raise WindowPlanError(f"order {order} is not a permutation of the {plan.n} windows")

    def run(j: int) -> LatentVideo:
        start, end = plan.windows[j]
        window_stack = stack.select_frames(list(range(start - 1, end))) if stack is not None else None
        return guided_noise(model, xt[start - 1:end], window_stack, prompt, t, guidance_scale)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            computed = dict(zip(order, pool.map(run, order)))
    else:
        computed = {j: run(j) for j in order}
    return [computed[j] for j in range(plan.n)]


class WeightDump:
    """Writes "t frame window weight" rows for every timestep"""

    def __init__(self, handle: TextIO, plan: WindowPlan, f: WeightFunction):
        self.handle = handle
        self.plan = plan
        self.weights = normalized_weights(plan, f)
        handle.write("t frame window weight\n")

    def write(self, t: int) -> None:
        for j, (start, end) in enumerate(self.plan.windows):
            for frame in range(start, end + 1):
                self.handle.write(f"{t} {frame} {j + 1} {float(self.weights[j, frame - 1]):.12e}\n")


def long_initial_value(x0: LatentVideo, stack: Optional[ControlStack], p_s: PromptEmbedding,
                       params: NoiseModel, sched: NoiseSchedule, plan: WindowPlan, f: WeightFunction,
                       sampler: SamplerConfig, workers: int = 1) -> LatentVideo:
    """Initial latent for a long edit.

    DDIM inversion runs window by window with the fused source-prompt
    prediction, so no model call ever sees more than L frames. Other init
    modes need no model and fall through to ``make_initial_value``.
    """
    check_video(x0, "x0")
    if plan.N != x0.shape[0]:
        raise WindowPlanError(f"plan covers {plan.N} frames, video has {x0.shape[0]}")
    if sampler.init_mode != "ddim_inversion":
        return make_initial_value(x0, sampler, sched)
    sampler.validate(sched)

    def fused_noise(x: LatentVideo, t: int) -> LatentVideo:
        return fuse_windows(predict_windows(x, stack, p_s, t, params, plan, workers=workers), plan, f)

    logger.info("windowed inversion: %d frames, %d windows", plan.N, plan.n)
    return ddim_invert(x0, params, stack, p_s, sched, sampling_timesteps(sched, sampler),
                       progress=sampler.progress, noise_fn=fused_noise)


def long_edit(x_init: LatentVideo, stack: Optional[ControlStack], p_t: PromptEmbedding, params: NoiseModel,
              sched: NoiseSchedule, plan: WindowPlan, f: WeightFunction, kf: KeyFusionConfig,
              sampler: SamplerConfig, workers: int = 1,
              dump_weights: Optional[Path] = None) -> LatentVideo:
    """Denoise a long video window by window; returns the N-frame X_0 estimate.

    With a single window the key-frame video equals the window's own key frame
    and its blend is skipped.
    """
    check_video(x_init, "x_init")
    if plan.N != x_init.shape[0]:
        raise WindowPlanError(f"plan covers {plan.N} frames, video has {x_init.shape[0]}")
    if stack is not None:
        stack.validate(frames=plan.N)
    for message in check_guardrails(plan, kf):
        logger.warning(message)
    logger.info("long edit: %d frames, %d windows (L=%d, a=%d), w=%g",
                plan.N, plan.n, plan.L, plan.a, kf.w)
    scale = sampler.guidance_scale
    handle = open(dump_weights, "w", encoding="utf-8") if dump_weights is not None else None
    dump = WeightDump(handle, plan, f) if handle is not None else None

    def fused_noise(x: LatentVideo, t: int) -> LatentVideo:
        preds = predict_windows(x, stack, p_t, t, params, plan, scale, workers=workers)
        eps = fuse_windows(preds, plan, f)
        if plan.n > 1:
            key_x, key_stack = extract_keyframe_video(x, stack, plan)
            key_pred = guided_noise(params, key_x, key_stack, p_t, t, scale)
            eps = fuse_keyframe(eps, key_pred, plan, kf)
        if dump is not None:
            dump.write(t)
        return eps

    try:
        return DDIMSampler(sched, sampler).sample(x_init, params, stack, p_t, noise_fn=fused_noise)
    finally:
        if handle is not None:
            handle.close()
