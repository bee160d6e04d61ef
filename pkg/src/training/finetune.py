"""
One-shot fine-tuning and adapter pre-training
"""

import logging
from typing import Iterable, List, Optional, Sequence, Tuple

import torch
from tqdm import tqdm

from ..diffusion.core import forward_sample, training_residual
from ..diffusion.schedule import NoiseSchedule
from ..models.controls import ControlStack
from ..models.errors import ShapeMismatchError, TrainingError
from ..models.observers import LoggingObserver, LossTraceRecorder, RunEvent, RunObserver, RunSubject
from ..models.prompt import PromptEmbedding
from ..models.video import LatentVideo, check_video
from ..network.denoiser import Denoiser
from ..network.lora import has_lora
from .selection import TrainConfig, select_parameters

logger = logging.getLogger(__name__)

LossTrace = List[Tuple[int, float]]


class FineTuner(RunSubject):
    """Adam on a restricted parameter set with the noise-prediction MSE objective"""

    def __init__(self, model: Denoiser, cfg: TrainConfig, sched: NoiseSchedule):
        super().__init__()
        cfg.validate()
        self.model = model
        self.cfg = cfg
        self.sched = sched

    def _trainable(self, groups: Sequence[str]):
        selected = select_parameters(self.model, groups)
        if getattr(self.model, "lora_frozen", False):
            frozen = [name for name in selected if name.endswith(("lora_A", "lora_B"))]
            if frozen:
                logger.warning("adapters are frozen after pre-training; skipping %d tensors", len(frozen))
                for name in frozen:
                    selected.pop(name)
        if not selected:
            raise TrainingError(f"no parameters selected by {list(groups)}")
        return selected

    def run(self, batches: Sequence[Tuple[LatentVideo, Optional[ControlStack]]],
            prompt: PromptEmbedding, groups: Sequence[str]) -> LossTrace:
        selected = self._trainable(groups)
        previous = {name: p.requires_grad for name, p in self.model.named_parameters()}
        for name, param in self.model.named_parameters():
            param.requires_grad_(name in selected)
        optimizer = torch.optim.Adam(
            list(selected.values()), lr=self.cfg.learning_rate,
            betas=tuple(self.cfg.adam_betas), eps=self.cfg.adam_eps,
        )
        gen = torch.Generator().manual_seed(self.cfg.seed)
        recorder = LossTraceRecorder()
        self.attach_observer(recorder)
        self.notify_observers(RunEvent.TRAINING_STARTED, {
            "iterations": self.cfg.iterations,
            "trainable": sum(p.numel() for p in selected.values()),
        })
        self.model.train()
        try:
            for iteration in tqdm(range(1, self.cfg.iterations + 1), desc="train",
                                  disable=not self.cfg.progress):
                pick = int(torch.randint(len(batches), (1,), generator=gen)) if len(batches) > 1 else 0
                x0, stack = batches[pick]
                t = int(torch.randint(1, self.sched.T + 1, (1,), generator=gen))
                eps = torch.randn(x0.shape, generator=gen, dtype=torch.float64).to(x0.dtype)
                xt = forward_sample(x0, t, eps, self.sched)
                optimizer.zero_grad(set_to_none=True)
                loss = training_residual(eps, self.model(xt, stack, prompt, t, key_frame=self.cfg.key_frame))
                loss.backward()
                optimizer.step()
                self.notify_observers(RunEvent.ITERATION_COMPLETED, {
                    "iteration": iteration, "loss": float(loss.detach()), "t": t,
                })
        finally:
            self.model.eval()
            for name, param in self.model.named_parameters():
                param.requires_grad_(previous.get(name, True))
            self.detach_observer(recorder)
        self.notify_observers(RunEvent.TRAINING_FINISHED, {"iterations": len(recorder.trace)})
        return recorder.trace


def _attach(tuner: FineTuner, observers: Optional[Iterable[RunObserver]], log_every: int) -> None:
    tuner.attach_observer(LoggingObserver(every=log_every))
    for observer in observers or ():
        tuner.attach_observer(observer)


def one_shot_finetune(x0: LatentVideo, stack: Optional[ControlStack], p_s: PromptEmbedding,
                      params: Denoiser, cfg: TrainConfig, sched: NoiseSchedule,
                      observers: Optional[Iterable[RunObserver]] = None) -> Tuple[Denoiser, LossTrace]:
    """Fine-tune on the single source video-text pair; only ``cfg.trainable_set`` changes."""
    check_video(x0, "x0")
    if stack is not None:
        stack.validate(frames=int(x0.shape[0]))
    tuner = FineTuner(params, cfg, sched)
    _attach(tuner, observers, cfg.log_every)
    if cfg.iterations == 0:
        tuner._trainable(cfg.trainable_set)
        return params, []
    trace = tuner.run([(x0, stack)], p_s, cfg.trainable_set)
    return params, trace


def lora_pretrain(images: Sequence[LatentVideo], prompt: PromptEmbedding, params: Denoiser,
                  cfg: TrainConfig, sched: NoiseSchedule,
                  observers: Optional[Iterable[RunObserver]] = None) -> Denoiser:
    """Train only the adapters on single reference frames, then freeze them."""
    if not has_lora(params):
        raise TrainingError("lora_pretrain needs adapters; call attach_lora first")
    if not images:
        raise TrainingError("no reference images given")
    for idx, image in enumerate(images):
        check_video(image, f"image {idx}")
        if image.shape[0] != 1:
            raise ShapeMismatchError(f"reference image {idx} must have one frame, got {image.shape[0]}")
    tuner = FineTuner(params, cfg, sched)
    _attach(tuner, observers, cfg.log_every)
    if cfg.iterations > 0:
        tuner.run([(image, None) for image in images], prompt, ("lora",))
    params.lora_frozen = True
    return params
