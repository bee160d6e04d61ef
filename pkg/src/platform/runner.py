"""
Subcommands wiring the engine into runnable experiments.

Each handler reads its inputs through ``RunConfig`` and returns the paths it
wrote. ``run_subcommand`` turns engine errors into exit status 2.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import torch

from ..adapters.base import ExtractorRegistry, extract_controls
from ..data.synthetic import synthesize_video
from ..diffusion.sampling import SamplerConfig, edit_video
from ..diffusion.schedule import NoiseSchedule, build_schedule
from ..longvideo.editor import long_edit, long_initial_value
from ..longvideo.windows import KeyFusionConfig, WeightFunction, plan_windows
from ..metrics.report import evaluate
from ..models.controls import ControlStack
from ..models.errors import ClipForgeError
from ..models.observers import LossTraceRecorder
from ..models.prompt import PromptEmbedding, embed_prompt
from ..network.denoiser import Denoiser, DenoiserConfig
from ..storage.frames import export_frames
from ..storage.tensorfile import read_tensor, write_tensor
from ..training.finetune import lora_pretrain, one_shot_finetune
from ..training.selection import DEFAULT_ITERATIONS, TrainConfig
from .config import RunConfig, SUBCOMMANDS
from .factories import DenoiserFactory
from .model_manager import ModelManager

logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    status: int
    artifacts: List[Path] = field(default_factory=list)
    report: Optional[str] = None


def build_denoiser_config(cfg: RunConfig, channels: Optional[int] = None) -> DenoiserConfig:
    m = cfg.model
    return DenoiserConfig(
        channels=channels or cfg.data.channels,
        width=m.width,
        control_channels=1,
        num_controls=len(cfg.data.control_kinds) if m.use_controls else 0,
        text_dim=m.text_dim,
        max_tokens=m.max_tokens,
        kv_mode=m.kv_mode,
        temporal_position=m.temporal_position,
        temporal_init=m.temporal_init,
        temporal_stages=tuple(m.temporal_stages),
        control_temporal=m.control_temporal,
        use_temporal=m.use_temporal,
        use_controls=m.use_controls,
        use_key_frame=m.use_key_frame,
    )


def build_schedule_from(cfg: RunConfig) -> NoiseSchedule:
    s = cfg.schedule
    return build_schedule(s.T, s.kind, s.beta_start, s.beta_end)


def build_sampler_config(cfg: RunConfig) -> SamplerConfig:
    s = cfg.sampler
    return SamplerConfig(steps=s.steps, guidance_scale=s.guidance_scale, init_mode=s.init_mode,
                         M=s.start_timestep, seed=cfg.seed)


def build_train_config(cfg: RunConfig) -> TrainConfig:
    t = cfg.train
    iterations = t.iterations
    if iterations is None:
        kinds = cfg.data.control_kinds if cfg.model.use_controls else []
        iterations = max([DEFAULT_ITERATIONS[k] for k in kinds] or [DEFAULT_ITERATIONS["edge_like"]])
    return TrainConfig(iterations=iterations, learning_rate=t.learning_rate,
                       trainable_set=tuple(t.trainable_set), seed=cfg.seed, key_frame=t.key_frame)


def prompts(cfg: RunConfig) -> Tuple[PromptEmbedding, PromptEmbedding]:
    m = cfg.model
    source = embed_prompt(cfg.sampler.source_prompt, "source", m.max_tokens, m.text_dim)
    target = embed_prompt(cfg.sampler.target_prompt, "target", m.max_tokens, m.text_dim)
    return source, target


def load_controls(cfg: RunConfig, frames: int) -> Optional[ControlStack]:
    if not cfg.model.use_controls:
        return None
    controls = [read_tensor(path) for path in cfg.control_paths()]
    stack = ControlStack(controls=controls, scales=list(cfg.data.control_scales or []),
                         kinds=list(cfg.data.control_kinds))
    stack.validate(frames=frames)
    return stack


def load_or_create_model(cfg: RunConfig, channels: int, manager: ModelManager) -> Denoiser:
    """Trained checkpoint when one exists, otherwise a freshly seeded model."""
    path = cfg.resolve("checkpoint")
    if path.exists():
        manager.load_model(path, "edit")
    else:
        logger.warning("no checkpoint at %s; editing with an untrained model", path)
        model = DenoiserFactory("cli").create_denoiser(build_denoiser_config(cfg, channels), cfg.seed)
        manager.add_model(model, "edit")
    return manager.get_current_model()


def _value_range(cfg: RunConfig) -> Tuple[float, float]:
    low, high = cfg.data.value_range
    return float(low), float(high)


def cmd_synthesize_data(cfg: RunConfig) -> List[Path]:
    d = cfg.data
    video, masks = synthesize_video(d.kind, d.frames, d.height, d.width, cfg.seed, d.channels)
    write_tensor(cfg.resolve("source"), video)
    write_tensor(cfg.resolve("masks"), masks)
    frames = export_frames(video, cfg.out_dir / "frames", _value_range(cfg), prefix="source")
    return [cfg.resolve("source"), cfg.resolve("masks"), *frames]


def cmd_extract_controls(cfg: RunConfig) -> List[Path]:
    video = read_tensor(cfg.resolve("source"))
    registry = ExtractorRegistry()
    written = []
    for kind, path in zip(cfg.data.control_kinds, cfg.control_paths()):
        stack = extract_controls(video, kind, registry)
        write_tensor(path, stack.controls[0])
        written.append(path)
    return written


def cmd_train(cfg: RunConfig) -> List[Path]:
    video = read_tensor(cfg.resolve("source"))
    stack = load_controls(cfg, int(video.shape[0]))
    sched = build_schedule_from(cfg)
    p_s, _ = prompts(cfg)
    factory = DenoiserFactory("cli")
    dcfg = build_denoiser_config(cfg, int(video.shape[1]))
    if cfg.model.lora_rank > 0:
        model = factory.create_with_lora(dcfg, cfg.seed, rank=cfg.model.lora_rank, scale=cfg.model.lora_scale)
    else:
        model = factory.create_denoiser(dcfg, cfg.seed)
    if cfg.model.lora_rank > 0 and cfg.train.lora_pretrain_iterations > 0:
        pre = TrainConfig(iterations=cfg.train.lora_pretrain_iterations,
                          learning_rate=cfg.train.learning_rate, trainable_set=("lora",), seed=cfg.seed)
        lora_pretrain([video[:1]], p_s, model, pre, sched)

    tcfg = build_train_config(cfg)
    recorder = LossTraceRecorder()
    one_shot_finetune(video, stack, p_s, model, tcfg, sched, observers=[recorder])

    manager = ModelManager()
    manager.add_model(model, "trained")
    metadata = {
        "seed": cfg.seed,
        "train": tcfg.metadata(),
        "sampler": build_sampler_config(cfg).metadata(),
        "schedule": cfg.schedule.model_dump(),
        "source_prompt": p_s.text,
    }
    checkpoint = manager.save_model("trained", cfg.resolve("checkpoint"), metadata)
    loss_path = cfg.out_dir / "loss.txt"
    loss_path.write_text(recorder.to_text(), encoding="utf-8")
    return [checkpoint, loss_path]


def _edit_inputs(cfg: RunConfig):
    video = read_tensor(cfg.resolve("source"))
    stack = load_controls(cfg, int(video.shape[0]))
    model = load_or_create_model(cfg, int(video.shape[1]), ModelManager())
    return video, stack, model


def cmd_edit(cfg: RunConfig) -> List[Path]:
    video, stack, model = _edit_inputs(cfg)
    sched = build_schedule_from(cfg)
    sampler = build_sampler_config(cfg)
    sampler.validate(sched)
    p_s, p_t = prompts(cfg)
    with torch.no_grad():
        edited = edit_video(video, model, stack, p_s, p_t, sched, sampler)
    path = cfg.resolve("edited")
    write_tensor(path, edited)
    frames = export_frames(edited, cfg.out_dir / "frames", _value_range(cfg), prefix="edited")
    return [path, *frames]


def cmd_long_edit(cfg: RunConfig) -> List[Path]:
    video, stack, model = _edit_inputs(cfg)
    sched = build_schedule_from(cfg)
    sampler = build_sampler_config(cfg)
    sampler.validate(sched)
    p_s, p_t = prompts(cfg)
    lv = cfg.long_video
    plan = plan_windows(int(video.shape[0]), lv.window, lv.effective_overlap)
    f = WeightFunction(lv.weight_kind, lv.sigma)
    kf = KeyFusionConfig(lv.key_fusion_weight, lv.key_fusion_mode)
    dump = cfg.out_dir / "fusion_weights.txt" if lv.dump_weights else None
    with torch.no_grad():
        x_init = long_initial_value(video, stack, p_s, model, sched, plan, f, sampler, workers=lv.workers)
        edited = long_edit(x_init, stack, p_t, model, sched, plan, f, kf, sampler,
                           workers=lv.workers, dump_weights=dump)
    path = cfg.out_dir / "long_edited.cft"
    write_tensor(path, edited)
    plan_path = cfg.out_dir / "plan.json"
    plan_path.write_text(json.dumps(plan.to_dict(), sort_keys=True), encoding="utf-8")
    frames = export_frames(edited, cfg.out_dir / "frames", _value_range(cfg), prefix="long_edited")
    return [path, plan_path, *frames] + ([dump] if dump is not None else [])


def cmd_metrics(cfg: RunConfig) -> Tuple[List[Path], str]:
    source = read_tensor(cfg.resolve("source"))
    edited = read_tensor(cfg.resolve("edited"))
    masks = read_tensor(cfg.resolve("masks")) if cfg.paths.masks else None
    report = evaluate(source, edited, masks, cfg.metrics.data_range)
    path = cfg.out_dir / "metrics.txt"
    report.write(path)
    return [path], report.to_text()


HANDLERS: Dict[str, Callable[[RunConfig], List[Path]]] = {
    "synthesize-data": cmd_synthesize_data,
    "extract-controls": cmd_extract_controls,
    "train": cmd_train,
    "edit": cmd_edit,
    "long-edit": cmd_long_edit,
}


def run_subcommand(name: str, cfg: RunConfig) -> RunResult:
    """Run one subcommand; engine errors are logged and reported as status 2."""
    if name not in SUBCOMMANDS:
        raise ValueError(f"Unknown subcommand: {name}")
    try:
        cfg.check_paths(name)
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        if name == "metrics":
            artifacts, report = cmd_metrics(cfg)
            return RunResult(0, artifacts, report)
        artifacts = HANDLERS[name](cfg)
    except ClipForgeError as exc:
        logger.error("%s failed: %s", name, exc)
        return RunResult(2)
    logger.info("%s wrote %d artifacts under %s", name, len(artifacts), cfg.out_dir)
    return RunResult(0, artifacts)
