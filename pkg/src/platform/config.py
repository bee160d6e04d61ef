"""
Run configuration: a validated YAML document with one section per module.

Unknown keys are rejected everywhere. Relative artifact paths left unset
resolve to fixed names under ``paths.out_dir`` so subcommands chain.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..models.errors import ConfigError

logger = logging.getLogger(__name__)

SUBCOMMANDS = ("synthesize-data", "extract-controls", "train", "edit", "long-edit", "metrics")

ControlKind = Literal["edge_like", "boundary_like", "depth_like", "pose_like"]

# artifact names under out_dir
DEFAULT_ARTIFACTS = {
    "source": "source.cft",
    "masks": "masks.cft",
    "checkpoint": "checkpoint.cfck",
    "edited": "edited.cft",
}


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PathsSection(Section):
    out_dir: str = "runs/default"
    source: Optional[str] = None
    masks: Optional[str] = None
    controls: Optional[List[str]] = None
    checkpoint: Optional[str] = None
    edited: Optional[str] = None


class DataSection(Section):
    kind: Literal["moving_square", "gradient_drift", "two_object"] = "moving_square"
    frames: int = Field(8, ge=1)
    height: int = Field(8, ge=4)
    width: int = Field(8, ge=4)
    channels: int = Field(4, ge=1)
    control_kinds: List[ControlKind] = Field(default_factory=lambda: ["edge_like"])
    control_scales: Optional[List[float]] = None
    value_range: List[float] = Field(default_factory=lambda: [-1.0, 1.0], min_length=2, max_length=2)

    @model_validator(mode="after")
    def _check(self) -> "DataSection":
        if self.height % 4 or self.width % 4:
            raise ValueError("height and width must be divisible by 4")
        if self.control_scales is not None:
            if len(self.control_scales) != len(self.control_kinds):
                raise ValueError("control_scales must have one entry per control kind")
            if any(s < 0 for s in self.control_scales):
                raise ValueError("control scales must be >= 0")
        if self.value_range[0] >= self.value_range[1]:
            raise ValueError("value_range must be increasing")
        return self


class ModelSection(Section):
    width: int = Field(32, ge=4)
    text_dim: int = Field(16, ge=1)
    max_tokens: int = Field(8, ge=1)
    kv_mode: Literal["key_frame", "self", "key_and_self"] = "key_frame"
    temporal_position: Literal["with", "before"] = "with"
    temporal_init: Literal["copy", "random"] = "copy"
    temporal_stages: List[Literal["down1", "down2", "mid", "up2", "up1"]] = Field(
        default_factory=lambda: ["down1", "down2", "up2", "up1"]
    )
    control_temporal: bool = False
    use_temporal: bool = True
    use_controls: bool = True
    use_key_frame: bool = True
    lora_rank: int = Field(0, ge=0)
    lora_scale: float = 1.0


class ScheduleSection(Section):
    T: int = Field(1000, ge=1)
    kind: Literal["scaled_linear", "linear"] = "scaled_linear"
    beta_start: float = Field(0.00085, gt=0, lt=1)
    beta_end: float = Field(0.012, gt=0, lt=1)


class SamplerSection(Section):
    steps: int = Field(50, ge=1)
    guidance_scale: float = Field(12.0, ge=0)
    init_mode: Literal["ddim_inversion", "noisy_source", "gaussian"] = "ddim_inversion"
    start_timestep: Optional[int] = Field(None, ge=1)
    source_prompt: str = "a square on a plain background"
    target_prompt: str = "a glowing square on a plain background"


class TrainSection(Section):
    iterations: Optional[int] = Field(None, ge=0)
    learning_rate: float = Field(3e-5, gt=0)
    trainable_set: List[Literal["keyframe_out", "control_keyframe_out", "temporal_attention",
                                "temporal_gate", "lora"]] = Field(
        default_factory=lambda: ["keyframe_out", "control_keyframe_out", "temporal_attention", "temporal_gate"]
    )
    key_frame: int = Field(1, ge=1)
    lora_pretrain_iterations: int = Field(0, ge=0)


class LongVideoSection(Section):
    window: int = Field(16, ge=1, le=256)
    overlap: int = Field(8, ge=0)
    weight_kind: Literal["gaussian", "constant", "linear", "cosine", "inverse_sqrt"] = "gaussian"
    sigma: float = Field(0.1, gt=0)
    key_fusion_weight: float = Field(0.3, ge=0, le=1)
    key_fusion_mode: Literal["key_only", "literal"] = "key_only"
    strategy: Literal["overlap", "disjoint"] = "overlap"
    workers: int = Field(1, ge=1)
    dump_weights: bool = False

    @model_validator(mode="after")
    def _check(self) -> "LongVideoSection":
        if self.overlap >= self.window:
            raise ValueError("overlap must be smaller than window")
        return self

    @property
    def effective_overlap(self) -> int:
        return 0 if self.strategy == "disjoint" else self.overlap


class MetricsSection(Section):
    data_range: float = Field(2.0, gt=0)


class RunConfig(Section):
    paths: PathsSection = Field(default_factory=PathsSection)
    data: DataSection = Field(default_factory=DataSection)
    model: ModelSection = Field(default_factory=ModelSection)
    schedule: ScheduleSection = Field(default_factory=ScheduleSection)
    sampler: SamplerSection = Field(default_factory=SamplerSection)
    train: TrainSection = Field(default_factory=TrainSection)
    long_video: LongVideoSection = Field(default_factory=LongVideoSection)
    metrics: MetricsSection = Field(default_factory=MetricsSection)
    seed: int = 0
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"

    @model_validator(mode="after")
    def _check(self) -> "RunConfig":
        if self.sampler.start_timestep is not None and self.sampler.start_timestep > self.schedule.T:
            raise ValueError("sampler.start_timestep must not exceed schedule.T")
        if self.sampler.steps > self.schedule.T:
            raise ValueError("sampler.steps must not exceed schedule.T")
        if self.train.key_frame > self.data.frames:
            raise ValueError("train.key_frame must not exceed data.frames")
        return self

    @property
    def out_dir(self) -> Path:
        return Path(self.paths.out_dir)

    def resolve(self, artifact: str) -> Path:
        """Configured path of an artifact, or its default name under out_dir."""
        value = getattr(self.paths, artifact)
        return Path(value) if value else self.out_dir / DEFAULT_ARTIFACTS[artifact]

    def control_paths(self) -> List[Path]:
        if self.paths.controls is not None:
            return [Path(p) for p in self.paths.controls]
        return [self.out_dir / f"control_{kind}.cft" for kind in self.data.control_kinds]

    def check_paths(self, subcommand: str) -> None:
        """Raise ConfigError naming every input file ``subcommand`` reads but cannot find."""
        if subcommand not in SUBCOMMANDS:
            raise ValueError(f"Unknown subcommand: {subcommand}")
        required: Dict[str, Path] = {}
        if subcommand != "synthesize-data":
            required["paths.source"] = self.resolve("source")
        if subcommand in ("train", "edit", "long-edit") and self.model.use_controls:
            for idx, path in enumerate(self.control_paths()):
                required[f"paths.controls.{idx}"] = path
        if subcommand in ("edit", "long-edit") and self.paths.checkpoint:
            required["paths.checkpoint"] = self.resolve("checkpoint")
        if subcommand == "metrics":
            required["paths.edited"] = self.resolve("edited")
            if self.paths.masks:
                required["paths.masks"] = self.resolve("masks")
        missing = [f"{key}: file not found: {path}" for key, path in required.items() if not path.exists()]
        if missing:
            raise ConfigError(missing)


def _problems(exc: ValidationError) -> List[str]:
    problems = []
    for error in exc.errors():
        where = ".".join(str(part) for part in error["loc"]) or "<root>"
        problems.append(f"{where}: {error['msg']}")
    return problems


def parse_config(data: Optional[Dict[str, Any]], source: Optional[str] = None) -> RunConfig:
    try:
        return RunConfig.model_validate(data or {})
    except ValidationError as exc:
        raise ConfigError(_problems(exc), source) from exc


def load_config(path: Optional[Path]) -> RunConfig:
    """Load and validate a YAML config; ``None`` gives all defaults."""
    if path is None:
        return RunConfig()
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError([f"<file>: cannot read {path}: {exc}"], str(path)) from exc
    except yaml.YAMLError as exc:
        raise ConfigError([f"<file>: invalid YAML: {exc}"], str(path)) from exc
    if data is not None and not isinstance(data, dict):
        raise ConfigError(["<root>: top level must be a mapping"], str(path))
    cfg = parse_config(data, str(path))
    logger.debug("loaded config from %s", path)
    return cfg


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.model_dump(mode="json"), sort_keys=True)


def override(cfg: RunConfig, seed: Optional[int] = None, out_dir: Optional[str] = None) -> RunConfig:
    """Copy of ``cfg`` with command-line overrides applied and revalidated."""
    data = cfg.model_dump(mode="json")
    if seed is not None:
        data["seed"] = seed
    if out_dir is not None:
        data["paths"]["out_dir"] = str(out_dir)
    return parse_config(data)
