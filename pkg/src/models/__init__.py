"""
Domain models for clipforge.
"""
from .errors import (
    ClipForgeError,
    ShapeMismatchError,
    ScheduleError,
    ControlStackError,
    WindowPlanError,
    TrainingError,
    LoRAError,
    MetricError,
    TensorFileError,
    ConfigError,
)
from .video import LatentVideo, check_video, check_same_shape, broadcast_frame
from .controls import ControlStack, apply_mask_to_controls
from .prompt import PromptEmbedding, embed_prompt, null_prompt
from .observers import RunEvent, RunObserver, RunSubject, LossTraceRecorder, LoggingObserver

__all__ = [
    "ClipForgeError",
    "ShapeMismatchError",
    "ScheduleError",
    "ControlStackError",
    "WindowPlanError",
    "TrainingError",
    "LoRAError",
    "MetricError",
    "TensorFileError",
    "ConfigError",
    "LatentVideo",
    "check_video",
    "check_same_shape",
    "broadcast_frame",
    "ControlStack",
    "apply_mask_to_controls",
    "PromptEmbedding",
    "embed_prompt",
    "null_prompt",
    "RunEvent",
    "RunObserver",
    "RunSubject",
    "LossTraceRecorder",
    "LoggingObserver",
]
