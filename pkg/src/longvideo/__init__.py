"""
Long-video editing with overlapping windows and key-frame fusion.
"""

from .windows import (
    WindowPlan,
    WeightFunction,
    KeyFusionConfig,
    WEIGHT_SHAPES,
    plan_windows,
    eval_weights,
    eval_log_weights,
    check_guardrails,
)
from .fusion import (
    padded_weights,
    padded_log_weights,
    normalized_weights,
    fuse_windows,
    extract_keyframe_video,
    fuse_keyframe,
)
from .editor import predict_windows, long_initial_value, long_edit

__all__ = [
    "WindowPlan",
    "WeightFunction",
    "KeyFusionConfig",
    "WEIGHT_SHAPES",
    "plan_windows",
    "eval_weights",
    "eval_log_weights",
    "check_guardrails",
    "padded_weights",
    "padded_log_weights",
    "normalized_weights",
    "fuse_windows",
    "extract_keyframe_video",
    "fuse_keyframe",
    "predict_windows",
    "long_initial_value",
    "long_edit",
]
