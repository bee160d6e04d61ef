"""
One-shot fine-tuning.
"""

from .selection import (
    PARAMETER_GROUPS,
    DEFAULT_TRAINABLE,
    DEFAULT_ITERATIONS,
    TrainConfig,
    select_parameters,
    count_trainable,
)
from .finetune import FineTuner, one_shot_finetune, lora_pretrain

__all__ = [
    "PARAMETER_GROUPS",
    "DEFAULT_TRAINABLE",
    "DEFAULT_ITERATIONS",
    "TrainConfig",
    "select_parameters",
    "count_trainable",
    "FineTuner",
    "one_shot_finetune",
    "lora_pretrain",
]
