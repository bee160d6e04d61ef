"""
Exception hierarchy for clipforge
"""

from typing import List, Optional


class ClipForgeError(Exception):
    """base class for every error raised by the engine."""
    pass


class ShapeMismatchError(ClipForgeError):
    """exception raised when tensor shapes violate a contract."""
    pass


class ScheduleError(ClipForgeError):
    """exception raised for invalid noise schedules or timesteps."""
    pass


class ControlStackError(ClipForgeError):
    """exception raised for invalid controls or masks."""
    pass


class WindowPlanError(ClipForgeError):
    """exception raised for invalid window plans and fusion inputs."""
    pass


class TrainingError(ClipForgeError):
    """exception raised when a training run cannot start."""
    pass


class LoRAError(ClipForgeError):
    """exception raised for invalid low-rank adapters."""
    pass


class MetricError(ClipForgeError):
    """exception raised when metric preconditions fail."""
    pass


class TensorFileError(ClipForgeError):
    """exception raised for malformed tensor files and checkpoints."""
    pass


class ConfigError(ClipForgeError):
    """exception raised when a run configuration fails validation."""

    def __init__(self, problems: List[str], source: Optional[str] = None):
        self.problems = list(problems)
        self.source = source
        where = f" in {source}" if source else ""
        super().__init__(f"invalid configuration{where}:\n  " + "\n  ".join(self.problems))
