"""
Platform module for ClipForge core functionality.
"""

from .model_manager import ModelManager
from .factories import DenoiserFactory
from .config import RunConfig, load_config, dump_config, parse_config, override, SUBCOMMANDS
from .runner import RunResult, run_subcommand

__all__ = [
    "ModelManager",
    "DenoiserFactory",
    "RunConfig",
    "load_config",
    "dump_config",
    "parse_config",
    "override",
    "SUBCOMMANDS",
    "RunResult",
    "run_subcommand",
]
