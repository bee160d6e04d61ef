"""
Command-line entry point: ``clipforge <subcommand> [--config FILE] [--seed N] [--out DIR]``
"""

import argparse
import logging
import os
import sys
from typing import List, Optional

import torch

from .models.errors import ConfigError
from .platform.config import SUBCOMMANDS, load_config, override
from .platform.runner import run_subcommand

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
ENV_OUT_DIR = "CLIPFORGE_OUT_DIR"
ENV_THREADS = "CLIPFORGE_THREADS"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clipforge", description="Control-conditioned video editing at desk scale.")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", type=str, default=None, help="YAML run configuration")
    parser.add_argument("--seed", type=int, default=None, help="override the configured seed")
    parser.add_argument("--out", type=str, default=None, help="override the output directory")
    return parser


def configure_logging(level: str) -> None:
    logging.basicConfig(level=getattr(logging, level), format=LOG_FORMAT, force=True)


def configure_threads() -> None:
    value = os.environ.get(ENV_THREADS)
    if not value:
        return
    try:
        threads = int(value)
    except ValueError:
        raise ConfigError([f"{ENV_THREADS}: not an integer: {value!r}"])
    if threads < 1:
        raise ConfigError([f"{ENV_THREADS}: must be >= 1, got {threads}"])
    torch.set_num_threads(threads)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = override(cfg, seed=args.seed, out_dir=args.out or os.environ.get(ENV_OUT_DIR))
        configure_logging(cfg.log_level)
        configure_threads()
    except ConfigError as exc:
        configure_logging("WARNING")
        logger.error("%s", exc)
        return 2
    torch.use_deterministic_algorithms(True)
    result = run_subcommand(args.subcommand, cfg)
    if result.report is not None:
        sys.stdout.write(result.report)
    return result.status


if __name__ == "__main__":
    sys.exit(main())
