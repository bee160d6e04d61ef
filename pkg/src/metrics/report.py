"""
Metric report
"""

import logging
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Dict, Optional

import torch

from ..models.errors import MetricError
from .consistency import drift, temporal_consistency
from .ssim import video_ssim

logger = logging.getLogger(__name__)


@dataclass
class MetricReport:
    ssim: float
    masked_ssim: Optional[float] = None
    temporal_consistency: Optional[float] = None
    drift: Optional[float] = None

    def to_dict(self) -> Dict[str, Optional[float]]:
        return asdict(self)

    def to_text(self) -> str:
        lines = []
        for key, value in self.to_dict().items():
            lines.append(f"{key}={'none' if value is None else repr(float(value))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "MetricReport":
        values = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            key, _, raw = line.partition("=")
            values[key.strip()] = None if raw.strip() == "none" else float(raw)
        return cls(**values)

    def write(self, path: Path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")


def evaluate(source: torch.Tensor, edited: torch.Tensor, masks: Optional[torch.Tensor] = None,
             data_range: float = 2.0) -> MetricReport:
    """SSIM against the source (plus masked SSIM) and consistency of the edit."""
    if source.shape != edited.shape:
        raise MetricError(f"shape mismatch: {tuple(source.shape)} vs {tuple(edited.shape)}")
    report = MetricReport(ssim=video_ssim(source, edited, None, data_range))
    if masks is not None:
        report.masked_ssim = video_ssim(source, edited, masks, data_range)
    if edited.shape[0] >= 2:
        report.temporal_consistency = temporal_consistency(edited)
        report.drift = drift(edited)
    logger.info("metrics: %s", report.to_dict())
    return report
