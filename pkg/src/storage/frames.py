"""
8-bit portable pixmap export of latent frames
"""

import logging
from pathlib import Path
from typing import List, Tuple

import numpy as np
import torch

from ..models.video import check_video

logger = logging.getLogger(__name__)


def to_rgb8(frame: torch.Tensor, value_range: Tuple[float, float] = (-1.0, 1.0)) -> np.ndarray:
    """C x H x W latent frame -> H x W x 3 uint8, using the first three channels."""
    low, high = value_range
    data = frame.detach().cpu().to(torch.float64).numpy()
    if data.shape[0] >= 3:
        data = data[:3]
    else:
        data = np.repeat(data[:1], 3, axis=0)
    scaled = np.clip((data - low) / (high - low), 0.0, 1.0) * 255.0
    return np.rint(scaled).astype(np.uint8).transpose(1, 2, 0)


def encode_ppm(rgb: np.ndarray) -> bytes:
    height, width, _ = rgb.shape
    return f"P6\n{width} {height}\n255\n".encode("ascii") + np.ascontiguousarray(rgb).tobytes()


def export_frames(video: torch.Tensor, out_dir: Path, value_range: Tuple[float, float] = (-1.0, 1.0),
                  prefix: str = "frame") -> List[Path]:
    check_video(video)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(video.shape[0]):
        path = out_dir / f"{prefix}_{i + 1:04d}.ppm"
        path.write_bytes(encode_ppm(to_rgb8(video[i], value_range)))
        paths.append(path)
    logger.info("exported %d frames to %s", len(paths), out_dir)
    return paths
