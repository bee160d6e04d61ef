"""
Tensor, checkpoint and frame file formats.
"""

from .tensorfile import (
    encode_tensor,
    decode_tensor,
    write_tensor,
    read_tensor,
    encode_checkpoint,
    decode_checkpoint,
    save_checkpoint,
    load_checkpoint,
    DTYPE_CODES,
)
from .frames import export_frames, encode_ppm, to_rgb8

__all__ = [
    "encode_tensor",
    "decode_tensor",
    "write_tensor",
    "read_tensor",
    "encode_checkpoint",
    "decode_checkpoint",
    "save_checkpoint",
    "load_checkpoint",
    "DTYPE_CODES",
    "export_frames",
    "encode_ppm",
    "to_rgb8",
]
