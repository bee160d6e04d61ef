"""
Binary tensor files and named-tensor checkpoints.

TensorFile layout (little-endian)::

    magic    4 bytes   b"CFTN"
    version  uint16    1
    dtype    uint8     see DTYPE_CODES
    ndim     uint8
    dims     ndim x uint64
    payload  product(dims) x itemsize, row-major

Checkpoint layout (little-endian)::

    magic    4 bytes   b"CFCK"
    version  uint16    1
    meta_len uint32, then meta_len bytes of sorted-key UTF-8 JSON
    count    uint32
    count x (name_len uint16, UTF-8 name, tensor record)

A tensor record is a TensorFile without its magic and version.
"""

import io
import json
import logging
import struct
from pathlib import Path
from typing import Any, BinaryIO, Dict, Tuple

import numpy as np
import torch

from ..models.errors import TensorFileError

logger = logging.getLogger(__name__)

TENSOR_MAGIC = b"CFTN"
CHECKPOINT_MAGIC = b"CFCK"
FORMAT_VERSION = 1

DTYPE_CODES = {
    torch.float64: 1,
    torch.float32: 2,
    torch.int64: 3,
    torch.uint8: 4,
}
NUMPY_DTYPES = {
    1: np.dtype("<f8"),
    2: np.dtype("<f4"),
    3: np.dtype("<i8"),
    4: np.dtype("u1"),
}
TORCH_DTYPES = {code: dtype for dtype, code in DTYPE_CODES.items()}


def _read_exact(stream: BinaryIO, size: int, what: str) -> bytes:
    data = stream.read(size)
    if len(data) != size:
        raise TensorFileError(f"truncated {what}: expected {size} bytes, got {len(data)}")
    return data


def _write_record(stream: BinaryIO, tensor: torch.Tensor) -> None:
    tensor = tensor.detach().cpu().contiguous()
    if tensor.dtype not in DTYPE_CODES:
        raise TensorFileError(f"unsupported dtype {tensor.dtype}")
    code = DTYPE_CODES[tensor.dtype]
    if tensor.dim() > 255:
        raise TensorFileError(f"too many dimensions: {tensor.dim()}")
    stream.write(struct.pack("<BB", code, tensor.dim()))
    stream.write(struct.pack(f"<{tensor.dim()}Q", *tensor.shape))
    stream.write(tensor.numpy().astype(NUMPY_DTYPES[code], copy=False).tobytes(order="C"))


def _read_record(stream: BinaryIO) -> torch.Tensor:
    code, ndim = struct.unpack("<BB", _read_exact(stream, 2, "tensor header"))
    if code not in NUMPY_DTYPES:
        raise TensorFileError(f"unknown dtype code {code}")
    dims = struct.unpack(f"<{ndim}Q", _read_exact(stream, 8 * ndim, "dims"))
    np_dtype = NUMPY_DTYPES[code]
    count = int(np.prod(dims, dtype=np.int64)) if ndim else 1
    payload = _read_exact(stream, count * np_dtype.itemsize, "payload")
    array = np.frombuffer(payload, dtype=np_dtype).reshape(dims)
    return torch.from_numpy(array.astype(np_dtype.newbyteorder("="), copy=True))


def _check_header(stream: BinaryIO, magic: bytes) -> None:
    found = _read_exact(stream, 4, "magic")
    if found != magic:
        raise TensorFileError(f"bad magic {found!r}, expected {magic!r}")
    (version,) = struct.unpack("<H", _read_exact(stream, 2, "version"))
    if version != FORMAT_VERSION:
        raise TensorFileError(f"unsupported format version {version}")


def encode_tensor(tensor: torch.Tensor) -> bytes:
    stream = io.BytesIO()
    stream.write(TENSOR_MAGIC)
    stream.write(struct.pack("<H", FORMAT_VERSION))
    _write_record(stream, tensor)
    return stream.getvalue()


def decode_tensor(data: bytes) -> torch.Tensor:
    stream = io.BytesIO(data)
    _check_header(stream, TENSOR_MAGIC)
    tensor = _read_record(stream)
    if stream.read(1):
        raise TensorFileError("trailing bytes after payload")
    return tensor


def write_tensor(path: Path, tensor: torch.Tensor) -> None:
    Path(path).write_bytes(encode_tensor(tensor))
    logger.debug("wrote %s %s", path, tuple(tensor.shape))


def read_tensor(path: Path) -> torch.Tensor:
    return decode_tensor(Path(path).read_bytes())


def encode_checkpoint(tensors: Dict[str, torch.Tensor], metadata: Dict[str, Any]) -> bytes:
    stream = io.BytesIO()
    stream.write(CHECKPOINT_MAGIC)
    stream.write(struct.pack("<H", FORMAT_VERSION))
    meta = json.dumps(metadata, sort_keys=True, separators=(",", ":")).encode("utf-8")
    stream.write(struct.pack("<I", len(meta)))
    stream.write(meta)
    stream.write(struct.pack("<I", len(tensors)))
    for name in sorted(tensors):
        raw = name.encode("utf-8")
        stream.write(struct.pack("<H", len(raw)))
        stream.write(raw)
        _write_record(stream, tensors[name])
    return stream.getvalue()


def decode_checkpoint(data: bytes) -> Tuple[Dict[str, torch.Tensor], Dict[str, Any]]:
    stream = io.BytesIO(data)
    _check_header(stream, CHECKPOINT_MAGIC)
    (meta_len,) = struct.unpack("<I", _read_exact(stream, 4, "metadata length"))
    try:
        metadata = json.loads(_read_exact(stream, meta_len, "metadata").decode("utf-8"))
    except ValueError as exc:
        raise TensorFileError(f"corrupt metadata: {exc}") from exc
    (count,) = struct.unpack("<I", _read_exact(stream, 4, "tensor count"))
    tensors = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", _read_exact(stream, 2, "name length"))
        name = _read_exact(stream, name_len, "name").decode("utf-8")
        tensors[name] = _read_record(stream)
    if stream.read(1):
        raise TensorFileError("trailing bytes after last tensor")
    return tensors, metadata


def save_checkpoint(path: Path, tensors: Dict[str, torch.Tensor], metadata: Dict[str, Any]) -> None:
    Path(path).write_bytes(encode_checkpoint(tensors, metadata))
    logger.info("saved checkpoint %s (%d tensors)", path, len(tensors))


def load_checkpoint(path: Path) -> Tuple[Dict[str, torch.Tensor], Dict[str, Any]]:
    tensors, metadata = decode_checkpoint(Path(path).read_bytes())
    logger.info("loaded checkpoint %s (%d tensors)", path, len(tensors))
    return tensors, metadata
