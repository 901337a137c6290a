"""File storage for rasters and reports.

PNG only, 8- or 16-bit, grayscale or colour. Integer levels map to [0, 1]
by dividing by 255 or 65535; writing quantizes with round-half-up.

All writes are atomic: content goes to a temp file in the destination
directory and is renamed over the target, so a failed run never leaves a
partially written output behind.
"""
import logging
import os
import tempfile
from pathlib import Path
from typing import Union

import cv2
import numpy as np

from errors import ImageReadError
from models import AlphaMatte, BinaryMask, ImageBuffer

logger = logging.getLogger(__name__)

_LEVELS = {np.dtype(np.uint8): 255.0, np.dtype(np.uint16): 65535.0}


# --- Reading ---

def _decode_levels(path: Union[str, Path]) -> tuple[np.ndarray, int]:
    path = Path(path)
    try:
        raw = np.fromfile(path, dtype=np.uint8)
    except OSError as e:
        raise ImageReadError(f"cannot read {path}: {e}") from e
    arr = cv2.imdecode(raw, cv2.IMREAD_UNCHANGED)
    if arr is None:
        raise ImageReadError(f"cannot decode {path}")
    levels = _LEVELS.get(arr.dtype)
    if levels is None:
        raise ImageReadError(f"unsupported sample type {arr.dtype} in {path}")
    return arr.astype(np.float64) / levels, 8 if arr.dtype == np.uint8 else 16


def _decode(path: Union[str, Path]) -> np.ndarray:
    return _decode_levels(path)[0]


def read_image(path: Union[str, Path]) -> ImageBuffer:
    """Load a PNG as an RGB or grayscale ImageBuffer."""
    arr = _decode(path)
    if arr.ndim == 3:
        if arr.shape[2] == 4:
            logger.debug("Dropping alpha channel of %s", path)
        arr = arr[:, :, 2::-1]  # BGR(A) -> RGB
    return ImageBuffer.from_hwc(arr)


def read_matte_with_depth(path: Union[str, Path]) -> tuple[AlphaMatte, int]:
    """Load a PNG as a single-channel matte plus its bit depth (8 or 16).

    Colour files contribute their alpha channel when present, else the
    first channel (labels are usually stored replicated).
    """
    arr, depth = _decode_levels(path)
    if arr.ndim == 3:
        arr = arr[:, :, 3] if arr.shape[2] == 4 else arr[:, :, 0]
    return AlphaMatte(values=arr), depth


def read_matte(path: Union[str, Path]) -> AlphaMatte:
    return read_matte_with_depth(path)[0]


# --- Writing ---

def quantize(values: np.ndarray, bit_depth: int = 8) -> np.ndarray:
    """Round-half-up float [0, 1] samples to integer levels."""
    dtype = np.uint8 if bit_depth == 8 else np.uint16
    levels = 255.0 if bit_depth == 8 else 65535.0
    return np.floor(np.clip(values, 0.0, 1.0) * levels + 0.5).astype(dtype)


def write_bytes_atomic(path: Union[str, Path], content: bytes) -> Path:
    """Write bytes via temp file + rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, temp_path = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(content)
        os.replace(temp_path, path)
    except BaseException:
        if os.path.exists(temp_path):
            os.remove(temp_path)
        raise
    return path


def write_text_atomic(path: Union[str, Path], text: str) -> Path:
    return write_bytes_atomic(path, text.encode("utf-8"))


def copy_file_atomic(src: Union[str, Path], dst: Union[str, Path]) -> Path:
    """Byte-for-byte copy with the same atomic rename as every other write."""
    try:
        content = Path(src).read_bytes()
    except OSError as e:
        raise ImageReadError(f"cannot read {src}: {e}") from e
    return write_bytes_atomic(dst, content)


def encode_png(raster: Union[ImageBuffer, AlphaMatte, BinaryMask], bit_depth: int = 8) -> bytes:
    """Encode a raster as PNG bytes (mattes and masks as single-channel)."""
    if isinstance(raster, ImageBuffer):
        arr = raster.to_hwc()
        if raster.channels == 3:
            arr = arr[:, :, ::-1]  # RGB -> BGR
        else:
            arr = arr[:, :, 0]
    else:
        arr = raster.values
    ok, encoded = cv2.imencode(".png", np.ascontiguousarray(quantize(arr, bit_depth)))
    if not ok:
        raise RuntimeError("Failed to encode PNG")
    return encoded.tobytes()


def write_png(
    path: Union[str, Path],
    raster: Union[ImageBuffer, AlphaMatte, BinaryMask],
    bit_depth: int = 8,
) -> Path:
    """Atomically write a raster as PNG."""
    path = write_bytes_atomic(path, encode_png(raster, bit_depth))
    logger.debug("Wrote %s", path)
    return path
