"""Raster geometry helpers: bilinear resize, preprocessing policies, flips, crops.

Bilinear convention: half-pixel centres (align_corners=False). Output pixel
i samples source coordinate (i + 0.5) * in / out - 0.5, clamped to the
valid range, so edges replicate and constants stay constant.
"""
from typing import TypeVar, Union

import numpy as np

from errors import ChannelMismatch, ZeroDimension
from models import AlphaMatte, BinaryMask, ImageBuffer

R = TypeVar("R", ImageBuffer, AlphaMatte)

DEFAULT_ABSOLUTE_SIZE = 512


def _axis_weights(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.floor(src).astype(np.intp)
    i1 = np.minimum(i0 + 1, n_in - 1)
    return i0, i1, src - i0


def resize_planes(planes: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of a (..., H, W) array over its last two axes."""
    if out_h < 1 or out_w < 1:
        raise ZeroDimension(f"requested size {out_h}x{out_w}")
    in_h, in_w = planes.shape[-2:]
    if (in_h, in_w) == (out_h, out_w):
        return np.array(planes, dtype=np.float64, copy=True)

    y0, y1, wy = _axis_weights(in_h, out_h)
    x0, x1, wx = _axis_weights(in_w, out_w)

    rows = planes[..., y0, :] * (1.0 - wy)[:, None] + planes[..., y1, :] * wy[:, None]
    return rows[..., x0] * (1.0 - wx) + rows[..., x1] * wx


def resize_bilinear(img: R, out_h: int, out_w: int) -> R:
    """Resize an image or matte to (out_h, out_w) with half-pixel centres.

    Raises:
        ZeroDimension: if either requested side is below 1
    """
    if isinstance(img, ImageBuffer):
        out = resize_planes(img.data, out_h, out_w)
        return ImageBuffer(data=np.clip(out, 0.0, 1.0))
    out = resize_planes(img.values, out_h, out_w)
    return AlphaMatte(values=np.clip(out, 0.0, 1.0))


# --- Preprocessing policies ---

def resize_policy(height: int, width: int, policy: str) -> tuple[int, int]:
    """Target size for a preprocessing policy token.

    Tokens:
        original          keep the native size
        relative:<f>      scale each side by f (e.g. relative:0.25)
        absolute:<n>      n×n (absolute:512 is the standard inference size)
    """
    kind, _, arg = policy.partition(":")
    if kind == "original":
        return height, width
    if kind == "relative":
        factor = float(arg)
        if factor <= 0:
            raise ValueError(f"relative factor must be positive, got {arg}")
        return max(1, round(height * factor)), max(1, round(width * factor))
    if kind == "absolute":
        side = int(arg) if arg else DEFAULT_ABSOLUTE_SIZE
        if side < 1:
            raise ZeroDimension(f"absolute size {side}")
        return side, side
    raise ValueError(f"Unknown resize policy: {policy!r}")


def apply_policy(img: R, policy: str) -> R:
    h, w = img.size
    out_h, out_w = resize_policy(h, w, policy)
    return resize_bilinear(img, out_h, out_w)


# --- Geometry ---

def flip_horizontal(img: Union[ImageBuffer, AlphaMatte, BinaryMask]):
    """Mirror left-right."""
    if isinstance(img, ImageBuffer):
        return ImageBuffer(data=img.data[..., ::-1])
    return type(img)(values=img.values[:, ::-1])


def crop_box(height: int, width: int, size: int, rng: np.random.Generator) -> tuple[int, int, int, int]:
    """Draw a size×size patch (top, left, h, w) uniformly inside the image.

    Sides shorter than size are kept whole. Draws top, then left.
    """
    if size < 1:
        raise ZeroDimension(f"crop size {size}")
    ph, pw = min(size, height), min(size, width)
    top = int(rng.integers(height - ph + 1))
    left = int(rng.integers(width - pw + 1))
    return top, left, ph, pw


def crop(img: Union[ImageBuffer, AlphaMatte, BinaryMask], box: tuple[int, int, int, int]):
    top, left, ph, pw = box
    rows, cols = slice(top, top + ph), slice(left, left + pw)
    if isinstance(img, ImageBuffer):
        return ImageBuffer(data=img.data[:, rows, cols])
    return type(img)(values=img.values[rows, cols])


def to_channels(img: ImageBuffer, channels: int) -> ImageBuffer:
    """Promote grayscale to RGB by replication; other conversions are refused."""
    if img.channels == channels:
        return img
    if img.channels == 1 and channels == 3:
        return ImageBuffer(data=np.repeat(img.data, 3, axis=0))
    raise ChannelMismatch(f"cannot convert {img.channels} channels to {channels}")
