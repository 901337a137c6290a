"""Matting-equation compositing and label derivation.

C = alpha * F + (1 - alpha) * B, per pixel and channel, in float. Values
are quantized only when written to disk.
"""
import numpy as np
from scipy import ndimage

from errors import ShapeMismatch
from models import AlphaMatte, BinaryMask, ImageBuffer, Tensor
from raster_utils import resize_planes

TRIMAP_FOREGROUND = 1.0
TRIMAP_UNKNOWN = 0.5
TRIMAP_BACKGROUND = 0.0


def composite_arrays(fg: np.ndarray, bg: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Blend planar (C, H, W) arrays with an (H, W) alpha.

    Evaluated as B + a(F - B) with a == 1 taken from F, so alpha 0, alpha 1
    and F == B all reproduce their operand bit for bit.
    """
    a = alpha[np.newaxis]
    return np.where(a == 1.0, fg, bg + a * (fg - bg))


def composite(fg: ImageBuffer, bg: ImageBuffer, alpha: AlphaMatte) -> ImageBuffer:
    """Compose foreground over background.

    Raises:
        ShapeMismatch: sizes differ or fg/bg channel counts differ
    """
    if fg.size != bg.size or fg.size != alpha.size:
        raise ShapeMismatch(f"fg {fg.size}, bg {bg.size}, alpha {alpha.size}")
    if fg.channels != bg.channels:
        raise ShapeMismatch(f"fg has {fg.channels} channels, bg has {bg.channels}")
    out = composite_arrays(fg.data, bg.data, alpha.values)
    # Convex combination; clip only absorbs float rounding
    return ImageBuffer(data=np.clip(out, 0.0, 1.0))


def binarize_alpha(alpha: AlphaMatte) -> BinaryMask:
    """Coarse label: 1 wherever alpha > 0."""
    return BinaryMask.from_bool(alpha.values > 0.0)


def make_trimap(alpha: AlphaMatte, radius: int) -> ImageBuffer:
    """Three-region map from a matte.

    Definite foreground is alpha == 1 eroded by a (2r+1)² square, definite
    background is everything outside alpha > 0 dilated by the same square,
    and the rest is unknown (0.5). Pixels beyond the image border count as
    background, so erosion eats into foreground touching the border.
    """
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    structure = np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)
    fg = ndimage.binary_erosion(alpha.values >= 1.0, structure=structure, border_value=0)
    reach = ndimage.binary_dilation(alpha.values > 0.0, structure=structure, border_value=0)

    trimap = np.full(alpha.size, TRIMAP_UNKNOWN)
    trimap[fg] = TRIMAP_FOREGROUND
    trimap[~reach] = TRIMAP_BACKGROUND
    return ImageBuffer(data=trimap)


def unknown_band(trimap: ImageBuffer) -> BinaryMask:
    """Unknown (0.5) region of a trimap."""
    return BinaryMask.from_bool(trimap.data[0] == TRIMAP_UNKNOWN)


def refine_input(image: ImageBuffer, coarse: AlphaMatte) -> Tensor:
    """Stack an image with its coarse foreground map for the refine stage.

    The 1-channel coarse map is replicated to 3 channels, bilinearly
    upsampled to the image size and concatenated after the image channels.
    """
    if image.channels != 3:
        raise ShapeMismatch(f"refine input expects an RGB image, got {image.channels} channels")
    mask = resize_planes(coarse.values, image.height, image.width)
    mask = np.repeat(np.clip(mask, 0.0, 1.0)[np.newaxis], 3, axis=0)
    return Tensor(data=np.concatenate([image.data, mask], axis=0))
