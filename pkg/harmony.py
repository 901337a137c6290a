"""Region-masked statistics transfer for composite harmonization.

The foreground region of a composite is normalized with its own per-channel
mean/std and re-scaled with the background's, pixel by pixel:

    out = scale_c * (in - mu_c) / sigma_c + shift_c

With the default role assignment scale is the background std and shift the
background mean. ``literal_affine`` swaps them (scale = background mean,
shift = background std), matching the formula as originally printed; it is
kept for comparison only.
"""
import logging
from typing import Optional

import numpy as np

from config import HarmonySettings
from errors import EmptyBackground, EmptyMask, ShapeMismatch
from models import BinaryMask, ImageBuffer, RegionStats

logger = logging.getLogger(__name__)


def _region_moments(data: np.ndarray, mask: np.ndarray, epsilon: float) -> tuple[np.ndarray, np.ndarray, int]:
    count = int(np.count_nonzero(mask))
    pixels = data[:, mask]  # (C, count), raster order
    mean = pixels.sum(axis=1) / count
    var = ((pixels - mean[:, None]) ** 2).sum(axis=1) / count
    return mean, np.sqrt(var + epsilon), count


def masked_stats(img: ImageBuffer, mask: BinaryMask, epsilon: float = 1e-5) -> RegionStats:
    """Per-channel mean and std over the masked pixels only.

    std includes epsilon under the square root.

    Raises:
        ShapeMismatch: mask size differs from the image
        EmptyMask: mask has no set pixel
    """
    if img.size != mask.size:
        raise ShapeMismatch(f"image {img.size} vs mask {mask.size}")
    if mask.count == 0:
        raise EmptyMask("region has no pixels")
    mean, std, count = _region_moments(img.data, mask.bool_values, epsilon)
    return RegionStats(mean=tuple(mean.tolist()), std=tuple(std.tolist()), pixel_count=count)


def transfer_statistics(
    data: np.ndarray,
    fg_mask: np.ndarray,
    epsilon: float = 1e-5,
    literal_affine: bool = False,
) -> np.ndarray:
    """Statistics transfer on a raw (C, H, W) array, without clamping.

    Background pixels are returned untouched.

    Raises:
        EmptyMask: no foreground pixel
        EmptyBackground: no background pixel
    """
    fg = np.asarray(fg_mask, dtype=bool)
    bg = ~fg
    if not fg.any():
        raise EmptyMask("foreground mask has no pixels")
    if not bg.any():
        raise EmptyBackground("foreground mask covers the whole image")

    fg_mean, fg_std, _ = _region_moments(data, fg, epsilon)
    bg_mean, bg_std, _ = _region_moments(data, bg, epsilon)
    scale, shift = (bg_mean, bg_std) if literal_affine else (bg_std, bg_mean)

    out = np.array(data, dtype=np.float64, copy=True)
    normalized = (data[:, fg] - fg_mean[:, None]) / fg_std[:, None]
    out[:, fg] = scale[:, None] * normalized + shift[:, None]
    logger.debug("Transferred fg mean %s -> %s", fg_mean, shift)
    return out


def harmonize(
    composite: ImageBuffer,
    fg_mask: BinaryMask,
    settings: Optional[HarmonySettings] = None,
) -> ImageBuffer:
    """Re-render the masked foreground with the background's statistics.

    Output is clamped to [0, 1]; unmasked pixels pass through bit-identical.

    Raises:
        ShapeMismatch, EmptyMask, EmptyBackground
    """
    settings = settings or HarmonySettings()
    if composite.size != fg_mask.size:
        raise ShapeMismatch(f"composite {composite.size} vs mask {fg_mask.size}")
    out = transfer_statistics(
        composite.data,
        fg_mask.bool_values,
        epsilon=settings.epsilon,
        literal_affine=settings.literal_affine,
    )
    # Background values are already in range; clamping leaves them unchanged
    return ImageBuffer(data=np.clip(out, 0.0, 1.0))
