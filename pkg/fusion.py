"""Coarse-to-fine matte fusion.

The high-resolution matte is trusted on its fractional (edge) pixels, the
upsampled low-resolution matte everywhere else:

    fused = g * alpha_h + (1 - g) * upsample(alpha_l),   g = edge_mask(alpha_h)
"""
import logging
from typing import Optional

import numpy as np

from config import FusionSettings
from errors import ShapeMismatch
from models import AlphaMatte, BinaryMask
from raster_utils import resize_planes

logger = logging.getLogger(__name__)


def edge_mask(alpha_h: AlphaMatte, lo: float = 0.0, hi: float = 1.0) -> BinaryMask:
    """1 where lo < alpha_h < hi (strict), else 0.

    The default (0, 1) marks every fractional pixel; 8-bit predictions may
    pass (1/255, 254/255) instead.
    """
    v = alpha_h.values
    return BinaryMask.from_bool((v > lo) & (v < hi))


def fuse(
    alpha_h: AlphaMatte,
    alpha_l: AlphaMatte,
    settings: Optional[FusionSettings] = None,
) -> AlphaMatte:
    """Blend the high- and low-resolution outputs.

    alpha_l may be any size; it is bilinearly resized to alpha_h's size
    unless ``settings.resize`` is off.

    Raises:
        ShapeMismatch: sizes differ and resizing is disabled
    """
    settings = settings or FusionSettings()
    if alpha_l.size != alpha_h.size:
        if not settings.resize:
            raise ShapeMismatch(f"alpha_h {alpha_h.size} vs alpha_l {alpha_l.size}")
        logger.debug("Upsampling alpha_l %s -> %s", alpha_l.size, alpha_h.size)
        low = np.clip(resize_planes(alpha_l.values, *alpha_h.size), 0.0, 1.0)
    else:
        low = alpha_l.values

    g = edge_mask(alpha_h, *settings.bounds)
    return AlphaMatte(values=np.where(g.bool_values, alpha_h.values, low))


def unknown_restrict(alpha: AlphaMatte, g: BinaryMask) -> AlphaMatte:
    """alpha ⊙ g: zero outside the unknown region."""
    if alpha.size != g.size:
        raise ShapeMismatch(f"alpha {alpha.size} vs mask {g.size}")
    return AlphaMatte(values=alpha.values * g.values)
