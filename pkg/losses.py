"""Training losses as pure functions (no gradients).

- bce / coarse_loss: binary cross-entropy and its weighted multi-head sum
- l1_loss / composition_loss / laplacian_loss: refine terms averaged over
  the unknown region g
- refine_loss: the three refine terms on unknown-restricted mattes

Reductions run sequentially over each image so values are reproducible.
"""
import logging
import warnings
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from compositor import composite_arrays
from config import LossSettings
from errors import EmptyUnknownWarning, ImageTooSmall, ShapeMismatch
from models import AlphaMatte, BinaryMask, ImageBuffer

logger = logging.getLogger(__name__)

# Separable 5-tap binomial kernel; its outer product is the 5x5 pyramid kernel
BINOMIAL_5 = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0
GAUSS_KERNEL = np.outer(BINOMIAL_5, BINOMIAL_5)


def _same_size(*rasters) -> None:
    sizes = {r.size for r in rasters}
    if len(sizes) != 1:
        raise ShapeMismatch(f"sizes differ: {sorted(sizes)}")


# --- Coarse losses ---

def bce(pred: AlphaMatte | BinaryMask, target: BinaryMask, clamp: float = 1e-7) -> float:
    """Mean binary cross-entropy over all H×W pixels.

    Predictions are clamped to [clamp, 1 - clamp] before the log.
    """
    _same_size(pred, target)
    p_hat = np.clip(pred.values, clamp, 1.0 - clamp)
    p = target.values
    terms = p * np.log(p_hat) + (1.0 - p) * np.log(1.0 - p_hat)
    return float(-terms.sum() / terms.size)


def coarse_loss(dom: float, aux: Sequence[float], weights: Sequence[float] = (0.8, 0.6, 0.4)) -> float:
    """Dominant loss plus weighted auxiliary losses."""
    if len(aux) != len(weights):
        raise ValueError(f"expected {len(weights)} auxiliary losses, got {len(aux)}")
    total = dom
    for w, a in zip(weights, aux):
        total += w * a
    return total


# --- Refine losses ---

def _warn_empty(name: str) -> None:
    warnings.warn(f"{name}: unknown region is empty, loss is 0", EmptyUnknownWarning, stacklevel=3)


def l1_loss(pred: AlphaMatte, gt: AlphaMatte, g: BinaryMask) -> float:
    """Mean |pred - gt| over the unknown pixels."""
    _same_size(pred, gt, g)
    region = g.bool_values
    n = int(np.count_nonzero(region))
    if n == 0:
        _warn_empty("l1_loss")
        return 0.0
    return float(np.abs(pred.values[region] - gt.values[region]).sum() / n)


def composition_loss(
    pred: AlphaMatte,
    gt: AlphaMatte,
    fg: ImageBuffer,
    bg: ImageBuffer,
    g: BinaryMask,
) -> float:
    """Mean absolute composite difference over unknown pixels and channels."""
    _same_size(pred, gt, fg, bg, g)
    if fg.channels != bg.channels:
        raise ShapeMismatch(f"fg has {fg.channels} channels, bg has {bg.channels}")
    region = g.bool_values
    n = int(np.count_nonzero(region))
    if n == 0:
        _warn_empty("composition_loss")
        return 0.0
    c_pred = composite_arrays(fg.data, bg.data, pred.values)
    c_gt = composite_arrays(fg.data, bg.data, gt.values)
    diff = np.abs(c_pred[:, region] - c_gt[:, region])
    return float(diff.sum() / (n * fg.channels))


# --- Laplacian pyramid ---

def _blur(plane: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    return ndimage.convolve(plane, kernel, mode="mirror")


def _downsample(plane: np.ndarray) -> np.ndarray:
    return _blur(plane, GAUSS_KERNEL)[::2, ::2]


def _upsample(plane: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    h, w = plane.shape
    up = np.zeros((2 * h, 2 * w))
    up[::2, ::2] = plane
    return _blur(up, 4.0 * GAUSS_KERNEL)[: size[0], : size[1]]


def min_pyramid_size(levels: int) -> int:
    return 2 ** max(levels - 2, 0)


def laplacian_pyramid(plane: np.ndarray, levels: int = 5) -> list[np.ndarray]:
    """Band-pass levels 0..levels-2 followed by the low-pass residual.

    Each level is blurred with the 5×5 binomial kernel (mirror borders) and
    decimated by 2; upsampling zero-fills and blurs with 4× the kernel.

    Raises:
        ImageTooSmall: min side below 2**(levels - 2)
    """
    if min(plane.shape) < min_pyramid_size(levels):
        raise ImageTooSmall(
            f"{plane.shape[0]}x{plane.shape[1]} is too small for a {levels}-level pyramid"
        )
    pyramid = []
    current = plane
    for _ in range(levels - 1):
        down = _downsample(current)
        pyramid.append(current - _upsample(down, current.shape))
        current = down
    pyramid.append(current)
    return pyramid


def laplacian_loss(pred: AlphaMatte, gt: AlphaMatte, g: BinaryMask, levels: int = 5) -> float:
    """Sum over pyramid levels k of 2^k * mean |Lap_k(pred⊙g) - Lap_k(gt⊙g)|."""
    _same_size(pred, gt, g)
    pyr_pred = laplacian_pyramid(pred.values * g.values, levels)
    pyr_gt = laplacian_pyramid(gt.values * g.values, levels)
    total = 0.0
    for k, (a, b) in enumerate(zip(pyr_pred, pyr_gt)):
        total += (2 ** k) * float(np.abs(a - b).mean())
    return total


def refine_loss(
    pred: AlphaMatte,
    gt: AlphaMatte,
    fg: ImageBuffer,
    bg: ImageBuffer,
    g: BinaryMask,
    settings: Optional[LossSettings] = None,
) -> float:
    """l1 + composition + laplacian on mattes restricted to the unknown region."""
    settings = settings or LossSettings()
    _same_size(pred, gt, fg, bg, g)
    if g.count == 0:
        _warn_empty("refine_loss")
        return 0.0
    pred_u = AlphaMatte(values=pred.values * g.values)
    gt_u = AlphaMatte(values=gt.values * g.values)
    l1 = l1_loss(pred_u, gt_u, g)
    comp = composition_loss(pred_u, gt_u, fg, bg, g)
    lap = laplacian_loss(pred_u, gt_u, g, settings.pyramid_levels)
    logger.debug("refine terms l1=%.6g comp=%.6g lap=%.6g", l1, comp, lap)
    return l1 + comp + lap
