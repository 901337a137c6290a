"""The four matting error metrics: SAD, MSE, Grad, Conn.

Each takes (pred, gt, region) where region is a BinaryMask or None for the
whole image. Scale factors come from MetricsSettings (defaults: SAD / 1000,
MSE * 1e3, Grad * 1e-1, Conn * 1e-3).

Grad: gradient magnitudes from first-order Gaussian derivative filters
(sigma 1.4, truncated at 4 sigma, reflect borders), squared difference
summed over the region.

Conn: for thresholds 0.1, 0.2, ..., 1.0 the joint superlevel set
{pred >= t} ∩ {gt >= t} is labelled with 4-connectivity; a pixel's level l
is the highest threshold at which it still lies in a component touching
the source region (largest 4-connected component where both mattes are 1).
phi = 1 - d * [d >= 0.15] with d = value - l, and the error is the summed
|phi(pred) - phi(gt)| over the region.
"""
import logging
import warnings
from typing import Optional

import numpy as np
from scipy import ndimage
from skimage.measure import label

from config import MetricsSettings
from errors import ImageTooSmall, NoFullyOpaqueRegionWarning, ShapeMismatch
from models import AlphaMatte, BinaryMask

logger = logging.getLogger(__name__)


def _region(pred: AlphaMatte, gt: AlphaMatte, region: Optional[BinaryMask]) -> np.ndarray:
    if pred.size != gt.size:
        raise ShapeMismatch(f"pred {pred.size} vs gt {gt.size}")
    if region is None:
        return np.ones(pred.size, dtype=bool)
    if region.size != pred.size:
        raise ShapeMismatch(f"region {region.size} vs pred {pred.size}")
    return region.bool_values


def sad(
    pred: AlphaMatte,
    gt: AlphaMatte,
    region: Optional[BinaryMask] = None,
    settings: Optional[MetricsSettings] = None,
) -> float:
    """Sum of absolute differences over the region, scaled."""
    settings = settings or MetricsSettings()
    mask = _region(pred, gt, region)
    return float(np.abs(pred.values - gt.values)[mask].sum() * settings.sad_scale)


def mse(
    pred: AlphaMatte,
    gt: AlphaMatte,
    region: Optional[BinaryMask] = None,
    settings: Optional[MetricsSettings] = None,
) -> float:
    """Mean squared error over the region, scaled. Empty region gives 0."""
    settings = settings or MetricsSettings()
    mask = _region(pred, gt, region)
    n = int(np.count_nonzero(mask))
    if n == 0:
        return 0.0
    sq = ((pred.values - gt.values) ** 2)[mask]
    return float(sq.sum() / n * settings.mse_scale)


# --- Gradient error ---

def gaussian_radius(sigma: float, truncate: float) -> int:
    return int(truncate * sigma + 0.5)


def gradient_magnitude(plane: np.ndarray, sigma: float = 1.4, truncate: float = 4.0) -> np.ndarray:
    """Per-pixel |∇| from Gaussian first-derivative filtering."""
    gx = ndimage.gaussian_filter(plane, sigma, order=(0, 1), mode="reflect", truncate=truncate)
    gy = ndimage.gaussian_filter(plane, sigma, order=(1, 0), mode="reflect", truncate=truncate)
    return np.sqrt(gx ** 2 + gy ** 2)


def grad_error(
    pred: AlphaMatte,
    gt: AlphaMatte,
    region: Optional[BinaryMask] = None,
    settings: Optional[MetricsSettings] = None,
) -> float:
    """Squared gradient-magnitude difference summed over the region, scaled.

    Raises:
        ImageTooSmall: a side is shorter than the filter support
    """
    settings = settings or MetricsSettings()
    mask = _region(pred, gt, region)
    support = 2 * gaussian_radius(settings.grad_sigma, settings.grad_truncate) + 1
    if min(pred.size) < support:
        raise ImageTooSmall(f"{pred.size[0]}x{pred.size[1]} is smaller than the {support}-tap filter")
    mag_pred = gradient_magnitude(pred.values, settings.grad_sigma, settings.grad_truncate)
    mag_gt = gradient_magnitude(gt.values, settings.grad_sigma, settings.grad_truncate)
    return float(((mag_pred - mag_gt) ** 2)[mask].sum() * settings.grad_scale)


# --- Connectivity error ---

def thresholds(step: float) -> list[float]:
    n = int(round(1.0 / step))
    return [round(k * step, 10) for k in range(1, n + 1)]


def largest_component(binary: np.ndarray) -> np.ndarray:
    """Largest 4-connected component; ties go to the first in raster order."""
    labels = label(binary, connectivity=1, background=0)
    if labels.max() == 0:
        return np.zeros_like(binary, dtype=bool)
    counts = np.bincount(labels.ravel())
    counts[0] = 0
    return labels == int(np.argmax(counts))


def connectivity_levels(pred: np.ndarray, gt: np.ndarray, step: float = 0.1) -> Optional[np.ndarray]:
    """Highest threshold at which each pixel stays connected to the source.

    Returns None when no pixel is fully opaque in both mattes.
    """
    source = largest_component((pred >= 1.0) & (gt >= 1.0))
    if not source.any():
        return None
    levels = np.full(pred.shape, -1.0)
    previous = 0.0
    for theta in thresholds(step):
        superlevel = (pred >= theta) & (gt >= theta)
        labels = label(superlevel, connectivity=1, background=0)
        touching = np.unique(labels[source])
        connected = np.isin(labels, touching[touching > 0])
        levels[(levels == -1.0) & ~connected] = previous
        previous = theta
    levels[levels == -1.0] = 1.0
    return levels


def conn_error(
    pred: AlphaMatte,
    gt: AlphaMatte,
    region: Optional[BinaryMask] = None,
    settings: Optional[MetricsSettings] = None,
) -> float:
    """Connectivity error summed over the region, scaled.

    Defined as 0 (with a NoFullyOpaqueRegionWarning) when no pixel is fully
    opaque in both mattes.
    """
    settings = settings or MetricsSettings()
    mask = _region(pred, gt, region)
    levels = connectivity_levels(pred.values, gt.values, settings.conn_step)
    if levels is None:
        warnings.warn(
            "conn_error: no fully opaque region shared by pred and gt; reporting 0",
            NoFullyOpaqueRegionWarning,
            stacklevel=2,
        )
        return 0.0
    d_pred = pred.values - levels
    d_gt = gt.values - levels
    phi_pred = 1.0 - d_pred * (d_pred >= settings.conn_min_distance)
    phi_gt = 1.0 - d_gt * (d_gt >= settings.conn_min_distance)
    return float(np.abs(phi_pred - phi_gt)[mask].sum() * settings.conn_scale)
