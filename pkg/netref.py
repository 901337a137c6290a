"""Forward-pass reference implementations of the coarse-stage blocks.

Pure numpy on C×H×W tensors with externally supplied weights; nothing here
learns. Channel widths are whatever the weights say, so tests run the
blocks at small widths with the same 2:1 split ratio.

Blocks:
- head_attention: conv1 output split into (W, b); out = relu(W * relu(conv2(x)) + b)
- channel_gate: global average pool, per-channel affine, sigmoid gate
- multiplicative_fusion: detail, semantic and context branches joined by
  multiplication and summed
"""
import logging
from io import BytesIO
from pathlib import Path
from typing import Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy.special import expit

from errors import ChannelMismatch, OddSplit, ShapeMismatch
from file_storage import write_bytes_atomic
from models import ConvWeights, Tensor
from raster_utils import resize_planes

logger = logging.getLogger(__name__)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def _feature_map(t: Tensor, what: str) -> np.ndarray:
    if t.data.ndim != 3:
        raise ShapeMismatch(f"{what} must be C×H×W, got shape {t.shape}")
    return t.data


# --- Primitives ---

def conv2d(x: Tensor, w: ConvWeights) -> Tensor:
    """Cross-correlation with zero 'same' padding.

    Odd kernels pad symmetrically; even kernels put the extra row/column
    after the data.

    Raises:
        ChannelMismatch: input channels differ from w.in_channels
    """
    data = _feature_map(x, "conv2d input")
    if data.shape[0] != w.in_channels:
        raise ChannelMismatch(f"input has {data.shape[0]} channels, weights expect {w.in_channels}")
    kh, kw = w.kernel_size
    padded = np.pad(data, ((0, 0), ((kh - 1) // 2, kh // 2), ((kw - 1) // 2, kw // 2)))
    windows = sliding_window_view(padded, (kh, kw), axis=(1, 2))  # (C, H, W, kh, kw)
    out = np.einsum("chwij,ocij->ohw", windows, w.values) + w.bias[:, None, None]
    return Tensor(data=out)


def split_channels(t: Tensor) -> tuple[Tensor, Tensor]:
    """Split along channels into equal first and second halves."""
    c = t.shape[0]
    if c % 2:
        raise OddSplit(f"cannot split {c} channels in half")
    return Tensor(data=t.data[: c // 2]), Tensor(data=t.data[c // 2:])


# --- Blocks ---

def head_attention(f_top: Tensor, w1: ConvWeights, w2: ConvWeights) -> Tensor:
    """Channel-reducing attention on the top encoder feature.

    conv1 produces 2k channels split into W (first half) and b (second
    half); conv2 produces k channels passed through ReLU.

    Raises:
        ChannelMismatch, OddSplit
    """
    if w1.out_channels % 2:
        raise OddSplit(f"conv1 has {w1.out_channels} output channels")
    if w1.out_channels != 2 * w2.out_channels:
        raise ChannelMismatch(
            f"conv1 halves have {w1.out_channels // 2} channels, conv2 has {w2.out_channels}"
        )
    weight, bias = split_channels(conv2d(f_top, w1))
    f_hat = relu(conv2d(f_top, w2).data)
    return Tensor(data=relu(weight.data * f_hat + bias.data))


class GateParams(BaseModel):
    """Affine applied to pooled channel means before the sigmoid.

    ``weight`` is either a per-channel vector (C,) or a full (C, C) matrix.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    weight: np.ndarray
    bias: np.ndarray

    @field_validator("weight", "bias", mode="before")
    @classmethod
    def coerce(cls, v) -> np.ndarray:
        return np.asarray(v, dtype=np.float64)

    @model_validator(mode="after")
    def check_shapes(self) -> "GateParams":
        c = self.bias.shape[0] if self.bias.ndim == 1 else -1
        if c < 0 or self.weight.shape not in ((c,), (c, c)):
            raise ShapeMismatch(f"gate weight {self.weight.shape} / bias {self.bias.shape}")
        return self


def channel_gate(f: Tensor, params: GateParams) -> Tensor:
    """Reweight channels by sigmoid(affine(global average pool))."""
    data = _feature_map(f, "gate input")
    if data.shape[0] != params.bias.shape[0]:
        raise ChannelMismatch(f"input has {data.shape[0]} channels, gate has {params.bias.shape[0]}")
    pooled = data.mean(axis=(1, 2))
    if params.weight.ndim == 2:
        logits = params.weight @ pooled + params.bias
    else:
        logits = params.weight * pooled + params.bias
    gate = expit(logits)
    return Tensor(data=gate[:, None, None] * data)


class FusionParams(BaseModel):
    """1×1 projections per input and one convolution per branch."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    proj_low: ConvWeights
    proj_high: ConvWeights
    proj_context: ConvWeights
    detail_conv: ConvWeights
    semantic_conv: ConvWeights
    context_conv: ConvWeights

    @model_validator(mode="after")
    def check_projections(self) -> "FusionParams":
        for name in ("proj_low", "proj_high", "proj_context"):
            if getattr(self, name).kernel_size != (1, 1):
                raise ShapeMismatch(f"{name} must be a 1x1 convolution")
        widths = {self.proj_low.out_channels, self.proj_high.out_channels, self.proj_context.out_channels}
        if len(widths) != 1:
            raise ChannelMismatch(f"projection widths differ: {sorted(widths)}")
        return self

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray], prefix: str = "fusion") -> "FusionParams":
        return cls(**{name: ConvWeights.from_arrays(arrays, f"{prefix}.{name}") for name in cls.model_fields})


def _upsample_to(t: Tensor, size: tuple[int, int]) -> Tensor:
    if t.shape[1:] == size:
        return t
    return Tensor(data=resize_planes(t.data, *size))


def fusion_branches(f_l: Tensor, f_h: Tensor, f_g: Tensor, params: FusionParams) -> tuple[Tensor, Tensor, Tensor]:
    """The three pre-activation branch terms (detail, semantic, context).

    f_h and f_g are bilinearly upsampled to f_l's spatial size first.
    """
    size = _feature_map(f_l, "low-level feature").shape[1:]
    f_h = _upsample_to(f_h, size)
    f_g = _upsample_to(f_g, size)

    low = conv2d(f_l, params.proj_low).data
    high = conv2d(f_h, params.proj_high).data
    context = conv2d(f_g, params.proj_context).data

    detail = conv2d(Tensor(data=low * high), params.detail_conv)
    semantic = conv2d(Tensor(data=high), params.semantic_conv)
    ctx = conv2d(Tensor(data=low * context), params.context_conv)
    return detail, semantic, ctx


def multiplicative_fusion(f_l: Tensor, f_h: Tensor, f_g: Tensor, params: FusionParams) -> Tensor:
    """relu(detail + semantic + context)."""
    detail, semantic, ctx = fusion_branches(f_l, f_h, f_g, params)
    if not (detail.shape == semantic.shape == ctx.shape):
        raise ShapeMismatch(f"branch shapes differ: {detail.shape}, {semantic.shape}, {ctx.shape}")
    return Tensor(data=relu(detail.data + semantic.data + ctx.data))


# --- Named-array containers ---

def load_arrays(path: Union[str, Path]) -> dict[str, np.ndarray]:
    """Read an .npz container of named arrays (no pickled objects)."""
    with np.load(path, allow_pickle=False) as npz:
        arrays = {name: npz[name] for name in npz.files}
    logger.debug("Loaded %d arrays from %s", len(arrays), path)
    return arrays


def save_arrays(path: Union[str, Path], arrays: dict[str, np.ndarray]) -> Path:
    """Write named arrays to an .npz container."""
    buf = BytesIO()
    np.savez(buf, **{name: np.asarray(a, dtype=np.float64) for name, a in arrays.items()})
    return write_bytes_atomic(path, buf.getvalue())
