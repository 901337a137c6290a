"""Pydantic models for the matting toolkit.

This module provides validated, immutable types for:
- Rasters (ImageBuffer, AlphaMatte, BinaryMask) in planar float layout
- Network-reference tensors and convolution weights (Tensor, ConvWeights)
- Region statistics used by harmonization (RegionStats)
- Corpus manifests and evaluation reports (CorpusManifest, MetricsReport)

Canonical layout: ImageBuffer.data is channel-major (C, H, W) float64;
AlphaMatte and BinaryMask hold (H, W) float64 planes. Arrays are made
read-only on construction.
"""
from enum import Enum
from typing import Any, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from errors import NonBinaryValue, OutOfRangeValue, ShapeMismatch


# --- Enums ---

class Split(str, Enum):
    """Corpus partition a record belongs to."""
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


# --- Invariant checks ---

def _as_float_array(v: Any) -> np.ndarray:
    arr = np.array(v, dtype=np.float64, copy=True)
    return arr


def _check_dims(arr: np.ndarray, ndim: int, what: str) -> None:
    if arr.ndim != ndim:
        raise ShapeMismatch(f"{what} expects {ndim} dimensions, got shape {arr.shape}")
    if any(d < 1 for d in arr.shape):
        raise ShapeMismatch(f"{what} dimensions must be positive, got {arr.shape}")


def _check_unit_range(arr: np.ndarray, what: str) -> None:
    bad = ~((arr >= 0.0) & (arr <= 1.0))  # NaN counts as out of range
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise OutOfRangeValue(f"{what} value {arr[idx]!r} at {idx} outside [0, 1]")


def _check_binary(arr: np.ndarray, what: str) -> None:
    bad = (arr != 0.0) & (arr != 1.0)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise NonBinaryValue(f"{what} value {arr[idx]!r} at {idx} is not 0 or 1")


def validate(raster: "Raster") -> None:
    """Check every invariant of a raster, raising on the first violation.

    Models run this on construction; call it directly on instances built
    with ``model_construct`` or on arrays mutated outside the model.

    Raises:
        ShapeMismatch, OutOfRangeValue, NonBinaryValue
    """
    if isinstance(raster, ImageBuffer):
        _check_dims(raster.data, 3, "ImageBuffer")
        if raster.data.shape[0] not in (1, 3):
            raise ShapeMismatch(f"ImageBuffer channels must be 1 or 3, got {raster.data.shape[0]}")
        _check_unit_range(raster.data, "ImageBuffer")
    elif isinstance(raster, AlphaMatte):
        _check_dims(raster.values, 2, "AlphaMatte")
        _check_unit_range(raster.values, "AlphaMatte")
    elif isinstance(raster, BinaryMask):
        _check_dims(raster.values, 2, "BinaryMask")
        _check_binary(raster.values, "BinaryMask")
    else:
        raise TypeError(f"Not a raster type: {type(raster).__name__}")


# --- Raster Entities ---

class _Frozen(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


class ImageBuffer(_Frozen):
    """H×W×C image in [0, 1], stored planar as (C, H, W)."""
    data: np.ndarray

    @field_validator("data", mode="before")
    @classmethod
    def coerce_data(cls, v: Any) -> np.ndarray:
        arr = _as_float_array(v)
        if arr.ndim == 2:
            arr = arr[np.newaxis]
        return arr

    @model_validator(mode="after")
    def check_invariants(self) -> "ImageBuffer":
        validate(self)
        self.data.flags.writeable = False
        return self

    @classmethod
    def from_hwc(cls, array: np.ndarray) -> "ImageBuffer":
        """Build from interleaved (H, W) or (H, W, C) data."""
        arr = np.asarray(array, dtype=np.float64)
        if arr.ndim == 3:
            arr = np.transpose(arr, (2, 0, 1))
        return cls(data=arr)

    def to_hwc(self) -> np.ndarray:
        return np.ascontiguousarray(np.transpose(self.data, (1, 2, 0)))

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def size(self) -> tuple[int, int]:
        return self.height, self.width


class AlphaMatte(_Frozen):
    """H×W opacity field in [0, 1] (ground truth or prediction)."""
    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def coerce_values(cls, v: Any) -> np.ndarray:
        return _as_float_array(v)

    @model_validator(mode="after")
    def check_invariants(self) -> "AlphaMatte":
        validate(self)
        self.values.flags.writeable = False
        return self

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def size(self) -> tuple[int, int]:
        return self.values.shape


class BinaryMask(_Frozen):
    """H×W field of exact 0/1 values."""
    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def coerce_values(cls, v: Any) -> np.ndarray:
        return _as_float_array(v)

    @model_validator(mode="after")
    def check_invariants(self) -> "BinaryMask":
        validate(self)
        self.values.flags.writeable = False
        return self

    @classmethod
    def from_bool(cls, array: np.ndarray) -> "BinaryMask":
        return cls(values=np.asarray(array, dtype=bool).astype(np.float64))

    @property
    def bool_values(self) -> np.ndarray:
        return self.values.astype(bool)

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.values))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def size(self) -> tuple[int, int]:
        return self.values.shape

    def complement(self) -> "BinaryMask":
        return BinaryMask(values=1.0 - self.values)


Raster = Union[ImageBuffer, AlphaMatte, BinaryMask]


# --- Network Reference Entities ---

class Tensor(_Frozen):
    """N-dimensional float array, row-major (C×H×W for feature maps)."""
    data: np.ndarray

    @field_validator("data", mode="before")
    @classmethod
    def coerce_data(cls, v: Any) -> np.ndarray:
        arr = _as_float_array(v)
        if arr.ndim < 1:
            raise ShapeMismatch("Tensor rank must be at least 1")
        return arr

    @model_validator(mode="after")
    def freeze(self) -> "Tensor":
        self.data.flags.writeable = False
        return self

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape


class ConvWeights(_Frozen):
    """Convolution parameters: values (out, in, kh, kw) and bias (out,)."""
    values: np.ndarray
    bias: np.ndarray

    @field_validator("values", "bias", mode="before")
    @classmethod
    def coerce(cls, v: Any) -> np.ndarray:
        return _as_float_array(v)

    @model_validator(mode="after")
    def check_shapes(self) -> "ConvWeights":
        if self.values.ndim != 4:
            raise ShapeMismatch(f"ConvWeights.values must be (out, in, kh, kw), got {self.values.shape}")
        if self.bias.shape != (self.values.shape[0],):
            raise ShapeMismatch(
                f"ConvWeights.bias must have {self.values.shape[0]} entries, got {self.bias.shape}"
            )
        self.values.flags.writeable = False
        self.bias.flags.writeable = False
        return self

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray], name: str) -> "ConvWeights":
        """Pick ``<name>.weight`` / ``<name>.bias`` out of a named-array container."""
        weight = arrays[f"{name}.weight"]
        bias = arrays.get(f"{name}.bias")
        if bias is None:
            bias = np.zeros(np.shape(weight)[0])
        return cls(values=weight, bias=bias)

    @classmethod
    def identity(cls, channels: int, kernel: int = 1) -> "ConvWeights":
        """Pass-through kernel: centre tap 1 on the matching channel."""
        w = np.zeros((channels, channels, kernel, kernel))
        c = (kernel - 1) // 2
        for i in range(channels):
            w[i, i, c, c] = 1.0
        return cls(values=w, bias=np.zeros(channels))

    @property
    def out_channels(self) -> int:
        return self.values.shape[0]

    @property
    def in_channels(self) -> int:
        return self.values.shape[1]

    @property
    def kernel_size(self) -> tuple[int, int]:
        return self.values.shape[2], self.values.shape[3]


# --- Harmonization ---

class RegionStats(BaseModel):
    """Per-channel mean/std over the pixels of one mask region."""
    model_config = ConfigDict(frozen=True)

    mean: tuple[float, ...]
    std: tuple[float, ...]
    pixel_count: int = Field(ge=1)

    @field_validator("std")
    @classmethod
    def validate_std(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if any(s < 0 for s in v):
            raise ValueError("std must be non-negative")
        return v

    @model_validator(mode="after")
    def check_channels(self) -> "RegionStats":
        if len(self.mean) != len(self.std):
            raise ValueError("mean and std must have one entry per channel")
        return self


# --- Corpus Entities ---

class ManifestRecord(BaseModel):
    """One corpus entry; paths are relative to the manifest file."""
    foreground_path: str
    alpha_path: str
    background_path: Optional[str] = None
    split: Split
    id: Optional[str] = None

    @field_validator("foreground_path", "alpha_path")
    @classmethod
    def validate_path(cls, v: str) -> str:
        v = v.strip()
        if not v:
            raise ValueError("path cannot be empty")
        return v

    @field_validator("background_path")
    @classmethod
    def validate_optional_path(cls, v: Optional[str]) -> Optional[str]:
        if v is not None and not v.strip():
            raise ValueError("background_path cannot be empty when given")
        return v.strip() if v is not None else None

    @property
    def record_id(self) -> str:
        """Explicit id, or the foreground file stem."""
        if self.id:
            return self.id
        name = self.foreground_path.replace("\\", "/").rsplit("/", 1)[-1]
        return name.rsplit(".", 1)[0] if "." in name else name


class CorpusManifest(BaseModel):
    """Ordered list of corpus records."""
    records: list[ManifestRecord] = Field(default_factory=list)

    def by_split(self, split: Optional[Split]) -> "CorpusManifest":
        if split is None:
            return self
        return CorpusManifest(records=[r for r in self.records if r.split == split])


# --- Evaluation Entities ---

class ImageMetrics(BaseModel):
    """The four matting errors for one image."""
    id: str
    sad: float = Field(ge=0)
    mse: float = Field(ge=0)
    grad: float = Field(ge=0)
    conn: float = Field(ge=0)


class AggregateMetrics(BaseModel):
    mean_sad: float = Field(default=0.0, ge=0)
    mean_mse: float = Field(default=0.0, ge=0)
    mean_grad: float = Field(default=0.0, ge=0)
    mean_conn: float = Field(default=0.0, ge=0)


class RecordFailure(BaseModel):
    id: str
    error: str


def _mean(values: list[float]) -> float:
    # Sequential fold in record order
    total = 0.0
    for v in values:
        total += v
    return total / len(values) if values else 0.0


class MetricsReport(BaseModel):
    """Per-image metrics plus arithmetic-mean aggregates."""
    per_image: list[ImageMetrics] = Field(default_factory=list)
    aggregate: AggregateMetrics = Field(default_factory=AggregateMetrics)
    count: int = 0
    failures: list[RecordFailure] = Field(default_factory=list)
    config: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def check_aggregate(self) -> "MetricsReport":
        if self.count != len(self.per_image):
            raise ValueError("count must equal the number of per-image entries")
        for name in ("sad", "mse", "grad", "conn"):
            expected = _mean([getattr(m, name) for m in self.per_image])
            if abs(getattr(self.aggregate, f"mean_{name}") - expected) > 1e-9:
                raise ValueError(f"mean_{name} does not match per-image entries")
        return self

    @classmethod
    def from_records(
        cls,
        per_image: list[ImageMetrics],
        failures: Optional[list[RecordFailure]] = None,
        config: Optional[dict[str, Any]] = None,
    ) -> "MetricsReport":
        aggregate = AggregateMetrics(
            mean_sad=_mean([m.sad for m in per_image]),
            mean_mse=_mean([m.mse for m in per_image]),
            mean_grad=_mean([m.grad for m in per_image]),
            mean_conn=_mean([m.conn for m in per_image]),
        )
        return cls(
            per_image=per_image,
            aggregate=aggregate,
            count=len(per_image),
            failures=failures or [],
            config=config or {},
        )
