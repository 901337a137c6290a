"""
Centralized configuration module for mattekit.

Every tunable constant of the pipeline (harmony epsilon, fusion
thresholds, metric scales, trimap radius, ...) lives here so it can be
overridden and recorded next to the numbers it produced.

Precedence, highest first:
    explicit overrides (CLI flags) > environment (MATTEKIT_*) > .env > TOML file > defaults

Usage:
    from config import get_settings, load_settings

    settings = get_settings()                      # cached defaults + env
    settings = load_settings("mattekit.toml",      # file + flag overrides
                             {"harmony": {"epsilon": 1e-4}})
"""

import os
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Any, Optional

from pydantic import AliasChoices, BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict, TomlConfigSettingsSource

CONFIG_PATH_ENV = "MATTEKIT_CONFIG"


class RegionMode(str, Enum):
    """Where evaluation metrics are accumulated."""
    WHOLE = "whole"      # every pixel (trimap-free setting)
    UNKNOWN = "unknown"  # trimap unknown band only


# ==============================================
# SECTIONS
# ==============================================

class _Section(BaseModel):
    # A misspelled key is an error, not a silent default
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class HarmonySettings(_Section):
    epsilon: float = Field(default=1e-5, gt=0)
    # Scale by the background mean and shift by the background std,
    # exactly as the published formula is written.
    literal_affine: bool = Field(
        default=False,
        validation_alias=AliasChoices("literal_affine", "literal_eq10"),
    )


class FusionSettings(_Section):
    # Replace the strict (0, 1) edge test with (quant_lo, quant_hi)
    quantize: bool = False
    quant_lo: float = Field(default=1 / 255, ge=0, le=1)
    quant_hi: float = Field(default=254 / 255, ge=0, le=1)
    # Bilinearly upsample the low-resolution matte when sizes differ
    resize: bool = True

    @model_validator(mode="after")
    def check_band(self) -> "FusionSettings":
        if self.quant_lo >= self.quant_hi:
            raise ValueError("fusion.quant_lo must be below fusion.quant_hi")
        return self

    @property
    def bounds(self) -> tuple[float, float]:
        """Open interval used by the edge mask."""
        if self.quantize:
            return self.quant_lo, self.quant_hi
        return 0.0, 1.0


class TrimapSettings(_Section):
    radius: int = Field(default=15, ge=0)


class LossSettings(_Section):
    bce_clamp: float = Field(default=1e-7, gt=0, lt=0.5)
    aux_weights: tuple[float, float, float] = (0.8, 0.6, 0.4)
    pyramid_levels: int = Field(default=5, ge=1)


class MetricsSettings(_Section):
    region: RegionMode = RegionMode.WHOLE
    sad_scale: float = 1e-3
    mse_scale: float = 1e3
    grad_scale: float = 1e-1
    conn_scale: float = 1e-3
    grad_sigma: float = Field(default=1.4, gt=0)
    grad_truncate: float = Field(default=4.0, gt=0)
    conn_step: float = Field(default=0.1, gt=0, le=1)
    conn_min_distance: float = Field(default=0.15, ge=0)


class BatchSettings(_Section):
    workers: int = Field(default=4, ge=1)
    seed: int = 0


class IoSettings(_Section):
    bit_depth: int = 8

    @field_validator("bit_depth")
    @classmethod
    def validate_bit_depth(cls, v: int) -> int:
        if v not in (8, 16):
            raise ValueError("io.bit_depth must be 8 or 16")
        return v


class Settings(BaseSettings):
    """Toolkit settings with validation.

    All fields have defaults; a config file or environment only narrows them.
    """

    model_config = SettingsConfigDict(
        env_prefix="MATTEKIT_",
        env_nested_delimiter="__",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    harmony: HarmonySettings = HarmonySettings()
    fusion: FusionSettings = FusionSettings()
    trimap: TrimapSettings = TrimapSettings()
    losses: LossSettings = LossSettings()
    metrics: MetricsSettings = MetricsSettings()
    batch: BatchSettings = BatchSettings()
    io: IoSettings = IoSettings()

    LOG_LEVEL: str = "INFO"

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls,
        init_settings,
        env_settings,
        dotenv_settings,
        file_secret_settings,
    ):
        # toml_file is unset on Settings itself; load_settings() binds it
        return init_settings, env_settings, dotenv_settings, TomlConfigSettingsSource(settings_cls)

    def effective(self) -> dict[str, Any]:
        """JSON-ready snapshot embedded in reports for provenance.

        Pool size and log level do not change results and are left out so
        reports stay identical across them.
        """
        return self.model_dump(mode="json", exclude={"batch": {"workers"}, "LOG_LEVEL": True})


# ==============================================
# LOADING
# ==============================================

def _bind_config_file(path: Path) -> type[Settings]:
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")

    class FileSettings(Settings):
        model_config = SettingsConfigDict(toml_file=path)

    return FileSettings


def load_settings(
    config_path: Optional[str | Path] = None,
    overrides: Optional[dict[str, Any]] = None,
) -> Settings:
    """Build settings from defaults, config file, environment and overrides.

    Args:
        config_path: TOML file; falls back to $MATTEKIT_CONFIG when None
        overrides: nested dict of explicit values (highest precedence)

    Returns:
        Validated Settings instance
    """
    path = config_path or os.environ.get(CONFIG_PATH_ENV)
    settings_cls = _bind_config_file(Path(path)) if path else Settings
    return settings_cls(**(overrides or {}))


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance.

    Uses lru_cache to ensure settings are only loaded once.
    """
    return load_settings()
