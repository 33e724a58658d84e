"""Dual-polarization SAR ship classifier."""

from ._dpgnet import (
    ConfigError,
    FormatError,
    ShapeError,
    ablate,
    ablation_axes,
    default_config,
    evaluate,
    guided_triple,
    normalize_config,
    param_count,
    parameter_budget,
    synth,
    train,
)

__all__ = [
    "ConfigError",
    "FormatError",
    "ShapeError",
    "ablate",
    "ablation_axes",
    "default_config",
    "evaluate",
    "guided_triple",
    "normalize_config",
    "param_count",
    "parameter_budget",
    "synth",
    "train",
]
