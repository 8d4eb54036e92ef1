"""Multi-task tactile inference: pose, action and progress from insole pressure."""

from scotti._core import (
    ConfigError,
    DimensionError,
    FormatError,
    Model,
    __version__,
    actions,
    app,
    default_config,
    generate,
    label_progress,
    mpjae_deg,
    mpjpe,
)

__all__ = [
    "ConfigError",
    "DimensionError",
    "FormatError",
    "Model",
    "__version__",
    "actions",
    "app",
    "default_config",
    "generate",
    "label_progress",
    "mpjae_deg",
    "mpjpe",
]
