"""Python access to the wavecor segmentation toolkit."""

from ._wavecor import (
    ConfigError,
    DimensionError,
    FormatError,
    IoError,
    TrainingError,
    ValidationError,
    __version__,
    build_prior,
    dwt3,
    generate_phantom,
    iwt3,
    metrics,
    parameter_count,
    predict,
    read_volume,
    run_cli,
    variant_names,
    write_volume,
)

__all__ = [
    "ConfigError",
    "DimensionError",
    "FormatError",
    "IoError",
    "TrainingError",
    "ValidationError",
    "__version__",
    "build_prior",
    "dwt3",
    "generate_phantom",
    "iwt3",
    "metrics",
    "parameter_count",
    "predict",
    "read_volume",
    "run_cli",
    "variant_names",
    "write_volume",
]
