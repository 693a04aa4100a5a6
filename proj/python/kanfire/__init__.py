"""Chebyshev KAN burn-scar mapping and wildfire impact assessment."""

from ._core import (
    AlignmentError,
    FormatError,
    InvalidArgument,
    KanfireError,
    Model,
    TrainingDiverged,
    chebyshev_basis,
    closing,
    connected_components,
    metrics,
    opening,
    pixels_to_hectares,
    run_assess,
    run_predict,
    run_report,
    run_train,
    train,
)

__all__ = [
    "AlignmentError",
    "FormatError",
    "InvalidArgument",
    "KanfireError",
    "Model",
    "TrainingDiverged",
    "chebyshev_basis",
    "closing",
    "connected_components",
    "metrics",
    "opening",
    "pixels_to_hectares",
    "run_assess",
    "run_predict",
    "run_report",
    "run_train",
    "train",
]
