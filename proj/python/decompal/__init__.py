"""Class-balanced region selection for active learning."""

from ._core import (
    ValidationError,
    class_confidence,
    decomp_select,
    image_score,
    main,
    run,
    sampling_weights,
    spearman,
    window_argmax,
)

__all__ = [
    "ValidationError",
    "class_confidence",
    "decomp_select",
    "image_score",
    "main",
    "run",
    "sampling_weights",
    "spearman",
    "window_argmax",
]
