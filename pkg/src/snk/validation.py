"""Input validation helpers for the estimator-facing API."""

from __future__ import annotations

import numpy as np

from .errors import NanInputError, ShapeMismatchError

__all__ = ["check_frames", "check_frame_list"]


def check_frames(frames, feature_dim: int | None = None) -> np.ndarray:
    """Coerce one utterance's features to a finite float64 T x F matrix."""
    arr = np.asarray(frames, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ShapeMismatchError(f"frames must be a T x F matrix, got shape {arr.shape}")
    if feature_dim is not None and arr.shape[1] != feature_dim:
        raise ShapeMismatchError(f"expected {feature_dim} features, got {arr.shape[1]}")
    if not np.isfinite(arr).all():
        raise NanInputError("frames contain non-finite values")
    return arr


def check_frame_list(X, feature_dim: int | None = None) -> tuple[list[np.ndarray], int]:
    """Validate a list of frame matrices sharing one feature dimension."""
    if len(X) == 0:
        raise ShapeMismatchError("empty feature list")
    first = check_frames(X[0], feature_dim)
    dim = first.shape[1]
    out = [first]
    for frames in X[1:]:
        out.append(check_frames(frames, dim))
    return out, dim
