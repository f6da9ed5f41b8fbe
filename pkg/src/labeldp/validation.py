"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np

__all__ = ["check_labels", "check_epsilon", "check_probability", "check_scores"]


def check_labels(labels, min_size: int = 1) -> np.ndarray:
    """Validate a binary label vector and return it as an int8 array of +/-1."""
    arr = np.asarray(labels)
    if arr.ndim != 1:
        raise ValueError(f"labels must be one-dimensional, got shape {arr.shape}")
    if arr.size < min_size:
        raise ValueError(f"need at least {min_size} label(s), got {arr.size}")
    out = arr.astype(np.int8, copy=True)
    if not np.array_equal(out, arr):
        raise ValueError("labels must be integers in {-1, +1}")
    bad = np.flatnonzero(np.abs(out) != 1)
    if bad.size:
        raise ValueError(f"label at position {bad[0]} is {arr[bad[0]]!r}; expected -1 or +1")
    return out


def check_epsilon(epsilon: float, delta_sensitivity: float = 1.0) -> None:
    if not (epsilon > 0 and np.isfinite(epsilon)) and epsilon != np.inf:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if not delta_sensitivity > 0:
        raise ValueError(f"sensitivity must be positive, got {delta_sensitivity}")


def check_probability(p: float, name: str = "p") -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p}")
    return p


def check_scores(scores) -> np.ndarray:
    arr = np.asarray(scores, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"scores must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("scores must be finite")
    return arr
