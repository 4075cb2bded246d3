"""Shared numeric helpers."""

from __future__ import annotations

import math

import numpy as np


def round_half_away(x: float) -> int:
    """Round to nearest integer, ties away from zero (unlike builtin round)."""
    return int(math.floor(x + 0.5)) if x >= 0.0 else int(math.ceil(x - 0.5))


def round_half_away_arr(x: np.ndarray) -> np.ndarray:
    """Vectorized round_half_away."""
    return np.trunc(x + np.copysign(0.5, x)).astype(np.int64)
