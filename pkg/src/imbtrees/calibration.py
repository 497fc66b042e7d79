"""Closed-form correction of scores from a model trained on undersampled data.

If negatives were kept at rate ``beta``, a score ``p_s`` maps back to

    p = beta * p_s / (beta * p_s - p_s + 1)

Equivalently ``p = p_s * factor(p_s)`` with ``factor = beta / (beta * p_s - p_s + 1)``,
which is close to ``beta`` for small scores and rises to 1 at ``p_s = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _check(p, beta: float, name: str = "p_s") -> np.ndarray:
    if not 0 < beta <= 1:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    arr = np.asarray(p, dtype=np.float64)
    if np.any(~((arr >= 0) & (arr <= 1))):
        raise ValueError(f"{name} must lie in [0, 1]")
    return arr


def _out(arr: np.ndarray):
    return float(arr) if arr.ndim == 0 else arr


def calibrate(p_s, beta: float):
    """Map undersampled-model scores to probabilities on the original scale."""
    arr = _check(p_s, beta)
    return _out(beta * arr / (beta * arr + (1.0 - arr)))


def decalibrate(p, beta: float):
    """Inverse of :func:`calibrate`."""
    arr = _check(p, beta, "p")
    return _out(arr / (arr + beta * (1.0 - arr)))


def adjustment_factor(p_s, beta: float):
    """Multiplier that takes a score to its calibrated value."""
    arr = _check(p_s, beta)
    return _out(beta / (beta * arr + (1.0 - arr)))


def calibrate_dataset(predictions, beta: float) -> tuple[np.ndarray, float]:
    """Calibrate a vector of scores; also return their mean (the prevalence estimate)."""
    arr = np.asarray(predictions, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise ValueError("no predictions to calibrate")
    out = np.asarray(calibrate(arr, beta))
    return out, float(out.mean())


@dataclass(frozen=True)
class CalibrationMap:
    beta: float

    def __post_init__(self):
        if not 0 < self.beta <= 1:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")

    def __call__(self, p_s):
        return calibrate(p_s, self.beta)

    def inverse(self, p):
        return decalibrate(p, self.beta)

    def factor(self, p_s):
        return adjustment_factor(p_s, self.beta)
