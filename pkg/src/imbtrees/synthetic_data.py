"""Simulated imbalanced data with known outcome probabilities.

Ten uniform covariates feed a logistic model whose intercept is shifted by
``-k * log(99)``; ``k`` controls how rare the positive class is. With all
covariates at zero and ``k = 1`` the outcome probability is exactly 1/100.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.special import expit

LOG99 = math.log(99.0)
COEFFICIENT = LOG99 / 40.0

#: (min, max) of each of the ten uniform covariates.
DEFAULT_RANGES: tuple[tuple[float, float], ...] = (
    (-0.4, 0.6),
    (-0.2, 0.8),
    (-0.4, 1.0),
    (-0.1, 0.9),
    (0.0, 5.0),
    (0.0, 3.0),
    (1.0, 4.0),
    (1.0, 7.0),
    (1.0, 3.0),
    (0.0, 2.0),
)
N_FEATURES = len(DEFAULT_RANGES)

_FEATURE_STREAM = 0
_LABEL_STREAM = 1
_MC_STREAM = 2


@dataclass(frozen=True)
class DgpConfig:
    k: float = 1.5
    ranges: tuple[tuple[float, float], ...] = DEFAULT_RANGES
    coefficient: float = COEFFICIENT

    def __post_init__(self):
        if len(self.ranges) != N_FEATURES:
            raise ValueError(f"expected {N_FEATURES} covariate ranges, got {len(self.ranges)}")
        for i, (lo, hi) in enumerate(self.ranges):
            if not lo < hi:
                raise ValueError(f"range for x{i + 1} must satisfy min < max, got ({lo}, {hi})")
        if not self.coefficient > 0:
            raise ValueError("coefficient must be positive")


@dataclass
class Dataset:
    """Feature matrix, binary labels and (for simulated data) true probabilities.

    ``realized_beta`` is set by undersampling: the fraction of majority-class
    rows that were actually kept.
    """

    features: np.ndarray
    labels: np.ndarray
    true_probs: np.ndarray | None = None
    seed: int | None = None
    realized_beta: float | None = field(default=None, compare=False)

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-d array")
        self.labels = np.asarray(self.labels, dtype=np.int8).reshape(-1)
        if self.labels.shape[0] != self.features.shape[0]:
            raise ValueError("features and labels have different row counts")
        if self.labels.size and not np.isin(self.labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        if self.true_probs is not None:
            self.true_probs = np.asarray(self.true_probs, dtype=np.float64).reshape(-1)
            if self.true_probs.shape[0] != self.labels.shape[0]:
                raise ValueError("true_probs length does not match labels")
            if self.true_probs.size and not ((self.true_probs >= 0) & (self.true_probs <= 1)).all():
                raise ValueError("true_probs must lie in [0, 1]")

    @property
    def n(self) -> int:
        return int(self.labels.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    @property
    def n_pos(self) -> int:
        return int(self.labels.sum())

    @property
    def n_neg(self) -> int:
        return self.n - self.n_pos

    def subset(self, rows: np.ndarray) -> "Dataset":
        return Dataset(
            features=self.features[rows],
            labels=self.labels[rows],
            true_probs=None if self.true_probs is None else self.true_probs[rows],
            seed=self.seed,
        )

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        same_probs = (self.true_probs is None and other.true_probs is None) or (
            self.true_probs is not None
            and other.true_probs is not None
            and np.array_equal(self.true_probs, other.true_probs)
        )
        return (
            np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
            and same_probs
        )


def _linear_sum(x: np.ndarray) -> np.ndarray:
    """The polynomial inside the logit, for rows of a (n, 10) array."""
    x1, x2, x3, x4, x5, x6, x7, x8, x9, x10 = (x[..., i] for i in range(N_FEATURES))
    return (
        x1 + x2 + x3 + x4 + x5 + x6 + x7 + x8 + x9 + x10
        + x1 * x3 + x2 * x5 + x4 * x9 + x6 * x7 + x8 * x10
        + x1 * x2 * x3 * x4 + x1 * x2 * x9 * x10
    )


def _check_width(x: np.ndarray) -> None:
    if x.shape[-1] != N_FEATURES:
        raise ValueError(f"expected {N_FEATURES} covariates, got {x.shape[-1]}")


def true_probability(x, k: float) -> float | np.ndarray:
    """Outcome probability for one covariate vector, or each row of a matrix.

    The formula is defined for any real inputs, not only those inside the
    sampling ranges.
    """
    arr = np.asarray(x, dtype=np.float64)
    _check_width(arr)
    p = expit(COEFFICIENT * _linear_sum(arr) - k * LOG99)
    return float(p) if arr.ndim == 1 else p


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _uniform_features(n: int, rng: np.random.Generator, ranges=DEFAULT_RANGES) -> np.ndarray:
    lo = np.array([r[0] for r in ranges])
    hi = np.array([r[1] for r in ranges])
    return lo + (hi - lo) * rng.random((n, len(ranges)))


def generate_dataset(n: int, k: float, seed: int, config: DgpConfig | None = None) -> Dataset:
    """Draw ``n`` rows from the generating process.

    Features and labels come from separate streams derived from ``seed``, so
    the same ``(n, k, seed)`` always reproduces the same dataset.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    ranges = DEFAULT_RANGES if config is None else config.ranges
    features = _uniform_features(n, _stream(seed, _FEATURE_STREAM), ranges)
    probs = expit(COEFFICIENT * _linear_sum(features) - k * LOG99)
    u = _stream(seed, _LABEL_STREAM).random(n)
    labels = (u < probs).astype(np.int8)
    return Dataset(features=features, labels=labels, true_probs=probs, seed=seed)


class _PrevalenceCurve:
    """Monte Carlo mean of the true probability as a function of ``k``.

    The covariate draws are fixed at construction (common random numbers),
    so the curve is exactly monotone in ``k``.
    """

    def __init__(self, n_mc: int, seed: int):
        if n_mc < 1:
            raise ValueError("n_mc must be at least 1")
        x = _uniform_features(n_mc, _stream(seed, _MC_STREAM))
        self.scores = COEFFICIENT * _linear_sum(x)

    def __call__(self, k: float) -> tuple[float, float]:
        p = expit(self.scores - k * LOG99)
        se = float(p.std(ddof=1) / math.sqrt(p.size)) if p.size > 1 else math.nan
        return float(p.mean()), se


def mean_true_probability(k: float, n_mc: int = 1_000_000, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo estimate of the population prevalence at ``k``.

    Returns ``(mean, standard_error)``.
    """
    return _PrevalenceCurve(n_mc, seed)(k)


def solve_k_for_prevalence(
    target: float,
    n_mc: int = 1_000_000,
    seed: int = 0,
    tol: float = 1e-5,
    bracket: tuple[float, float] = (0.0, 10.0),
) -> float:
    """Find ``k`` whose Monte Carlo prevalence is within ``tol`` of ``target``.

    Bisection on a fixed set of covariate draws; prevalence is strictly
    decreasing in ``k``.
    """
    if not 0 < target < 1:
        raise ValueError("target prevalence must lie in (0, 1)")
    if not tol > 0:
        raise ValueError("tol must be positive")
    curve = _PrevalenceCurve(n_mc, seed)
    lo, hi = bracket
    f_lo, f_hi = curve(lo)[0], curve(hi)[0]
    if not f_hi <= target <= f_lo:
        raise ValueError(
            f"target {target} outside prevalence range [{f_hi:.3g}, {f_lo:.3g}] "
            f"for k in [{lo}, {hi}]"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = curve(mid)[0]
        if abs(f_mid - target) <= tol:
            return mid
        if f_mid > target:
            lo = mid
        else:
            hi = mid
    raise RuntimeError(f"bisection did not reach tol={tol} (interval [{lo}, {hi}])")


# CSV ---------------------------------------------------------------------

def _columns(d: int) -> list[str]:
    return [f"x{i + 1}" for i in range(d)]


def write_dataset_csv(data: Dataset, path: str | Path) -> None:
    """Write ``x1..xd,label[,true_prob]`` with round-trip float precision."""
    frame = pd.DataFrame(data.features, columns=_columns(data.n_features))
    frame["label"] = data.labels.astype(np.int64)
    if data.true_probs is not None:
        frame["true_prob"] = data.true_probs
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")


def read_dataset_csv(path: str | Path) -> Dataset:
    frame = pd.read_csv(path, float_precision="round_trip")
    if "label" not in frame.columns:
        raise ValueError(f"{path}: missing 'label' column")
    feature_cols = [c for c in frame.columns if c.startswith("x") and c[1:].isdigit()]
    feature_cols.sort(key=lambda c: int(c[1:]))
    if not feature_cols:
        raise ValueError(f"{path}: no feature columns x1..xd")
    true_probs = frame["true_prob"].to_numpy(np.float64) if "true_prob" in frame.columns else None
    return Dataset(
        features=frame[feature_cols].to_numpy(np.float64).reshape(len(frame), len(feature_cols)),
        labels=frame["label"].to_numpy(),
        true_probs=true_probs,
    )
