"""Majority-class undersampling and training-set inclusion probabilities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .synthetic_data import Dataset


class DegenerateSampleError(ValueError):
    pass


@dataclass(frozen=True)
class SamplingSpec:
    beta: float
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.beta <= 1:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")


def n_kept(n_neg: int, beta: float) -> int:
    # round() is half-to-even
    return int(round(beta * n_neg))


def undersample(data: Dataset, spec: SamplingSpec) -> Dataset:
    """Keep every positive and ``round(beta * N-)`` negatives chosen without replacement.

    Rows keep their original relative order. The returned dataset carries
    ``realized_beta = kept negatives / N-``.
    """
    neg = np.flatnonzero(data.labels == 0)
    if neg.size == 0:
        raise DegenerateSampleError("dataset has no majority-class (label 0) rows")
    m = n_kept(neg.size, spec.beta)
    if m == 0:
        raise DegenerateSampleError(
            f"round(beta * N-) = round({spec.beta} * {neg.size}) = 0 negatives"
        )
    rng = np.random.default_rng(spec.seed)
    keep = np.zeros(data.n, dtype=bool)
    keep[data.labels == 1] = True
    keep[rng.choice(neg, size=m, replace=False)] = True
    out = data.subset(np.flatnonzero(keep))
    out.realized_beta = m / neg.size
    return out


def _check_count(name: str, value: int) -> None:
    if value < 1:
        raise ValueError(f"{name} must be >= 1, got {value}")


def inclusion_prob_minority_bootstrap(n_pos: int) -> float:
    """P(a given positive appears in a bootstrap sample of the positives).

    Tends to ``1 - 1/e`` from above as ``n_pos`` grows.
    """
    _check_count("n_pos", n_pos)
    return float(-np.expm1(n_pos * np.log1p(-1.0 / n_pos))) if n_pos > 1 else 1.0


def inclusion_prob_majority_balanced(n_pos: int, n_neg: int) -> float:
    """P(a given negative is drawn when ``n_pos`` negatives are bootstrapped from ``n_neg``)."""
    _check_count("n_pos", n_pos)
    _check_count("n_neg", n_neg)
    if n_neg == 1:
        return 1.0
    return float(-np.expm1(n_pos * np.log1p(-1.0 / n_neg)))


def inclusion_prob_majority_standard(n_pos: int, n_neg: int) -> float:
    """Undersample negatives to ``n_pos`` without replacement, then bootstrap."""
    _check_count("n_pos", n_pos)
    _check_count("n_neg", n_neg)
    if n_neg < n_pos:
        raise ValueError("n_neg must be >= n_pos")
    return (n_pos / n_neg) * inclusion_prob_minority_bootstrap(n_pos)


def biased_posterior(p, incl_pos: float, incl_neg: float):
    """P(Y=1 | x, row included in training) given P(Y=1 | x) = p and per-class inclusion rates."""
    if incl_pos < 0 or incl_neg < 0 or incl_pos > 1 or incl_neg > 1:
        raise ValueError("inclusion probabilities must lie in [0, 1]")
    if incl_pos + incl_neg <= 0:
        raise ValueError("at least one inclusion probability must be positive")
    arr = np.asarray(p, dtype=np.float64)
    if np.any((arr < 0) | (arr > 1)):
        raise ValueError("p must lie in [0, 1]")
    out = incl_pos * arr / (incl_pos * arr + incl_neg * (1.0 - arr))
    return float(out) if out.ndim == 0 else out
