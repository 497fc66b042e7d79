"""Simulation protocols: prevalence sweep, prediction-quantile comparison, tree bias study."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Callable

import numpy as np

from .calibration import calibrate_dataset
from .resampling import SamplingSpec, undersample
from .results import ResultTable
from .synthetic_data import N_FEATURES, Dataset, generate_dataset, mean_true_probability, solve_k_for_prevalence
from .tree_learning import Tree, fit_forest, fit_tree, predict_forest, predict_tree

log = logging.getLogger(__name__)

TABLE2_PREVALENCES = (0.498, 0.397, 0.305, 0.225, 0.160, 0.061, 0.021, 0.002)

# stream ids for derive_seed
_TRAIN, _TEST, _MC, _UNDERSAMPLE, _FOREST, _LEVEL, _TREE = range(7)


def derive_seed(seed: int, *key: int) -> int:
    """Independent 64-bit seed for the stream named by ``key``."""
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1, np.uint64)[0])


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("; ".join(problems))


@dataclass(frozen=True)
class SweepConfig:
    n_train: int = 200_000
    n_test: int = 200_000
    k: float = 1.5
    betas: tuple[float, ...] = (0.025, 0.05, 0.075, 0.1)
    mtry_values: tuple[int, ...] = tuple(range(1, 11))
    n_trees: int = 200
    seed: int = 0
    n_mc: int = 1_000_000

    def problems(self) -> list[str]:
        out = []
        if self.n_train < 1:
            out.append("n_train: must be >= 1")
        if self.n_test < 1:
            out.append("n_test: must be >= 1")
        if not self.betas:
            out.append("betas: must be nonempty")
        if any(not 0 < b <= 1 for b in self.betas):
            out.append("betas: every value must lie in (0, 1]")
        if not self.mtry_values:
            out.append("mtry_values: must be nonempty")
        if any(not 1 <= m <= N_FEATURES for m in self.mtry_values):
            out.append(f"mtry_values: every value must lie in [1, {N_FEATURES}]")
        if self.n_trees < 1:
            out.append("n_trees: must be >= 1")
        if self.n_mc < 2:
            out.append("n_mc: must be >= 2")
        return out

    def validate(self) -> "SweepConfig":
        if problems := self.problems():
            raise ConfigError(problems)
        return self

    def paper_scale(self) -> "SweepConfig":
        return replace(self, n_train=1_000_000, n_test=1_000_000, n_trees=500)


QQ_DEFAULTS = dict(betas=(0.03,), mtry_values=(2, 10))


@dataclass(frozen=True)
class BiasStudyConfig:
    prevalence_targets: tuple[float, ...] = TABLE2_PREVALENCES
    n_train: int = 100_000
    n_test: int = 200_000
    n_replicates: int = 50
    seed: int = 0
    n_mc: int = 1_000_000

    def problems(self) -> list[str]:
        out = []
        if not self.prevalence_targets:
            out.append("prevalence_targets: must be nonempty")
        if any(not 0 < t < 1 for t in self.prevalence_targets):
            out.append("prevalence_targets: every value must lie in (0, 1)")
        if self.n_train < 1:
            out.append("n_train: must be >= 1")
        if self.n_test < 1:
            out.append("n_test: must be >= 1")
        if self.n_replicates < 2:
            out.append("n_replicates: must be >= 2")
        if self.n_mc < 2:
            out.append("n_mc: must be >= 2")
        return out

    def validate(self) -> "BiasStudyConfig":
        if problems := self.problems():
            raise ConfigError(problems)
        return self

    def paper_scale(self) -> "BiasStudyConfig":
        return replace(self, n_test=1_000_000)


def _datasets(cfg: SweepConfig) -> tuple[Dataset, Dataset]:
    train = generate_dataset(cfg.n_train, cfg.k, derive_seed(cfg.seed, _TRAIN))
    test = generate_dataset(cfg.n_test, cfg.k, derive_seed(cfg.seed, _TEST))
    return train, test


def prevalence_sweep(cfg: SweepConfig, threads: int = 1) -> ResultTable:
    """Calibrated prevalence estimate for every (beta, mtry) pair on one train/test pair.

    Metrics per cell: ``prevalence_estimate`` (mean calibrated test prediction)
    and ``raw_mean_prediction``; per beta: ``realized_beta``; baseline:
    ``true_prevalence`` (Monte Carlo mean of the true probability) plus
    ``true_prevalence_se`` and ``test_mean_true_prob``.
    """
    cfg.validate()
    train, test = _datasets(cfg)
    truth, truth_se = mean_true_probability(cfg.k, cfg.n_mc, derive_seed(cfg.seed, _MC))
    table = ResultTable(meta={"train_positives": train.n_pos, "test_positives": test.n_pos})
    table.add("sweep", "true_prevalence", truth)
    table.add("sweep", "true_prevalence_se", truth_se)
    table.add("sweep", "test_mean_true_prob", float(test.true_probs.mean()))
    for bi, beta in enumerate(cfg.betas):
        sub = undersample(train, SamplingSpec(beta, derive_seed(cfg.seed, _UNDERSAMPLE, bi)))
        table.add("sweep", "realized_beta", sub.realized_beta, beta=beta)
        for mtry in cfg.mtry_values:
            forest = fit_forest(sub, mtry, cfg.n_trees, True, derive_seed(cfg.seed, _FOREST, bi, mtry), threads)
            raw = predict_forest(forest, test.features, threads)
            _, estimate = calibrate_dataset(raw, sub.realized_beta)
            log.info("sweep beta=%g mtry=%d estimate=%.6g raw=%.6g", beta, mtry, estimate, raw.mean())
            table.add("sweep", "prevalence_estimate", estimate, beta=beta, mtry=mtry)
            table.add("sweep", "raw_mean_prediction", float(raw.mean()), beta=beta, mtry=mtry)
    return table


def qq_experiment(cfg: SweepConfig, n_levels: int = 1000, threads: int = 1) -> ResultTable:
    """Compare the test-prediction distributions of two forests differing only in mtry.

    Both forests are fit to the same undersampled training set. Emits
    quantiles at ``n_levels`` evenly spaced levels in [0, 1] (metric
    ``quantile_<stage>:<level>``), min/max/mean per forest and stage, and
    second-over-first ratios of each statistic (``<stat>_ratio_<stage>``;
    NaN or inf when the first forest's statistic is 0).
    Stages are ``raw`` and ``calibrated``.
    """
    cfg.validate()
    problems = []
    if len(cfg.mtry_values) != 2:
        problems.append("mtry_values: exactly two values required")
    if len(cfg.betas) != 1:
        problems.append("betas: exactly one value required")
    if n_levels < 2:
        problems.append("n_levels: must be >= 2")
    if problems:
        raise ConfigError(problems)
    beta = cfg.betas[0]
    train, test = _datasets(cfg)
    sub = undersample(train, SamplingSpec(beta, derive_seed(cfg.seed, _UNDERSAMPLE, 0)))
    preds = {}
    for mtry in cfg.mtry_values:
        forest = fit_forest(sub, mtry, cfg.n_trees, True, derive_seed(cfg.seed, _FOREST, 0, mtry), threads)
        raw = predict_forest(forest, test.features, threads)
        cal, _ = calibrate_dataset(raw, sub.realized_beta)
        preds[mtry] = {"raw": raw, "calibrated": cal}

    table = ResultTable(meta={"realized_beta": sub.realized_beta})
    levels = np.linspace(0.0, 1.0, n_levels)
    for stage in ("raw", "calibrated"):
        for mtry in cfg.mtry_values:
            q = np.quantile(preds[mtry][stage], levels, method="linear")
            for level, value in zip(levels, q):
                table.add("qq", f"quantile_{stage}:{level:.6f}", value, beta=beta, mtry=mtry)
    stats = {"min": np.min, "max": np.max, "mean": np.mean}
    for mtry in cfg.mtry_values:
        for stage in ("raw", "calibrated"):
            for name, fn in stats.items():
                table.add("qq", f"{name}_{stage}", float(fn(preds[mtry][stage])), beta=beta, mtry=mtry)
    first, second = cfg.mtry_values
    for stage in ("raw", "calibrated"):
        for name, fn in stats.items():
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = float(np.float64(fn(preds[second][stage])) / fn(preds[first][stage]))
            table.add("qq", f"{name}_ratio_{stage}", ratio, beta=beta)
    return table


def run_replicates(
    op: Callable[[int], ResultTable],
    n: int,
    base_seed: int,
    threads: int = 1,
) -> ResultTable:
    """Run ``op(base_seed + i)`` for i < n and append per-metric mean and SD rows.

    Replicate rows carry ``replicate = i``. For each (factors, metric) group,
    in order of first appearance, ``<metric>_mean`` and ``<metric>_sd``
    (sample SD, ddof=1) rows follow.
    """
    if n < 2:
        raise ValueError("n must be >= 2")

    def one(i: int) -> ResultTable:
        try:
            return op(base_seed + i)
        except Exception as exc:
            raise RuntimeError(f"replicate {i} (seed {base_seed + i}) failed: {exc}") from exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(n)))
    else:
        results = [one(i) for i in range(n)]

    table = ResultTable()
    groups: dict[tuple, list[float]] = {}
    for i, res in enumerate(results):
        for row in res:
            table.rows.append(replace(row, replicate=i))
            groups.setdefault(row.factors() + (row.metric,), []).append(row.value)
    for (experiment, beta, mtry, level, metric), values in groups.items():
        arr = np.asarray(values)
        sd = float(arr.std(ddof=1)) if arr.size > 1 else math.nan
        factors = dict(beta=beta, mtry=mtry, prevalence_level=level)
        table.add(experiment, f"{metric}_mean", float(arr.mean()), **factors)
        table.add(experiment, f"{metric}_sd", sd, **factors)
    return table


def prediction_ratio(tree: Tree, test: Dataset) -> float:
    """Mean tree prediction over the test rows divided by their mean true probability."""
    if test.true_probs is None:
        raise ValueError("test data lacks true probabilities")
    return float(predict_tree(tree, test.features).mean() / test.true_probs.mean())


def tree_bias_study(cfg: BiasStudyConfig, threads: int = 1) -> ResultTable:
    """Ratio of mean single-tree prediction to mean true probability across imbalance levels.

    For each target prevalence the intercept ``k`` is solved for, then each
    replicate draws fresh train/test sets and fits one purity tree using all
    features and no bootstrap.
    """
    cfg.validate()
    table = ResultTable(meta={"k": {}})
    for li, target in enumerate(cfg.prevalence_targets):
        k = solve_k_for_prevalence(
            target, cfg.n_mc, derive_seed(cfg.seed, _MC, li), tol=min(1e-5, 1e-3 * target)
        )
        table.meta["k"][repr(target)] = k

        def replicate(rseed: int, k=k, target=target) -> ResultTable:
            train = generate_dataset(cfg.n_train, k, derive_seed(rseed, _TRAIN))
            test = generate_dataset(cfg.n_test, k, derive_seed(rseed, _TEST))
            tree = fit_tree(train, N_FEATURES, derive_seed(rseed, _TREE))
            out = ResultTable()
            out.add("bias", "ratio", prediction_ratio(tree, test), prevalence_level=target)
            return out

        level = run_replicates(replicate, cfg.n_replicates, derive_seed(cfg.seed, _LEVEL, li), threads)
        log.info(
            "bias level=%g k=%.6g mean ratio=%.6g",
            target, k, level.value("ratio_mean", prevalence_level=target),
        )
        table.extend(level.rows)
    return table


def config_dict(cfg) -> dict:
    return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(cfg).items()}
