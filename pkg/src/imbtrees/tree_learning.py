"""Classification trees grown to purity and random forests built from them."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import _engine
from .synthetic_data import Dataset

FOREST_FORMAT = "imbtrees-forest"
FOREST_FORMAT_VERSION = 1
_PREDICT_BLOCK = 4096


@dataclass(frozen=True, eq=False)
class Tree:
    """A fitted tree as preorder node arrays.

    Node ``i`` is a leaf when ``feature[i] == -1``; its prediction is
    ``value[i]``, the fraction of positive training rows that reached it.
    Otherwise rows with ``x[feature[i]] <= threshold[i]`` go to ``left[i]``
    and the rest to ``right[i]``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    n_features: int

    @classmethod
    def leaf(cls, pos_fraction: float, n_features: int, n_samples: int = 1) -> "Tree":
        return cls(
            feature=np.array([-1], np.int32),
            threshold=np.zeros(1),
            left=np.array([-1], np.int32),
            right=np.array([-1], np.int32),
            value=np.array([float(pos_fraction)]),
            n_samples=np.array([n_samples], np.int64),
            n_features=n_features,
        )

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def __eq__(self, other):
        if not isinstance(other, Tree):
            return NotImplemented
        return self.n_features == other.n_features and all(
            np.array_equal(getattr(self, name), getattr(other, name))
            for name in ("feature", "threshold", "left", "right", "value", "n_samples")
        )


@dataclass(frozen=True, eq=False)
class Forest:
    trees: list[Tree]
    mtry: int
    bootstrap: bool
    seed: int | None
    n_features: int = field(default=0)

    def __post_init__(self):
        if not self.trees:
            raise ValueError("a forest needs at least one tree")
        if self.n_features == 0:
            object.__setattr__(self, "n_features", self.trees[0].n_features)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @cached_property
    def _packed(self):
        sizes = np.array([t.n_nodes for t in self.trees], np.int64)
        offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)

        def shifted(name):
            parts = []
            for tree, off in zip(self.trees, offsets):
                child = getattr(tree, name).astype(np.int64)
                parts.append(np.where(child >= 0, child + off, -1))
            return np.concatenate(parts)

        return (
            np.concatenate([t.feature for t in self.trees]).astype(np.int64),
            np.concatenate([t.threshold for t in self.trees]),
            shifted("left"),
            shifted("right"),
            np.concatenate([t.value for t in self.trees]),
            offsets,
        )

    def __eq__(self, other):
        if not isinstance(other, Forest):
            return NotImplemented
        return (
            self.mtry == other.mtry
            and self.bootstrap == other.bootstrap
            and self.seed == other.seed
            and self.n_trees == other.n_trees
            and all(a == b for a, b in zip(self.trees, other.trees))
        )


def _as_matrix(x, n_features: int) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != n_features:
        raise ValueError(f"expected {n_features} features, got shape {np.shape(x)}")
    return np.ascontiguousarray(arr), single


def _check_fit_args(data: Dataset, mtry: int) -> None:
    if data.n == 0:
        raise ValueError("cannot fit a tree to an empty dataset")
    if not 1 <= mtry <= data.n_features:
        raise ValueError(f"mtry must lie in [1, {data.n_features}], got {mtry}")


def _grow(XT: np.ndarray, y: np.ndarray, sample: np.ndarray, mtry: int, seed: int) -> Tree:
    arrays = _engine.build_tree(XT, y, sample, mtry, np.uint64(seed))
    return Tree(*arrays, n_features=XT.shape[0])


def _training_arrays(data: Dataset) -> tuple[np.ndarray, np.ndarray]:
    return np.ascontiguousarray(data.features.T), data.labels.astype(np.int64)


def fit_tree(data: Dataset, mtry: int | None = None, seed: int = 0) -> Tree:
    """Grow a single tree on all rows (no bootstrap) until every leaf is pure.

    ``mtry`` defaults to all features.
    """
    mtry = data.n_features if mtry is None else mtry
    _check_fit_args(data, mtry)
    XT, y = _training_arrays(data)
    tree_seed = int(np.random.SeedSequence(seed).generate_state(1, np.uint64)[0])
    return _grow(XT, y, np.arange(data.n, dtype=np.int64), mtry, tree_seed)


def _tree_stream(seed: int, t: int, n: int, bootstrap: bool) -> tuple[np.ndarray, int]:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(t,)))
    sample = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
    return sample.astype(np.int64), int(rng.integers(0, 2**63))


def fit_forest(
    data: Dataset,
    mtry: int,
    n_trees: int = 500,
    bootstrap: bool = True,
    seed: int = 0,
    threads: int = 1,
) -> Forest:
    """Fit ``n_trees`` purity trees, each on a bootstrap sample when ``bootstrap``.

    Tree ``t`` draws all its randomness from ``(seed, t)``, so the result does
    not depend on ``threads``.
    """
    _check_fit_args(data, mtry)
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    XT, y = _training_arrays(data)

    def one(t: int) -> Tree:
        sample, tree_seed = _tree_stream(seed, t, data.n, bootstrap)
        return _grow(XT, y, sample, mtry, tree_seed)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trees = list(pool.map(one, range(n_trees)))
    else:
        trees = [one(t) for t in range(n_trees)]
    return Forest(trees=trees, mtry=mtry, bootstrap=bootstrap, seed=seed, n_features=data.n_features)


def predict_tree(tree: Tree, x):
    """Leaf positive fraction for a single vector or each row of a matrix."""
    X, single = _as_matrix(x, tree.n_features)
    out = np.empty(X.shape[0])
    roots = np.zeros(1, np.int64)
    _engine.predict_block(
        X, tree.feature.astype(np.int64), tree.threshold, tree.left.astype(np.int64),
        tree.right.astype(np.int64), tree.value, roots, out, 0, X.shape[0],
    )
    return float(out[0]) if single else out


def predict_forest(forest: Forest, x, threads: int = 1):
    """Average of the trees' leaf fractions."""
    X, single = _as_matrix(x, forest.n_features)
    feature, threshold, left, right, value, roots = forest._packed
    out = np.empty(X.shape[0])
    blocks = [(s, min(s + _PREDICT_BLOCK, X.shape[0])) for s in range(0, X.shape[0], _PREDICT_BLOCK)]

    def run(block):
        _engine.predict_block(X, feature, threshold, left, right, value, roots, out, *block)

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, blocks))
    else:
        for block in blocks:
            run(block)
    return float(out[0]) if single else out


# Serialization -------------------------------------------------------------

NODE_FIELDS = ("id", "feature", "threshold", "left", "right", "value", "n_samples")


def forest_to_dict(forest: Forest) -> dict:
    trees = []
    for tree in forest.trees:
        nodes = [
            [i, int(tree.feature[i]), float(tree.threshold[i]), int(tree.left[i]),
             int(tree.right[i]), float(tree.value[i]), int(tree.n_samples[i])]
            for i in range(tree.n_nodes)
        ]
        trees.append({"nodes": nodes})
    return {
        "format": FOREST_FORMAT,
        "version": FOREST_FORMAT_VERSION,
        "n_features": forest.n_features,
        "mtry": forest.mtry,
        "n_trees": forest.n_trees,
        "bootstrap": forest.bootstrap,
        "seed": forest.seed,
        "node_fields": list(NODE_FIELDS),
        "trees": trees,
    }


def forest_from_dict(doc: dict) -> Forest:
    if doc.get("format") != FOREST_FORMAT:
        raise ValueError(f"not a {FOREST_FORMAT} document")
    if doc.get("version") != FOREST_FORMAT_VERSION:
        raise ValueError(f"unsupported forest format version {doc.get('version')}")
    d = int(doc["n_features"])
    trees = []
    for t, entry in enumerate(doc["trees"]):
        nodes = entry["nodes"]
        if [row[0] for row in nodes] != list(range(len(nodes))):
            raise ValueError(f"tree {t}: node ids must be 0..n-1 in preorder")
        cols = list(zip(*nodes))
        trees.append(
            Tree(
                feature=np.array(cols[1], np.int32),
                threshold=np.array(cols[2], np.float64),
                left=np.array(cols[3], np.int32),
                right=np.array(cols[4], np.int32),
                value=np.array(cols[5], np.float64),
                n_samples=np.array(cols[6], np.int64),
                n_features=d,
            )
        )
    if len(trees) != doc["n_trees"]:
        raise ValueError("n_trees does not match the number of trees stored")
    return Forest(trees=trees, mtry=int(doc["mtry"]), bootstrap=bool(doc["bootstrap"]),
                  seed=doc["seed"], n_features=d)


def save_forest(forest: Forest, path: str | Path) -> None:
    Path(path).write_text(json.dumps(forest_to_dict(forest), separators=(",", ":")) + "\n")


def load_forest(path: str | Path) -> Forest:
    return forest_from_dict(json.loads(Path(path).read_text()))
