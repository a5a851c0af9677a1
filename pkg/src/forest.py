# src/forest.py
"""
Random forest of Gini decision trees, grown from scratch on numpy.

Each tree gets its own random stream spawned from the master seed, so trees can
be trained in any order or concurrently and the assembled model is still
identical.
"""
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.errors import DatasetIOError, FeatureMismatchError, ParameterError

MODEL_FORMAT = "sig2d-forest/1"
_MIN_DECREASE = 1e-12


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: Optional[int] = None
    min_leaf: int = 1
    mtry: Optional[int] = None  # None -> ceil(sqrt(F))
    seed: int = 0

    def validate(self):
        if self.n_trees < 1:
            raise ParameterError(f"n_trees must be positive, got {self.n_trees}")
        if self.max_depth is not None and self.max_depth < 1:
            raise ParameterError(f"max_depth must be positive, got {self.max_depth}")
        if self.min_leaf < 1:
            raise ParameterError(f"min_leaf must be positive, got {self.min_leaf}")
        if self.mtry is not None and self.mtry < 1:
            raise ParameterError(f"mtry must be positive, got {self.mtry}")
        if not 0 <= self.seed < 2**64:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def resolved_mtry(self, n_features: int) -> int:
        mtry = self.mtry if self.mtry is not None else math.ceil(math.sqrt(n_features))
        if mtry > n_features:
            raise ParameterError(f"mtry={mtry} exceeds the number of features {n_features}")
        return mtry


@dataclass
class Leaf:
    counts: List[int]

    @property
    def vote(self) -> int:
        # argmax picks the lowest class index on ties
        return int(np.argmax(self.counts))


@dataclass
class Split:
    feature: int
    threshold: float
    left: "Node"
    right: "Node"


Node = Union[Leaf, Split]


@dataclass
class ForestModel:
    trees: List[Node]
    classes: List[Any]
    params: ForestParams
    feature_names: List[str] = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def split_counts(self) -> Dict[str, int]:
        """How many internal nodes split on each feature, over the whole forest."""
        counts = {name: 0 for name in self.feature_names}
        stack = list(self.trees)
        while stack:
            node = stack.pop()
            if isinstance(node, Split):
                counts[self.feature_names[node.feature]] += 1
                stack.extend((node.left, node.right))
        return counts

    def check_features(self, feature_names: Sequence[str]):
        if list(feature_names) != list(self.feature_names):
            raise FeatureMismatchError(
                f"model was trained on {list(self.feature_names)} but got {list(feature_names)}"
            )


# --- training ---

def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - np.sum(p * p))


def _best_split_on(
    column: np.ndarray, y: np.ndarray, n_classes: int, parent_gini: float, min_leaf: int
) -> Tuple[float, float]:
    """Best (impurity decrease, threshold) on one feature, or (-inf, nan) without a valid split."""
    n = column.shape[0]
    order = np.argsort(column, kind="stable")
    xs = column[order]
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y[order]] = 1.0
    left = np.cumsum(onehot, axis=0)[:-1]  # left[i] holds rows 0..i
    total = onehot.sum(axis=0)
    right = total - left
    n_left = np.arange(1, n, dtype=np.float64)
    n_right = n - n_left

    valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    if not np.any(valid):
        return -math.inf, math.nan
    gini_left = 1.0 - np.sum((left / n_left[:, None]) ** 2, axis=1)
    gini_right = 1.0 - np.sum((right / n_right[:, None]) ** 2, axis=1)
    decrease = parent_gini - (n_left * gini_left + n_right * gini_right) / n
    decrease = np.where(valid, decrease, -math.inf)
    i = int(np.argmax(decrease))
    threshold = xs[i] + (xs[i + 1] - xs[i]) / 2.0
    # adjacent doubles: the midpoint rounds up onto the right value
    if threshold >= xs[i + 1]:
        threshold = xs[i]
    return float(decrease[i]), float(threshold)


def _grow(
    x: np.ndarray,
    y: np.ndarray,
    rows: np.ndarray,
    depth: int,
    n_classes: int,
    mtry: int,
    params: ForestParams,
    rng: np.random.Generator,
) -> Node:
    counts = np.bincount(y[rows], minlength=n_classes)
    leaf = Leaf(counts=[int(c) for c in counts])
    parent_gini = _gini(counts)
    n_features = x.shape[1]
    if (
        parent_gini == 0.0
        or n_features == 0
        or rows.shape[0] < 2 * params.min_leaf
        or (params.max_depth is not None and depth >= params.max_depth)
    ):
        return leaf

    candidates = np.sort(rng.choice(n_features, size=mtry, replace=False))
    best = (_MIN_DECREASE, math.nan, -1)
    for f in candidates:
        decrease, threshold = _best_split_on(x[rows, f], y[rows], n_classes, parent_gini, params.min_leaf)
        # strict comparison keeps the lowest feature index on ties
        if decrease > best[0]:
            best = (decrease, threshold, int(f))
    if best[2] < 0:
        return leaf

    _, threshold, feature = best
    go_left = x[rows, feature] <= threshold
    return Split(
        feature=feature,
        threshold=threshold,
        left=_grow(x, y, rows[go_left], depth + 1, n_classes, mtry, params, rng),
        right=_grow(x, y, rows[~go_left], depth + 1, n_classes, mtry, params, rng),
    )


def bootstrap_rows(n: int, rng: np.random.Generator) -> np.ndarray:
    """N row indices drawn with replacement."""
    return rng.integers(0, n, size=n)


def train_tree(
    x: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    params: ForestParams,
    rng: np.random.Generator,
    bootstrap: bool = True,
) -> Node:
    """
    Grows one tree on a bootstrap sample (N draws with replacement), or on
    every row when `bootstrap` is False.
    """
    rows = bootstrap_rows(x.shape[0], rng) if bootstrap else np.arange(x.shape[0])
    mtry = params.resolved_mtry(x.shape[1]) if x.shape[1] else 0
    return _grow(x, y, rows, 0, n_classes, mtry, params, rng)


def tree_streams(seed: int, n_trees: int) -> List[np.random.Generator]:
    """Independent per-tree generators spawned from the master seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n_trees)]


def _encode_labels(labels: Sequence[Any], classes: Optional[Sequence[Any]]) -> Tuple[np.ndarray, List[Any]]:
    if classes is None:
        classes = sorted(set(labels))
    classes = [c.item() if isinstance(c, np.generic) else c for c in classes]
    index = {c: i for i, c in enumerate(classes)}
    try:
        y = np.array([index[label] for label in labels], dtype=np.int64)
    except KeyError as e:
        raise ParameterError(f"label {e.args[0]!r} is not one of the classes {classes}") from e
    return y, classes


def train_forest(
    features,
    labels: Sequence[Any],
    params: ForestParams = ForestParams(),
    feature_names: Optional[Sequence[str]] = None,
    classes: Optional[Sequence[Any]] = None,
    workers: int = 1,
    baseline: bool = False,
) -> ForestModel:
    """
    Trains a random forest.

    Args:
        features: N x F matrix of finite reals.
        labels: N class labels, at least two distinct values.
        params: Forest hyperparameters.
        feature_names: Column names stored in the model; default f0..f{F-1}.
        classes: Class order used for tie breaking; default sorted distinct labels.
        workers: Number of threads growing trees.
        baseline: Accept F = 0; every tree is then a leaf on its bootstrap sample.

    Returns:
        The trained ForestModel.
    """
    params.validate()
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1 and x.size == 0:
        x = x.reshape(len(labels), 0)
    if x.ndim != 2 or x.shape[0] != len(labels):
        raise ParameterError(f"features must be N x F with N = {len(labels)}, got shape {x.shape}")
    n, n_features = x.shape
    if n < 2:
        raise ParameterError(f"need at least 2 training rows, got {n}")
    if n_features == 0 and not baseline:
        raise ParameterError("no feature columns; pass baseline=True for the chance baseline")
    if not np.isfinite(x).all():
        raise ParameterError("features contain NaN or infinite values")
    y, classes = _encode_labels(labels, classes)
    if len(np.unique(y)) < 2:
        raise ParameterError("training labels contain a single class")
    if n_features:
        params.resolved_mtry(n_features)
    names = list(feature_names) if feature_names is not None else [f"f{j}" for j in range(n_features)]
    if len(names) != n_features:
        raise ParameterError(f"{len(names)} feature names for {n_features} columns")

    streams = tree_streams(params.seed, params.n_trees)

    def grow(rng: np.random.Generator) -> Node:
        return train_tree(x, y, len(classes), params, rng)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trees = list(pool.map(grow, streams))
    else:
        trees = [grow(rng) for rng in streams]
    return ForestModel(trees=trees, classes=classes, params=params, feature_names=names)


# --- prediction ---

def _route(node: Node, x: np.ndarray, rows: np.ndarray, out: np.ndarray):
    if isinstance(node, Leaf):
        out[rows] = node.vote
        return
    go_left = x[rows, node.feature] <= node.threshold
    _route(node.left, x, rows[go_left], out)
    _route(node.right, x, rows[~go_left], out)


def _check_matrix(model: ForestModel, features) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1 and x.size == 0:
        x = x.reshape(0, model.n_features)
    if x.ndim != 2 or x.shape[1] != model.n_features:
        raise ParameterError(f"expected rows of {model.n_features} features, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ParameterError("features contain NaN or infinite values")
    return x


def predict_batch(model: ForestModel, features) -> Tuple[List[Any], np.ndarray]:
    """
    Majority vote of the trees for every row.

    Returns:
        (labels, fractions) where fractions[m, c] is the share of trees voting
        for model.classes[c]; ties go to the lowest class index.
    """
    x = _check_matrix(model, features)
    m = x.shape[0]
    votes = np.zeros((m, len(model.classes)))
    if m == 0:
        return [], votes
    rows = np.arange(m)
    tree_votes = np.empty(m, dtype=np.int64)
    for tree in model.trees:
        _route(tree, x, rows, tree_votes)
        votes[rows, tree_votes] += 1.0
    fractions = votes / len(model.trees)
    winners = np.argmax(votes, axis=1)
    return [model.classes[i] for i in winners], fractions


def predict(model: ForestModel, feature) -> Any:
    row = np.asarray(feature, dtype=np.float64).ravel()
    if row.shape[0] != model.n_features:
        raise ParameterError(f"expected {model.n_features} features, got {row.shape[0]}")
    labels, _ = predict_batch(model, row.reshape(1, model.n_features))
    return labels[0]


# --- persistence ---

def _node_to_dict(node: Node) -> dict:
    if isinstance(node, Leaf):
        return {"leaf": node.counts}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(data: dict) -> Node:
    if "leaf" in data:
        return Leaf(counts=[int(c) for c in data["leaf"]])
    return Split(
        feature=int(data["feature"]),
        threshold=float(data["threshold"]),
        left=_node_from_dict(data["left"]),
        right=_node_from_dict(data["right"]),
    )


def forest_to_dict(model: ForestModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "classes": list(model.classes),
        "feature_names": list(model.feature_names),
        "params": asdict(model.params),
        "trees": [_node_to_dict(t) for t in model.trees],
    }


def forest_from_dict(data: dict) -> ForestModel:
    if data.get("format") != MODEL_FORMAT:
        raise ParameterError(f"unsupported model format {data.get('format')!r}")
    return ForestModel(
        trees=[_node_from_dict(t) for t in data["trees"]],
        classes=list(data["classes"]),
        params=ForestParams(**data["params"]),
        feature_names=list(data["feature_names"]),
    )


def save_forest(model: ForestModel, path: Path):
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(forest_to_dict(model), indent=1), encoding="utf-8")
    except OSError as e:
        raise DatasetIOError(path, f"cannot write model: {e}", e) from e


def load_forest(path: Path) -> ForestModel:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise DatasetIOError(path, f"cannot read model: {e}", e) from e
    return forest_from_dict(data)
