"""Gradient-boosted regression trees, squared loss, built from scratch.

Each tree fits the residuals of the ensemble so far; split search is an
exact greedy scan over sorted feature values using the variance-reduction
criterion. Every split considers a random subset of ``colsample * d``
features, drawn from the model's seeded generator, so training is fully
deterministic for a fixed seed. Ties in gain break toward the lower
feature index, then the lower threshold.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .features import FeatureVocabulary


@dataclass(frozen=True)
class BoostParams:
    """Production defaults; tests shrink to 30 trees / depth 4 for speed."""

    num_trees: int = 300
    max_depth: int = 20
    learning_rate: float = 0.05
    colsample: float = 0.9
    min_samples_leaf: int = 1

    def __post_init__(self):
        if self.num_trees < 0:
            raise ConfigError("num_trees must be >= 0")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ConfigError("learning_rate must be in (0, 1]")
        if not 0.0 < self.colsample <= 1.0:
            raise ConfigError("colsample must be in (0, 1]")
        if self.min_samples_leaf < 1:
            raise ConfigError("min_samples_leaf must be >= 1")


def _best_split(
    X: np.ndarray,
    y: np.ndarray,
    rows: np.ndarray,
    features: np.ndarray,
    min_samples_leaf: int,
) -> tuple[int, float, float] | None:
    """Exact greedy split minimizing children SSE; None when no split exists.

    Returns (feature, threshold, gain) with gain the SSE reduction over
    leaving the node whole.
    """
    n = rows.size
    best_sse = math.inf
    best: tuple[int, float] | None = None
    y_node = y[rows]
    for f in features:
        values = X[rows, f]
        order = np.argsort(values, kind="stable")
        vs = values[order]
        ys = y_node[order]
        cut_ok = vs[1:] > vs[:-1]
        left_sizes = np.arange(1, n)
        if min_samples_leaf > 1:
            cut_ok = cut_ok & (left_sizes >= min_samples_leaf) & (left_sizes <= n - min_samples_leaf)
        if not cut_ok.any():
            continue
        c1 = np.cumsum(ys)
        c2 = np.cumsum(ys * ys)
        left1, left2 = c1[:-1], c2[:-1]
        right1, right2 = c1[-1] - left1, c2[-1] - left2
        sse = (left2 - left1 * left1 / left_sizes) + (
            right2 - right1 * right1 / (n - left_sizes)
        )
        sse = np.where(cut_ok, sse, math.inf)
        pos = int(np.argmin(sse))  # first minimum -> lowest threshold
        if sse[pos] < best_sse:
            best_sse = float(sse[pos])
            midpoint = (vs[pos] + vs[pos + 1]) / 2.0
            if midpoint >= vs[pos + 1]:  # adjacent floats: keep the right child non-empty
                midpoint = vs[pos]
            best = (int(f), float(midpoint))
    if best is None:
        return None
    parent_sse = float(np.sum((y_node - y_node.mean()) ** 2))
    return best[0], best[1], max(parent_sse - best_sse, 0.0)


def _fit_node(
    X: np.ndarray,
    y: np.ndarray,
    rows: np.ndarray,
    depth: int,
    params: BoostParams,
    rng: np.random.Generator,
) -> dict:
    y_node = y[rows]
    if (
        depth >= params.max_depth
        or rows.size < 2 * params.min_samples_leaf
        or y_node.max() == y_node.min()
    ):
        return {"value": float(y_node.mean())}
    d = X.shape[1]
    if params.colsample >= 1.0:
        features = np.arange(d)
    else:
        k = max(1, math.ceil(params.colsample * d))
        features = np.sort(rng.choice(d, size=k, replace=False))
    split = _best_split(X, y, rows, features, params.min_samples_leaf)
    if split is None:
        return {"value": float(y_node.mean())}
    feature, threshold, gain = split
    go_left = X[rows, feature] <= threshold
    return {
        "feature": feature,
        "threshold": threshold,
        "gain": gain,
        "left": _fit_node(X, y, rows[go_left], depth + 1, params, rng),
        "right": _fit_node(X, y, rows[~go_left], depth + 1, params, rng),
    }


def fit_tree(X: np.ndarray, y: np.ndarray, params: BoostParams, rng: np.random.Generator) -> dict:
    return _fit_node(X, y, np.arange(X.shape[0]), 0, params, rng)


def tree_predict(node: dict, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0])
    stack = [(node, np.arange(X.shape[0]))]
    while stack:
        current, rows = stack.pop()
        if rows.size == 0:
            continue
        if "value" in current:
            out[rows] = current["value"]
            continue
        go_left = X[rows, current["feature"]] <= current["threshold"]
        stack.append((current["left"], rows[go_left]))
        stack.append((current["right"], rows[~go_left]))
    return out


def tree_predict_one(node: dict, x: np.ndarray) -> float:
    while "value" not in node:
        node = node["left"] if x[node["feature"]] <= node["threshold"] else node["right"]
    return node["value"]


def tree_depth(node: dict) -> int:
    if "value" in node:
        return 0
    return 1 + max(tree_depth(node["left"]), tree_depth(node["right"]))


def split_gain_importances(model: "BoostedModel") -> np.ndarray:
    """Total SSE reduction attributed to each feature across all trees."""
    totals = np.zeros(model.num_features)

    def walk(node: dict) -> None:
        if "value" in node:
            return
        totals[node["feature"]] += node.get("gain", 0.0)
        walk(node["left"])
        walk(node["right"])

    for tree in model.trees:
        walk(tree)
    return totals


@dataclass
class BoostedModel:
    """Additive ensemble: base prediction plus shrunken tree corrections.

    Raw scores can dip below zero; :meth:`predict` clamps at zero because
    the target is a volume.
    """

    base_prediction: float
    trees: list[dict]
    params: BoostParams
    num_features: int
    seed: int
    vocabulary: FeatureVocabulary | None = None
    training_mse: list[float] = field(default_factory=list)

    def _check_width(self, X: np.ndarray) -> None:
        if X.ndim != 2 or X.shape[1] != self.num_features:
            raise ConfigError(
                f"feature dimension mismatch: model expects {self.num_features}, "
                f"got {X.shape[1] if X.ndim == 2 else X.shape}"
            )

    def raw_scores(self, X: np.ndarray) -> np.ndarray:
        self._check_width(X)
        scores = np.full(X.shape[0], self.base_prediction)
        for tree in self.trees:
            scores += self.params.learning_rate * tree_predict(tree, X)
        return scores

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.maximum(self.raw_scores(X), 0.0)

    def predict_one(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.num_features,):
            raise ConfigError(
                f"feature dimension mismatch: model expects {self.num_features}, got {x.shape}"
            )
        score = self.base_prediction
        for tree in self.trees:
            score += self.params.learning_rate * tree_predict_one(tree, x)
        return max(score, 0.0)

    def to_dict(self) -> dict:
        return {
            "base_prediction": self.base_prediction,
            "num_features": self.num_features,
            "seed": self.seed,
            "params": {
                "num_trees": self.params.num_trees,
                "max_depth": self.params.max_depth,
                "learning_rate": self.params.learning_rate,
                "colsample": self.params.colsample,
                "min_samples_leaf": self.params.min_samples_leaf,
            },
            "vocabulary": None if self.vocabulary is None else self.vocabulary.to_dict(),
            "training_mse": list(self.training_mse),
            "trees": self.trees,
        }

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_dict(), handle, indent=2, sort_keys=True)
            handle.write("\n")

    @classmethod
    def from_dict(cls, payload: dict) -> "BoostedModel":
        vocab = payload.get("vocabulary")
        return cls(
            base_prediction=float(payload["base_prediction"]),
            trees=payload["trees"],
            params=BoostParams(**payload["params"]),
            num_features=int(payload["num_features"]),
            seed=int(payload["seed"]),
            vocabulary=None if vocab is None else FeatureVocabulary.from_dict(vocab),
            training_mse=[float(v) for v in payload.get("training_mse", [])],
        )

    @classmethod
    def load(cls, path: str | Path) -> "BoostedModel":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))


def train(
    X: np.ndarray,
    y: np.ndarray,
    params: BoostParams | None = None,
    seed: int = 0,
    vocabulary: FeatureVocabulary | None = None,
) -> BoostedModel:
    """Fit the boosted ensemble to (features, received volume) samples.

    ``training_mse[m]`` records the mean squared error of the raw ensemble
    score after ``m`` trees; with squared loss and a learning rate in
    (0, 1] the sequence is non-increasing.
    """
    params = params or BoostParams()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise DataError("feature matrix must be 2-D")
    if X.shape[0] != y.shape[0]:
        raise DataError("feature matrix and targets must have equal length")
    if X.shape[0] < 2:
        raise DataError("need at least 2 training samples")
    if not np.all(np.isfinite(X)):
        raise DataError("features must be finite")
    if not np.all(np.isfinite(y)) or np.any(y < 0.0):
        raise DataError("targets must be finite and non-negative")
    rng = np.random.default_rng(seed)
    base = float(y.mean())
    scores = np.full(y.shape[0], base)
    trace = [float(np.mean((y - scores) ** 2))]
    trees: list[dict] = []
    for _ in range(params.num_trees):
        residuals = y - scores
        tree = fit_tree(X, residuals, params, rng)
        scores += params.learning_rate * tree_predict(tree, X)
        trees.append(tree)
        trace.append(float(np.mean((y - scores) ** 2)))
    return BoostedModel(
        base_prediction=base,
        trees=trees,
        params=params,
        num_features=X.shape[1],
        seed=seed,
        vocabulary=vocabulary,
        training_mse=trace,
    )
