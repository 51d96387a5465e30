"""Gradient boosted regression trees with exact greedy split search."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .logistic import SchemaError, sigmoid

FORMAT_VERSION = 1
OBJECTIVES = ("squared_error", "logistic")
# gains closer than this (relative) are ties, resolved by feature then threshold
TIE_TOL = 1e-12


@dataclass(frozen=True)
class GbtParams:
    rounds: int = 100
    learning_rate: float = 0.1
    max_depth: int = 4
    min_leaf: int = 2


@dataclass
class RegressionTree:
    """Array-backed binary tree; ``feature[i] == -1`` marks a leaf."""

    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[float] = field(default_factory=list)
    cover: list[int] = field(default_factory=list)
    gain: list[float] = field(default_factory=list)
    max_depth: int = 0

    def _add(self, **kw) -> int:
        for name in ("feature", "threshold", "left", "right", "value", "cover", "gain"):
            getattr(self, name).append(kw[name])
        return len(self.feature) - 1

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        out = np.empty(X.shape[0])
        for r in range(X.shape[0]):
            node = 0
            while self.feature[node] >= 0:
                node = self.left[node] if X[r, self.feature[node]] <= self.threshold[node] else self.right[node]
            out[r] = self.value[node]
        return out

    def depth(self, node: int = 0) -> int:
        if self.feature[node] < 0:
            return 0
        return 1 + max(self.depth(self.left[node]), self.depth(self.right[node]))


def sse(v: np.ndarray) -> float:
    return float(((v - v.mean()) ** 2).sum()) if v.size else 0.0


def best_split(X: np.ndarray, target: np.ndarray, min_leaf: int):
    """Best (gain, feature, threshold) over all features and midpoints.

    Gain is the drop in squared error from fitting each side by its mean.
    An impure node takes its best admissible split even at zero gain, so
    patterns with no marginal signal (XOR) can still be reached at depth 2.
    Returns None for pure nodes and when no admissible split exists.
    """
    n, d = X.shape
    if n < 2 * min_leaf or n < 2:
        return None
    if sse(target) <= TIE_TOL * max(1.0, float((target ** 2).sum())):
        return None
    total = target.sum()
    base = total * total / n
    best = None
    for j in range(d):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        cs = np.cumsum(target[order])[:-1]
        nl = np.arange(1, n)
        ok = (xs[:-1] < xs[1:]) & (nl >= min_leaf) & (n - nl >= min_leaf)
        if not ok.any():
            continue
        gains = cs ** 2 / nl + (total - cs) ** 2 / (n - nl) - base
        gains = np.where(ok, gains, -np.inf)
        top = float(gains.max())
        # lowest threshold among candidates tied with the best
        i = int(np.argmax(gains >= top - TIE_TOL * max(1.0, abs(top))))
        g = float(gains[i])
        if best is None or g > best[0] + TIE_TOL * max(1.0, abs(best[0])):
            thr = 0.5 * (xs[i] + xs[i + 1])
            if thr >= xs[i + 1]:
                thr = float(xs[i])
            best = (g, j, float(thr))
    if best is None:
        return None
    return (max(best[0], 0.0), best[1], best[2])


def _grow(tree: RegressionTree, X, target, leaf_value, rows, depth, params: GbtParams) -> int:
    split = best_split(X[rows], target[rows], params.min_leaf) if depth < params.max_depth else None
    if split is None:
        return tree._add(feature=-1, threshold=0.0, left=-1, right=-1,
                         value=float(leaf_value(rows)), cover=int(rows.size), gain=0.0)
    gain, j, thr = split
    node = tree._add(feature=j, threshold=thr, left=-1, right=-1, value=0.0,
                     cover=int(rows.size), gain=gain)
    go_left = X[rows, j] <= thr
    tree.left[node] = _grow(tree, X, target, leaf_value, rows[go_left], depth + 1, params)
    tree.right[node] = _grow(tree, X, target, leaf_value, rows[~go_left], depth + 1, params)
    return node


@dataclass
class GbtModel:
    trees: list[RegressionTree]
    learning_rate: float
    objective: str
    base_score: float
    schema: tuple[str, ...] = ()
    params: GbtParams = field(default_factory=GbtParams)
    gain: list[float] = field(default_factory=list)
    cover: list[float] = field(default_factory=list)

    def _check(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.schema and X.shape[1] != len(self.schema):
            raise SchemaError(f"expected {len(self.schema)} features, got {X.shape[1]}")
        return X

    def predict_raw(self, X) -> np.ndarray:
        X = self._check(X)
        out = np.full(X.shape[0], self.base_score)
        for t in self.trees:
            out += self.learning_rate * t.predict(X)
        return out

    def predict(self, X) -> np.ndarray:
        raw = self.predict_raw(X)
        return sigmoid(raw) if self.objective == "logistic" else raw

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION, "model": "gbt",
            "schema": list(self.schema), "objective": self.objective,
            "base_score": self.base_score, "learning_rate": self.learning_rate,
            "params": asdict(self.params),
            "trees": [asdict(t) for t in self.trees],
            "importance": {"gain": self.gain, "cover": self.cover},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GbtModel":
        if d.get("format_version") != FORMAT_VERSION or d.get("model") != "gbt":
            raise ValueError("not a GBT model file of a supported version")
        return cls([RegressionTree(**t) for t in d["trees"]], float(d["learning_rate"]),
                   d["objective"], float(d["base_score"]), tuple(d["schema"]),
                   GbtParams(**d["params"]),
                   [float(g) for g in d["importance"]["gain"]],
                   [float(c) for c in d["importance"]["cover"]])

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), sort_keys=True) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "GbtModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def training_loss(objective: str, y: np.ndarray, raw: np.ndarray) -> float:
    if objective == "squared_error":
        return float(np.mean((y - raw) ** 2))
    return float(np.mean(np.logaddexp(0.0, np.where(y > 0, -raw, raw))))


def train_gbt(X, y, params: GbtParams | None = None, objective: str = "squared_error",
              schema: Sequence[str] = (), loss_trace: list | None = None) -> GbtModel:
    """Fit ``params.rounds`` trees to the negative loss gradient.

    Leaves hold the mean residual (squared error) or a Newton step (logistic).
    If ``loss_trace`` is given, the training loss before the first round and
    after every round is appended to it.
    """
    params = params or GbtParams()
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] == 0 or y.size == 0:
        raise ValueError("empty training data")
    if X.shape[0] != y.size:
        raise ValueError("X and y differ in length")
    if params.rounds < 1:
        raise ValueError("rounds must be >= 1")
    if not 0 < params.learning_rate <= 1:
        raise ValueError("learning_rate must be in (0, 1]")
    if params.max_depth < 0 or params.min_leaf < 1:
        raise ValueError("max_depth must be >= 0 and min_leaf >= 1")
    if not np.isfinite(X).all():
        raise ValueError("features must be finite")

    if objective == "squared_error":
        base = float(y.mean())
    else:
        if not np.isin(y, (0.0, 1.0)).all():
            raise ValueError("logistic objective needs 0/1 targets")
        p = min(max(y.mean(), 1e-6), 1 - 1e-6)
        base = float(np.log(p / (1 - p)))

    n, d = X.shape
    raw = np.full(n, base)
    trees: list[RegressionTree] = []
    gain = np.zeros(d)
    cover = np.zeros(d)
    all_rows = np.arange(n)
    if loss_trace is not None:
        loss_trace.append(training_loss(objective, y, raw))

    for _ in range(params.rounds):
        if objective == "squared_error":
            resid = y - raw

            def leaf_value(rows, resid=resid):
                return resid[rows].mean()
        else:
            prob = sigmoid(raw)
            resid = y - prob
            hess = prob * (1 - prob)

            def leaf_value(rows, resid=resid, hess=hess):
                h = hess[rows].sum()
                return resid[rows].sum() / h if h > 1e-12 else 0.0

        tree = RegressionTree(max_depth=params.max_depth)
        _grow(tree, X, resid, leaf_value, all_rows, 0, params)
        for f, g, c in zip(tree.feature, tree.gain, tree.cover):
            if f >= 0:
                gain[f] += g
                cover[f] += c
        trees.append(tree)
        raw = raw + params.learning_rate * tree.predict(X)
        if loss_trace is not None:
            loss_trace.append(training_loss(objective, y, raw))

    return GbtModel(trees, params.learning_rate, objective, base, tuple(schema), params,
                    gain.tolist(), cover.tolist())


def feature_importance(model: GbtModel) -> list[tuple[str, float, float]]:
    """(feature, gain, cover share) for split features, highest gain first."""
    total_cover = sum(model.cover)
    names = list(model.schema) or [f"f{i}" for i in range(len(model.gain))]
    rows = [(names[i], model.gain[i], model.cover[i] / total_cover)
            for i in range(len(model.gain)) if model.cover[i] > 0]
    return sorted(rows, key=lambda r: (-r[1], names.index(r[0])))


def rank(model: GbtModel, items: Sequence) -> list[tuple[str, float]]:
    """Score ``(image_id, FeatureVector)`` pairs; best first, ties by image id."""
    if not items:
        return []
    for iid, fv in items:
        if model.schema and tuple(fv.names) != tuple(model.schema):
            raise SchemaError(f"feature schema of {iid} does not match the model")
    X = np.array([fv.as_array() for _, fv in items])
    scores = model.predict(X)
    out = [(iid, float(s)) for (iid, _), s in zip(items, scores)]
    return sorted(out, key=lambda t: (-t[1], t[0]))
