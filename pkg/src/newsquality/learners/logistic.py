"""L1-regularised logistic regression fitted by cyclic coordinate descent.

The objective is the summed logistic loss plus ``lam * ||w||_1`` on
standardised features; the bias is not penalised.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

FORMAT_VERSION = 1


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=float)))


def _loss(z: np.ndarray, y: np.ndarray) -> float:
    # log(1 + exp(-m)) with margin m = +z for y=1 and -z for y=0
    return float(np.logaddexp(0.0, np.where(y > 0, -z, z)).sum())


def _soft(a: float, t: float) -> float:
    if a > t:
        return a - t
    if a < -t:
        return a + t
    return 0.0


class SchemaError(ValueError):
    pass


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    lam: float
    mean: np.ndarray
    std: np.ndarray
    schema: tuple[str, ...] = ()
    n_iter: int = 0
    converged: bool = False

    def _check(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.weights.size:
            raise SchemaError(f"expected {self.weights.size} features, got {X.shape[1]}")
        return X

    def standardize(self, X) -> np.ndarray:
        return (self._check(X) - self.mean) / self.std

    def decision_function(self, X) -> np.ndarray:
        return self.standardize(X) @ self.weights + self.bias

    def predict_proba(self, X) -> np.ndarray:
        return sigmoid(self.decision_function(X))

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) > 0.5).astype(int)

    def to_dict(self) -> dict:
        return {"format_version": FORMAT_VERSION, "model": "logistic_l1",
                "schema": list(self.schema), "lambda": self.lam,
                "weights": self.weights.tolist(), "bias": self.bias,
                "standardization": {"mean": self.mean.tolist(), "std": self.std.tolist()},
                "n_iter": self.n_iter, "converged": self.converged}

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticModel":
        if d.get("format_version") != FORMAT_VERSION or d.get("model") != "logistic_l1":
            raise ValueError("not a logistic model file of a supported version")
        st = d["standardization"]
        return cls(np.array(d["weights"], float), float(d["bias"]), float(d["lambda"]),
                   np.array(st["mean"], float), np.array(st["std"], float),
                   tuple(d["schema"]), int(d["n_iter"]), bool(d["converged"]))

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "LogisticModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def objective(model: LogisticModel, X, y) -> float:
    z = model.decision_function(X)
    return _loss(z, np.asarray(y, float)) + model.lam * float(np.abs(model.weights).sum())


def loss_gradient(model: LogisticModel, X, y) -> tuple[np.ndarray, float]:
    """Gradient of the smooth (unpenalised) loss w.r.t. standardised weights and bias."""
    Xs = model.standardize(X)
    r = sigmoid(Xs @ model.weights + model.bias) - np.asarray(y, float)
    return Xs.T @ r, float(r.sum())


def train_logistic(X, y, lam: float = 1.0, max_iters: int = 1000, tol: float = 1e-6,
                   schema: Sequence[str] = ()) -> LogisticModel:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n, d = X.shape
    if y.size != n:
        raise ValueError("X and y differ in length")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("labels must be 0/1")
    if min((y == 0).sum(), (y == 1).sum()) < 2:
        raise ValueError("need at least two examples of each class")
    if lam < 0:
        raise ValueError("lambda must be >= 0")

    mean = X.mean(axis=0)
    std = X.std(axis=0)
    const = std <= 1e-12 * np.maximum(1.0, np.abs(mean))
    std = np.where(const, 1.0, std)
    Xs = (X - mean) / std
    Xs[:, const] = 0.0
    col_sq = (Xs ** 2).sum(axis=0)

    w = np.zeros(d)
    prior = y.mean()
    b = float(np.log(prior / (1.0 - prior)))
    z = np.full(n, b)

    def step(x_col, cur, penal, bound):
        """One proximal coordinate step; returns the new coordinate value."""
        p = sigmoid(z)
        g = float(x_col @ (p - y))
        h = float((p * (1.0 - p)) @ (x_col * x_col))
        start = _loss(z, y) + penal * abs(cur)
        if h > 1e-12:
            new = _soft(cur * h - g, penal) / h
            cand = _loss(z + (new - cur) * x_col, y) + penal * abs(new)
            if cand <= start:
                return new
        # majorising step with the 1/4 curvature bound always descends
        return _soft(cur * bound - g, penal) / bound

    converged = False
    it = 0
    ones = np.ones(n)
    for it in range(1, max_iters + 1):
        max_delta = 0.0
        for j in range(d):
            if const[j] or col_sq[j] == 0:
                continue
            new = step(Xs[:, j], w[j], lam, 0.25 * col_sq[j])
            delta = new - w[j]
            if delta:
                z += delta * Xs[:, j]
                w[j] = new
                max_delta = max(max_delta, abs(delta))
        new_b = step(ones, b, 0.0, 0.25 * n)
        if new_b != b:
            z += new_b - b
            max_delta = max(max_delta, abs(new_b - b))
            b = new_b
        if max_delta < tol:
            converged = True
            break
    return LogisticModel(w, b, float(lam), mean, std, tuple(schema), it, converged)
