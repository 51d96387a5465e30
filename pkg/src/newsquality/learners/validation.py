"""Seeded data splits and stratified k-fold cross-validation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..evaluation import classification_metrics

METRICS = ("precision", "recall", "accuracy", "f_measure")


def train_test_split(n: int, train_fraction: float = 0.7, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle, first ``round(train_fraction * n)`` rows train."""
    perm = np.random.default_rng(seed).permutation(n)
    k = int(round(train_fraction * n))
    return np.sort(perm[:k]), np.sort(perm[k:])


def fold_assignment(y: Sequence, folds: int = 5, seed: int = 0) -> np.ndarray:
    """Stratified fold id per row.

    Rows of each class are shuffled, the classes are laid end to end and fold
    ids are dealt round-robin, so every fold gets a near-equal share of each
    class and fold sizes differ by at most one.
    """
    y = np.asarray(y)
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if folds > y.size:
        raise ValueError("more folds than rows")
    rng = np.random.default_rng(seed)
    order = np.concatenate([rng.permutation(np.flatnonzero(y == c)) for c in np.unique(y)])
    out = np.empty(y.size, dtype=int)
    out[order] = np.arange(y.size) % folds
    return out


@dataclass
class CVReport:
    per_fold: list[dict]
    mean: dict
    assignment: np.ndarray


def cross_validate(X, y, trainer: Callable, folds: int = 5, seed: int = 0,
                   assignment: Sequence[int] | None = None, positive: int = 1) -> CVReport:
    """Train on k-1 folds, score the held-out fold, average the metrics.

    ``trainer(X, y)`` must return an object with ``predict(X) -> labels``.
    A precomputed ``assignment`` overrides the stratified one.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y)
    fold_of = (np.asarray(assignment, dtype=int) if assignment is not None
               else fold_assignment(y, folds, seed))
    per_fold = []
    for f in sorted(set(fold_of.tolist())):
        test = fold_of == f
        model = trainer(X[~test], y[~test])
        m = classification_metrics(model.predict(X[test]), y[test], positive=positive)
        per_fold.append({**m.as_dict(), "n_test": int(test.sum())})
    mean = {k: float(np.mean([r[k] for r in per_fold])) for k in METRICS}
    return CVReport(per_fold, mean, fold_of)
