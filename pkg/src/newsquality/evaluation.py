"""Retrieval and classification metrics.

Rankings are lists of booleans (or 0/1) in rank order, rank 1 first, paired
with the number of relevant items in the whole judged pool.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class RankedJudgments:
    items: tuple[tuple[str, bool], ...]
    total_relevant: int

    def __post_init__(self):
        if self.total_relevant < sum(1 for _, r in self.items if r):
            raise ValueError("total_relevant is smaller than the relevant items listed")

    @classmethod
    def from_flags(cls, flags: Sequence[bool], total_relevant: int | None = None,
                   ids: Sequence[str] | None = None) -> "RankedJudgments":
        ids = ids if ids is not None else [str(i) for i in range(len(flags))]
        items = tuple((i, bool(f)) for i, f in zip(ids, flags))
        total = sum(1 for _, r in items if r) if total_relevant is None else total_relevant
        return cls(items, total)

    @property
    def flags(self) -> list[bool]:
        return [r for _, r in self.items]


def _flags(ranking) -> list[bool]:
    if isinstance(ranking, RankedJudgments):
        return ranking.flags
    return [bool(r) for r in ranking]


def _total(ranking, total_relevant: int | None) -> int:
    if total_relevant is not None:
        return total_relevant
    if isinstance(ranking, RankedJudgments):
        return ranking.total_relevant
    return sum(_flags(ranking))


def precision_at_k(ranking, k: int) -> float:
    """Relevant share of the top k; a short list counts missing ranks as misses."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return sum(_flags(ranking)[:k]) / k


def dcg_at_k(flags: Sequence[bool], k: int) -> float:
    return sum(1.0 / math.log2(i + 2) for i, r in enumerate(flags[:k]) if r)


def ndcg_at_k(ranking, k: int, total_relevant: int | None = None) -> float:
    """Binary-gain nDCG with the log2(rank + 1) discount; 0 if nothing is relevant."""
    if k < 1:
        raise ValueError("k must be >= 1")
    flags = _flags(ranking)
    total = _total(ranking, total_relevant)
    ideal = dcg_at_k([True] * total, k)
    if ideal == 0:
        return 0.0
    return dcg_at_k(flags, k) / ideal


def average_precision(ranking, total_relevant: int | None = None) -> float:
    flags = _flags(ranking)
    total = _total(ranking, total_relevant)
    if total == 0:
        return 0.0
    hits, acc = 0, 0.0
    for rank, rel in enumerate(flags, 1):
        if rel:
            hits += 1
            acc += hits / rank
    return acc / total


def mean_average_precision(rankings: Sequence) -> float:
    if not rankings:
        return 0.0
    return float(np.mean([average_precision(r) for r in rankings]))


def precision_recall_curve(ranking, total_relevant: int | None = None) -> list[tuple[float, float]]:
    """(recall, precision) at each rank holding a relevant item."""
    flags = _flags(ranking)
    total = _total(ranking, total_relevant)
    points = []
    hits = 0
    for rank, rel in enumerate(flags, 1):
        if rel:
            hits += 1
            points.append((hits / total, hits / rank))
    return points


@dataclass(frozen=True)
class ClassificationMetrics:
    precision: float
    recall: float
    accuracy: float
    f_measure: float
    tp: int
    fp: int
    fn: int
    tn: int
    zero_division: bool = False

    def as_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall,
                "accuracy": self.accuracy, "f_measure": self.f_measure}


def classification_metrics(predictions: Sequence[int], labels: Sequence[int],
                           positive: int = 1) -> ClassificationMetrics:
    """Binary metrics; an empty denominator yields 0 and sets ``zero_division``."""
    pred = np.asarray(predictions) == positive
    true = np.asarray(labels) == positive
    if pred.shape != true.shape:
        raise ValueError("predictions and labels differ in length")
    tp = int(np.sum(pred & true))
    fp = int(np.sum(pred & ~true))
    fn = int(np.sum(~pred & true))
    tn = int(np.sum(~pred & ~true))
    flagged = False

    def div(a, b):
        nonlocal flagged
        if b == 0:
            flagged = True
            return 0.0
        return a / b

    precision = div(tp, tp + fp)
    recall = div(tp, tp + fn)
    accuracy = div(tp + tn, tp + fp + fn + tn)
    f = div(2 * precision * recall, precision + recall)
    return ClassificationMetrics(precision, recall, accuracy, f, tp, fp, fn, tn, flagged)


def ranking_report(model_name: str, ranking: RankedJudgments,
                   prec_ks: Sequence[int] = (10, 30), ndcg_ks: Sequence[int] = (10, 50)) -> dict:
    return {
        "model_name": model_name,
        "prec_at": {str(k): precision_at_k(ranking, k) for k in prec_ks},
        "ndcg_at": {str(k): ndcg_at_k(ranking, k) for k in ndcg_ks},
        "map": mean_average_precision([ranking]),
        "pr_curve": [[r, p] for r, p in precision_recall_curve(ranking)],
    }


def write_metrics_report(report: dict, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(report, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return path
