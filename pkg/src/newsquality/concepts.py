"""Concept probability tables and per-image concept scores."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .media import FeatureVector

CONCEPT_NAMES = ("sum_py", "sum_pn")


def clean_concepts(concepts: Iterable[str]) -> set[str]:
    """Case-fold, trim and deduplicate provider concept strings."""
    out = set()
    for c in concepts:
        c = " ".join(str(c).split()).casefold()
        if c:
            out.add(c)
    return out


def _document_frequencies(images: Mapping[str, Iterable[str]]) -> dict[str, float]:
    df = Counter()
    for concepts in images.values():
        df.update(clean_concepts(concepts))
    n = len(images)
    # concepts seen in a single image are dropped
    return {c: k / n for c, k in sorted(df.items()) if k >= 2}


@dataclass(frozen=True)
class ConceptProbabilityTable:
    py: dict[str, float] = field(default_factory=dict)
    pn: dict[str, float] = field(default_factory=dict)
    y_size: int = 0
    n_size: int = 0

    def to_json(self) -> str:
        return json.dumps({"y_size": self.y_size, "n_size": self.n_size,
                           "py": self.py, "pn": self.pn}, sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "ConceptProbabilityTable":
        d = json.loads(text)
        return cls({k: float(v) for k, v in d["py"].items()},
                   {k: float(v) for k, v in d["pn"].items()},
                   int(d["y_size"]), int(d["n_size"]))

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.to_json() + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "ConceptProbabilityTable":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def build_tables(y_images: Mapping[str, Iterable[str]],
                 n_images: Mapping[str, Iterable[str]]) -> ConceptProbabilityTable:
    """Per-concept image frequency within the news-quality (Y) and
    non-news-quality (N) populations."""
    if not y_images or not n_images:
        raise ValueError("both the Y and N image sets must be non-empty")
    return ConceptProbabilityTable(_document_frequencies(y_images),
                                   _document_frequencies(n_images),
                                   len(y_images), len(n_images))


@dataclass(frozen=True)
class ConceptScore:
    sum_py: float
    sum_pn: float

    def to_vector(self) -> FeatureVector:
        return FeatureVector(CONCEPT_NAMES, (self.sum_py, self.sum_pn), "concept")


def score(concepts: Iterable[str], table: ConceptProbabilityTable) -> ConceptScore:
    cs = sorted(clean_concepts(concepts))
    return ConceptScore(float(sum(table.py.get(c, 0.0) for c in cs)),
                        float(sum(table.pn.get(c, 0.0) for c in cs)))
