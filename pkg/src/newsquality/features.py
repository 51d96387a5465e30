"""Feature assembly: aesthetic (visual) features, synthetic-detector features,
face-count plumbing and the two threshold searches used to tune the
synthetic detector.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import astuple, dataclass
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import numpy as np

from . import imaging as im
from .media import FeatureVector


DOMINANT_THRESHOLD = 600
CORNER_FRACTION = 0.1801
MIN_LINE_POINTS = 20

ORIENTATIONS = ("square", "portrait", "landscape")

VISUAL_NAMES = (
    "edges_v", "edges_h", "edges_d", "rule_of_thirds", "focus", "entropy", "faces",
    "luminance", "simplicity", "area", "aspect",
    "orientation_square", "orientation_portrait", "orientation_landscape",
    "colorfulness",
)
SYNTHETIC_NAMES = (
    "f1", "f2", "f2_over_f1", "c1_ratio", "dominant_colors", "h_lines", "v_lines",
    "corners", "luminance", "edge_v", "edge_h", "edge_d45", "edge_d135",
)


# -- faces -------------------------------------------------------------------

class FaceDetector(Protocol):
    def count(self, image_id: str, pixels: np.ndarray) -> int: ...


class SidecarFaceDetector:
    """Face counts read from a JSONL sidecar ``{"image_id": ..., "faces": n}``."""

    def __init__(self, counts: Mapping[str, int] | None = None):
        self.counts = dict(counts or {})
        for iid, n in self.counts.items():
            if int(n) < 0:
                raise ValueError(f"negative face count for {iid}: {n}")

    @classmethod
    def from_file(cls, path: str | Path) -> "SidecarFaceDetector":
        counts = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    row = json.loads(line)
                    counts[str(row["image_id"])] = int(row["faces"])
        return cls(counts)

    def count(self, image_id: str, pixels: np.ndarray) -> int:
        return int(self.counts.get(image_id, 0))


def face_count(image_id: str, pixels, detector: FaceDetector | None) -> int:
    if detector is None:
        return 0
    try:
        n = int(detector.count(image_id, pixels))
    except Exception as exc:  # detector backends are third-party code
        warnings.warn(f"face detector failed on {image_id}: {exc}", stacklevel=2)
        return 0
    if n < 0:
        raise ValueError(f"face detector returned negative count for {image_id}")
    return n


# -- visual (aesthetic) features ---------------------------------------------

def orientation_of(width: int, height: int) -> str:
    aspect = height / width
    if abs(aspect - 1.0) <= 0.01:
        return "square"
    return "portrait" if aspect > 1.0 else "landscape"


@dataclass(frozen=True)
class VisualFeatures:
    edges_v: int
    edges_h: int
    edges_d: int
    rule_of_thirds: float
    focus: float
    entropy: float
    faces: int
    luminance: float
    simplicity: float
    area: int
    aspect: float
    orientation: str
    colorfulness: float

    def to_vector(self) -> FeatureVector:
        onehot = [1.0 if self.orientation == o else 0.0 for o in ORIENTATIONS]
        values = [self.edges_v, self.edges_h, self.edges_d, self.rule_of_thirds,
                  self.focus, self.entropy, self.faces, self.luminance,
                  self.simplicity, self.area, self.aspect, *onehot, self.colorfulness]
        return FeatureVector(VISUAL_NAMES, tuple(float(v) for v in values), "visual")


def visual_features(pixels, image_id: str = "", detector: FaceDetector | None = None) -> VisualFeatures:
    """Aesthetic features at the image's own resolution."""
    rgb = im.as_rgb(pixels)
    gray = im.to_gray(rgb)
    h, w = gray.shape
    v, hz, d45, d135 = im.edge_histogram(gray)
    return VisualFeatures(
        edges_v=v, edges_h=hz, edges_d=d45 + d135,
        rule_of_thirds=im.rule_of_thirds(gray),
        focus=im.focus(gray),
        entropy=im.entropy(gray),
        faces=face_count(image_id, rgb, detector),
        luminance=im.luminance(gray),
        simplicity=im.simplicity(rgb),
        area=w * h,
        aspect=h / w,
        orientation=orientation_of(w, h),
        colorfulness=im.colorfulness(rgb),
    )


# -- synthetic-detector features ---------------------------------------------

@dataclass(frozen=True)
class SyntheticFeatures:
    f1: float
    f2: float
    f2_over_f1: float
    c1_ratio: float
    dominant_colors: int
    h_lines: int
    v_lines: int
    corners: int
    luminance: float
    edge_v: int
    edge_h: int
    edge_d45: int
    edge_d135: int

    @property
    def edge_hist(self) -> tuple[int, int, int, int]:
        return (self.edge_v, self.edge_h, self.edge_d45, self.edge_d135)

    def to_vector(self) -> FeatureVector:
        return FeatureVector(SYNTHETIC_NAMES, tuple(float(x) for x in astuple(self)), "synthetic")


def synthetic_features(pixels, dominant_threshold: int = DOMINANT_THRESHOLD,
                       corner_fraction: float = CORNER_FRACTION,
                       min_line_points: int = MIN_LINE_POINTS) -> SyntheticFeatures:
    """Synthetic-vs-photo features, computed on the 240x180 normalised image."""
    rgb = im.normalize(pixels)
    gray = im.to_gray(rgb)
    f1, f2, ratio = im.color_transitions(rgb)
    h_lines, v_lines = im.hough_hv_lines(gray, min_line_points)
    ev, eh, e45, e135 = im.edge_histogram(gray)
    return SyntheticFeatures(
        f1=f1, f2=f2, f2_over_f1=ratio,
        c1_ratio=im.most_common_color_ratio(rgb),
        dominant_colors=im.dominant_colors(rgb, dominant_threshold),
        h_lines=h_lines, v_lines=v_lines,
        corners=im.harris_corner_count(gray, corner_fraction),
        luminance=im.luminance(gray),
        edge_v=ev, edge_h=eh, edge_d45=e45, edge_d135=e135,
    )


# -- threshold searches ------------------------------------------------------

def dominant_norm_delta(photo_counts: Sequence[float], synth_counts: Sequence[float]) -> float:
    """Normalised separation of dominant-colour counts between the classes.

    Standard deviations are population (ddof=0). A zero class mean makes the
    score infinite.
    """
    p = np.asarray(photo_counts, dtype=float)
    s = np.asarray(synth_counts, dtype=float)
    mu_p, mu_s = p.mean(), s.mean()
    if mu_p == 0 or mu_s == 0:
        return math.inf
    delta = (mu_p - p.std()) - (mu_s + s.std())
    return abs(delta) / mu_p + abs(delta) / mu_s


def tune_dominant_threshold(photos: Sequence, synths: Sequence,
                            candidate_thresholds: Sequence[int]) -> int:
    """Candidate bin threshold with the smallest normalised separation score."""
    if not photos or not synths:
        raise ValueError("both populations must be non-empty")
    if not candidate_thresholds:
        raise ValueError("no candidate thresholds")
    ph = [im.hsv_histogram(im.normalize(p)) for p in photos]
    sy = [im.hsv_histogram(im.normalize(s)) for s in synths]
    best, best_score = None, math.inf
    for t in sorted(candidate_thresholds):
        score = dominant_norm_delta([(h > t).sum() for h in ph], [(h > t).sum() for h in sy])
        if score < best_score:
            best, best_score = t, score
    if best is None:
        raise ValueError("every candidate threshold leaves a class with zero dominant colours")
    return int(best)


def tune_corner_threshold(photos: Sequence, synths: Sequence,
                          candidate_fractions: Sequence[float]) -> float:
    """Fraction minimising mean(photo corners) / mean(synthetic corners)."""
    if not photos or not synths:
        raise ValueError("both populations must be non-empty")
    if not candidate_fractions:
        raise ValueError("no candidate fractions")
    fracs = sorted(candidate_fractions)
    pc = np.array([im.harris_corner_counts(im.to_gray(im.normalize(p)), fracs) for p in photos], float)
    sc = np.array([im.harris_corner_counts(im.to_gray(im.normalize(s)), fracs) for s in synths], float)
    best, best_ratio = None, math.inf
    for j, f in enumerate(fracs):
        ms = sc[:, j].mean()
        if ms == 0:
            continue
        ratio = pc[:, j].mean() / ms
        if ratio < best_ratio:
            best, best_ratio = f, ratio
    if best is None:
        raise ValueError("no synthetic corners at any candidate fraction")
    return float(best)


def write_feature_dump(rows: Sequence[tuple[str, FeatureVector]], path: str | Path) -> Path:
    """CSV with ``image_id`` plus one column per feature, schema in the header."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if not rows:
            w.writerow(["image_id"])
            return path
        names = rows[0][1].names
        w.writerow(["image_id", *names])
        for iid, fv in rows:
            if fv.names != names:
                raise ValueError(f"feature schema mismatch for {iid}")
            w.writerow([iid, *(repr(float(v)) for v in fv.values)])
    return path
