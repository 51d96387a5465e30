"""Visual SPAM filter: metadata rules, synthetic-image classifier, captioned images."""
from __future__ import annotations

import enum
import json
import shlex
import subprocess
import tempfile
import threading
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Protocol

import numpy as np
from PIL import Image

from .features import SYNTHETIC_NAMES, SyntheticFeatures
from .imaging import median_blur, to_gray
from .learners.logistic import LogisticModel, SchemaError

MAX_HASHTAGS = 3
MAX_MENTIONS = 3
MAX_URLS = 2
MIN_SIDE = 200
SYNTHETIC_THRESHOLD = 0.5
CAPTION_MIN_CHARS = 20
MEDIAN_KERNEL = 3


class Decision(str, enum.Enum):
    KEEP = "keep"
    DROP = "drop"


class Reason(str, enum.Enum):
    COARSE_HASHTAGS = "coarse_hashtags"
    COARSE_MENTIONS = "coarse_mentions"
    COARSE_URLS = "coarse_urls"
    COARSE_SIZE = "coarse_size"
    SYNTHETIC = "synthetic"
    CAPTIONED = "captioned"
    NONE = "none"


@dataclass(frozen=True)
class FilterVerdict:
    image_id: str
    decision: Decision
    reason: Reason = Reason.NONE
    score: float | None = None

    def __post_init__(self):
        if (self.decision is Decision.DROP) != (self.reason is not Reason.NONE):
            raise ValueError("decision is drop exactly when a reason is given")

    @property
    def kept(self) -> bool:
        return self.decision is Decision.KEEP

    def to_json(self) -> str:
        return json.dumps({"image_id": self.image_id, "decision": self.decision.value,
                           "reason": self.reason.value, "score": self.score}, sort_keys=True)


def coarse_reason(hashtags: int, mentions: int, urls: int, width: int, height: int,
                  max_hashtags: int = MAX_HASHTAGS, max_mentions: int = MAX_MENTIONS,
                  max_urls: int = MAX_URLS, min_side: int = MIN_SIDE) -> Reason:
    if hashtags > max_hashtags:
        return Reason.COARSE_HASHTAGS
    if mentions > max_mentions:
        return Reason.COARSE_MENTIONS
    if urls > max_urls:
        return Reason.COARSE_URLS
    if width < min_side or height < min_side:
        return Reason.COARSE_SIZE
    return Reason.NONE


def coarse_filter(post, image, **limits) -> FilterVerdict:
    reason = coarse_reason(post.hashtag_count, post.mention_count, post.url_count,
                           image.width, image.height, **limits)
    decision = Decision.KEEP if reason is Reason.NONE else Decision.DROP
    return FilterVerdict(image.image_id, decision, reason)


def classify_synthetic(features: SyntheticFeatures, model: LogisticModel,
                       threshold: float = SYNTHETIC_THRESHOLD) -> tuple[float, Decision]:
    """Probability that the image is synthetic, and the resulting decision.

    Exactly ``threshold`` keeps the image.
    """
    if model.schema and tuple(model.schema) != SYNTHETIC_NAMES:
        raise SchemaError("model was not trained on the synthetic feature schema")
    prob = float(model.predict_proba(features.to_vector().as_array())[0])
    return prob, Decision.DROP if prob > threshold else Decision.KEEP


# -- OCR ---------------------------------------------------------------------

class OcrUnavailable(RuntimeError):
    pass


class OcrEngine(Protocol):
    def read_text(self, image_id: str, gray: np.ndarray) -> str: ...


class StubOcr:
    """Deterministic OCR stand-in: fixed text, or a per-image mapping."""

    def __init__(self, text: str | Mapping[str, str] = ""):
        self.text = text

    @classmethod
    def from_sidecar(cls, path: str | Path) -> "StubOcr":
        texts = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    row = json.loads(line)
                    texts[str(row["image_id"])] = str(row.get("text", ""))
        return cls(texts)

    def read_text(self, image_id: str, gray: np.ndarray) -> str:
        if isinstance(self.text, str):
            return self.text
        return self.text.get(image_id, "")


class CommandOcr:
    """Runs an external OCR program on a temporary PNG of the preprocessed image.

    ``command`` is a template with an ``{image}`` placeholder, for example
    ``"tesseract {image} stdout"``; recognised text is read from stdout.
    Calls are serialised through a lock.
    """

    def __init__(self, command: str, timeout: float = 30.0):
        if "{image}" not in command:
            raise ValueError("OCR command template needs an {image} placeholder")
        self.command = command
        self.timeout = timeout
        self._lock = threading.Lock()

    def read_text(self, image_id: str, gray: np.ndarray) -> str:
        with self._lock, tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "ocr.png"
            Image.fromarray(np.clip(np.rint(gray), 0, 255).astype(np.uint8), "L").save(path)
            argv = [a.replace("{image}", str(path)) for a in shlex.split(self.command)]
            try:
                proc = subprocess.run(argv, capture_output=True, text=True,
                                      timeout=self.timeout, check=False)
            except (OSError, subprocess.TimeoutExpired) as exc:
                raise OcrUnavailable(str(exc)) from exc
            if proc.returncode != 0:
                raise OcrUnavailable(f"OCR exited with status {proc.returncode}: {proc.stderr.strip()}")
            return proc.stdout


def text_length(text: str) -> int:
    return len("".join(text.split()))


def captioned_filter(image, ocr: OcrEngine | None, min_chars: int = CAPTION_MIN_CHARS,
                     kernel: int = MEDIAN_KERNEL) -> FilterVerdict:
    """Drop images whose median-blurred grayscale yields at least ``min_chars``
    non-whitespace characters of OCR text. OCR failures keep the image."""
    if ocr is None:
        warnings.warn("no OCR engine configured; captioned-image filter skipped", stacklevel=2)
        return FilterVerdict(image.image_id, Decision.KEEP)
    gray = median_blur(to_gray(image.pixels), kernel)
    try:
        text = ocr.read_text(image.image_id, gray)
    except OcrUnavailable as exc:
        warnings.warn(f"OCR unavailable for {image.image_id}, keeping it: {exc}", stacklevel=2)
        return FilterVerdict(image.image_id, Decision.KEEP)
    if text_length(text) >= min_chars:
        return FilterVerdict(image.image_id, Decision.DROP, Reason.CAPTIONED)
    return FilterVerdict(image.image_id, Decision.KEEP)


def write_verdict_log(verdicts, path: str | Path) -> Path:
    path = Path(path)
    path.write_text("".join(v.to_json() + "\n" for v in verdicts), encoding="utf-8")
    return path


__all__ = [
    "Decision", "Reason", "FilterVerdict", "coarse_filter", "coarse_reason",
    "classify_synthetic", "captioned_filter", "median_blur", "StubOcr", "CommandOcr",
    "OcrUnavailable", "write_verdict_log",
]
