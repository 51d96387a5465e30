"""Core domain types and corpus ingestion.

A corpus is three sidecar-style files plus an image directory:

* posts JSONL: ``post_id, text, hashtags, mentions, urls, retweets,
  followers, images`` (relative image paths), optional ``timestamp``
* concepts JSONL: ``{"image_id": ..., "concepts": [...]}``
* labels CSV: header ``image_id,votes``

Image ids are the relative paths used in the posts file, so two posts that
reference the same file share one :class:`ImageRecord`.
"""
from __future__ import annotations

import csv
import enum
import io
import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath
from typing import Iterable, Mapping, Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from .dedup import md5_hex, phash64
from .imaging import normalize, to_gray

log = logging.getLogger(__name__)

N_ANNOTATORS = 7


class CorpusError(ValueError):
    """Malformed or inconsistent input data."""


class BinaryLabel(enum.IntEnum):
    NOT_NEWS_QUALITY = 0
    NEWS_QUALITY = 1


def binarize_labels(votes: int) -> BinaryLabel | None:
    """Map a 7-annotator yes-vote count to a binary class.

    Only images where at least 71% of annotators agree get a class, which with
    seven voters means six or seven on the same side.
    """
    if isinstance(votes, bool) or int(votes) != votes or not 0 <= votes <= N_ANNOTATORS:
        raise ValueError(f"votes must be an integer in [0, {N_ANNOTATORS}], got {votes!r}")
    if votes >= 6:
        return BinaryLabel.NEWS_QUALITY
    if votes <= 1:
        return BinaryLabel.NOT_NEWS_QUALITY
    return None


@dataclass(frozen=True)
class QualityLabel:
    votes: int
    binary: BinaryLabel | None = None

    @classmethod
    def from_votes(cls, votes: int) -> "QualityLabel":
        return cls(int(votes), binarize_labels(votes))


@dataclass(frozen=True)
class SocialPost:
    post_id: str
    text: str = ""
    hashtag_count: int = 0
    mention_count: int = 0
    url_count: int = 0
    retweet_count: int = 0
    author_follower_count: int = 0
    image_ids: tuple[str, ...] = ()
    # absent in the input file -> line order, so "earliest" is still defined
    timestamp: float = 0.0

    def __post_init__(self):
        for name in ("hashtag_count", "mention_count", "url_count",
                     "retweet_count", "author_follower_count"):
            if getattr(self, name) < 0:
                raise CorpusError(f"post {self.post_id}: {name} must be >= 0")


@dataclass(frozen=True, eq=False)
class ImageRecord:
    image_id: str
    pixels: np.ndarray  # (height, width, 3) uint8
    md5_hex: str
    phash64: int
    source_post_ids: tuple[str, ...] = ()
    data: bytes = b""  # encoded file bytes, the MD5 input

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @classmethod
    def from_bytes(cls, image_id: str, data: bytes,
                   source_post_ids: Sequence[str] = ()) -> "ImageRecord":
        pixels = decode_image(data)
        return cls(image_id, pixels, md5_hex(data), phash64(to_gray(normalize(pixels))),
                   tuple(source_post_ids), data)

    @classmethod
    def from_array(cls, image_id: str, pixels: np.ndarray,
                   source_post_ids: Sequence[str] = ()) -> "ImageRecord":
        """Build a record for an in-memory image by encoding it as PNG."""
        return cls.from_bytes(image_id, encode_png(pixels), source_post_ids)

    def with_posts(self, post_ids: Sequence[str]) -> "ImageRecord":
        return ImageRecord(self.image_id, self.pixels, self.md5_hex, self.phash64,
                           tuple(post_ids), self.data)


def decode_image(data: bytes) -> np.ndarray:
    """Decode PNG/JPEG bytes to 8-bit RGB; alpha is composited over white."""
    with Image.open(io.BytesIO(data)) as im:
        im.load()
        has_alpha = im.mode in ("RGBA", "LA", "PA") or (
            im.mode == "P" and "transparency" in im.info)
        if has_alpha:
            rgba = im.convert("RGBA")
            bg = Image.new("RGBA", rgba.size, (255, 255, 255, 255))
            im = Image.alpha_composite(bg, rgba)
        arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return np.ascontiguousarray(arr)


def encode_png(pixels: np.ndarray) -> bytes:
    pixels = np.asarray(pixels)
    if pixels.ndim != 3 or pixels.shape[2] != 3 or pixels.dtype != np.uint8:
        raise ValueError("expected an (h, w, 3) uint8 array")
    buf = io.BytesIO()
    Image.fromarray(pixels, "RGB").save(buf, format="PNG", optimize=False)
    return buf.getvalue()


@dataclass(frozen=True)
class FeatureVector:
    """Named, ordered numeric features for one image."""

    names: tuple[str, ...]
    values: tuple[float, ...]
    schema: str = ""

    def __post_init__(self):
        if len(self.names) != len(self.values):
            raise ValueError("names and values differ in length")
        if len(set(self.names)) != len(self.names):
            raise ValueError("feature names must be unique")
        bad = [n for n, v in zip(self.names, self.values) if not math.isfinite(v)]
        if bad:
            raise ValueError(f"non-finite feature values: {bad}")

    def __getitem__(self, name: str) -> float:
        return self.values[self.names.index(name)]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def select(self, names: Sequence[str], schema: str = "") -> "FeatureVector":
        return FeatureVector(tuple(names), tuple(self[n] for n in names), schema or self.schema)

    @classmethod
    def concat(cls, parts: Iterable["FeatureVector"], schema: str) -> "FeatureVector":
        names: list[str] = []
        values: list[float] = []
        for p in parts:
            names.extend(p.names)
            values.extend(p.values)
        return cls(tuple(names), tuple(values), schema)


@dataclass
class Corpus:
    posts: dict[str, SocialPost] = field(default_factory=dict)
    images: dict[str, ImageRecord] = field(default_factory=dict)
    labels: dict[str, QualityLabel] = field(default_factory=dict)
    concepts: dict[str, list[str]] = field(default_factory=dict)
    skipped_images: int = 0

    def post_times(self) -> dict[str, float]:
        return {pid: p.timestamp for pid, p in self.posts.items()}

    def posts_of(self, image_id: str) -> list[SocialPost]:
        return [self.posts[p] for p in self.images[image_id].source_post_ids]


def _normalize_image_id(path: str) -> str:
    p = PurePosixPath(str(path).replace("\\", "/"))
    if p.is_absolute() or ".." in p.parts:
        raise CorpusError(f"image path must be relative and inside the image dir: {path}")
    return p.as_posix()


def _read_jsonl(path: Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
    return rows


def _parse_post(row: Mapping, index: int) -> SocialPost:
    try:
        return SocialPost(
            post_id=str(row["post_id"]),
            text=str(row.get("text", "")),
            hashtag_count=int(row.get("hashtags", 0)),
            mention_count=int(row.get("mentions", 0)),
            url_count=int(row.get("urls", 0)),
            retweet_count=int(row.get("retweets", 0)),
            author_follower_count=int(row.get("followers", 0)),
            image_ids=tuple(_normalize_image_id(p) for p in row.get("images", [])),
            timestamp=float(row.get("timestamp", index)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, CorpusError):
            raise
        raise CorpusError(f"post line {index + 1}: {exc}") from None


def load_concepts(path: str | Path) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    for row in _read_jsonl(Path(path)):
        out[_normalize_image_id(row["image_id"])] = [str(c) for c in row.get("concepts", [])]
    return out


def load_labels(path: str | Path) -> dict[str, QualityLabel]:
    out: dict[str, QualityLabel] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"image_id", "votes"} <= set(reader.fieldnames):
            raise CorpusError(f"{path}: header row 'image_id,votes' required")
        for row in reader:
            try:
                out[_normalize_image_id(row["image_id"])] = QualityLabel.from_votes(int(row["votes"]))
            except ValueError as exc:
                raise CorpusError(f"{path}: {exc}") from None
    return out


def load_corpus(posts_path: str | Path, images_dir: str | Path,
                concepts_path: str | Path | None = None,
                labels_path: str | Path | None = None) -> Corpus:
    """Read posts, decode every referenced image once, and cross-link them."""
    images_dir = Path(images_dir)
    posts = [_parse_post(row, i) for i, row in enumerate(_read_jsonl(Path(posts_path)))]

    seen: set[str] = set()
    for p in posts:
        if p.post_id in seen:
            raise CorpusError(f"duplicate post_id {p.post_id}")
        seen.add(p.post_id)

    missing = sorted({p.post_id for p in posts
                      for iid in p.image_ids if not (images_dir / iid).is_file()})
    if missing:
        raise CorpusError(f"unresolvable image references in posts: {', '.join(missing)}")

    refs: dict[str, list[str]] = {}
    for p in posts:
        for iid in p.image_ids:
            refs.setdefault(iid, [])
            if p.post_id not in refs[iid]:
                refs[iid].append(p.post_id)

    images: dict[str, ImageRecord] = {}
    skipped = 0
    for iid in sorted(refs):
        data = (images_dir / iid).read_bytes()
        try:
            images[iid] = ImageRecord.from_bytes(iid, data, refs[iid])
        except (UnidentifiedImageError, OSError, ValueError) as exc:
            skipped += 1
            log.debug("skipping %s: %s", iid, exc)
    if skipped:
        warnings.warn(f"{skipped} undecodable image(s) skipped", stacklevel=2)

    post_map = {p.post_id: SocialPost(**{**p.__dict__,
                                         "image_ids": tuple(i for i in p.image_ids if i in images)})
                for p in posts}

    corpus = Corpus(posts=post_map, images=images, skipped_images=skipped)
    if concepts_path is not None:
        corpus.concepts = {k: v for k, v in load_concepts(concepts_path).items() if k in images}
    if labels_path is not None:
        corpus.labels = {k: v for k, v in load_labels(labels_path).items() if k in images}
    return corpus


def save_corpus(corpus: Corpus, out_dir: str | Path) -> dict[str, Path]:
    """Write a corpus in the same layout :func:`load_corpus` reads.

    Image files are written from their original encoded bytes, so hashes
    survive a round trip.
    """
    out = Path(out_dir)
    img_dir = out / "images"
    img_dir.mkdir(parents=True, exist_ok=True)
    for rec in corpus.images.values():
        target = img_dir / rec.image_id
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(rec.data)

    paths = {"posts": out / "posts.jsonl", "images": img_dir,
             "concepts": out / "concepts.jsonl", "labels": out / "labels.csv"}
    with open(paths["posts"], "w", encoding="utf-8") as fh:
        for p in corpus.posts.values():
            fh.write(json.dumps({
                "post_id": p.post_id, "text": p.text, "hashtags": p.hashtag_count,
                "mentions": p.mention_count, "urls": p.url_count,
                "retweets": p.retweet_count, "followers": p.author_follower_count,
                "images": list(p.image_ids), "timestamp": p.timestamp,
            }) + "\n")
    with open(paths["concepts"], "w", encoding="utf-8") as fh:
        for iid in sorted(corpus.concepts):
            fh.write(json.dumps({"image_id": iid, "concepts": corpus.concepts[iid]}) + "\n")
    with open(paths["labels"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["image_id", "votes"])
        for iid in sorted(corpus.labels):
            w.writerow([iid, corpus.labels[iid].votes])
    return paths
