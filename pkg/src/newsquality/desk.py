"""Generated desk-scale corpora with known ground truth.

* spam corpus: flat-colour / line-art "synthetic" images against noisy,
  textured "photographic" ones, all 240x180.
* ranking corpora: photo-like images whose news quality is planted in three
  independent bits (visual, concept, social). Votes grow with the number of
  informative bits that are set; only images with every informative bit set
  are relevant in the evaluation corpus.

Everything is a deterministic function of the seed.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from itertools import product
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .media import encode_png

SPAM_SIZE = (240, 180)

NEWS_CONCEPTS = ["stage", "event", "performance", "crowd", "performing arts",
                 "concert", "festival", "musician"]
OTHER_CONCEPTS = ["selfie", "product", "advertising", "font", "girl", "facial hair",
                  "smile", "fashion"]
SHARED_CONCEPTS = ["fun", "recreation", "entertainment", "night", "light"]
FAMILIES = ("visual", "concept", "social")


def _smooth_field(rng, h, w, cells_y, cells_x, channels=3) -> np.ndarray:
    small = rng.uniform(0, 255, size=(cells_y, cells_x, channels)).astype(np.float32)
    planes = [np.asarray(Image.fromarray(small[..., c], "F").resize((w, h), Image.BICUBIC))
              for c in range(channels)]
    return np.stack(planes, axis=2).astype(float)


def photo_image(rng, width=240, height=180, quality: float | None = None) -> np.ndarray:
    """Photo-like image: smooth colour fields, texture and sensor noise.

    ``quality`` in [0, 1] scales sharpness, contrast and saturation.
    """
    q = rng.uniform(0, 1) if quality is None else quality
    img = 0.6 * _smooth_field(rng, height, width, rng.integers(2, 5), rng.integers(2, 6))
    img += 0.4 * _smooth_field(rng, height, width, rng.integers(6, 14), rng.integers(8, 18))
    # a few soft-edged objects
    yy, xx = np.mgrid[0:height, 0:width]
    for _ in range(rng.integers(2, 6)):
        cy, cx = rng.uniform(0, height), rng.uniform(0, width)
        r = rng.uniform(0.08, 0.3) * min(width, height)
        blob = np.exp(-(((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * r * r)))
        img += blob[..., None] * rng.uniform(-90, 90, size=3)
    detail = 4 + 22 * q
    img += rng.normal(0, detail, size=(height, width, 1)) * rng.uniform(0.6, 1.0, size=3)
    if q < 0.5:
        blur = int(round(2 + 6 * (0.5 - q)))
        pil = [Image.fromarray(np.clip(img[..., c], 0, 255).astype(np.float32), "F") for c in range(3)]
        small = [p.resize((max(1, width // blur), max(1, height // blur)), Image.BILINEAR) for p in pil]
        img = np.stack([np.asarray(s.resize((width, height), Image.BILINEAR)) for s in small], 2).astype(float)
    gray = img.mean(axis=2, keepdims=True)
    sat = 0.35 + 1.1 * q
    contrast = 0.55 + 0.6 * q
    img = gray + sat * (img - gray)
    img = 128 + contrast * (img - 128)
    img += rng.normal(0, 1.5 + 2.5 * rng.uniform(), size=img.shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def _random_color(rng) -> tuple[int, int, int]:
    palette = rng.integers(0, 2)
    if palette == 0:  # saturated brand-like colours
        base = np.array([rng.choice([0, 255]) for _ in range(3)])
        base[rng.integers(0, 3)] = rng.integers(0, 256)
        return tuple(int(c) for c in base)
    return tuple(int(c) for c in rng.integers(0, 256, size=3))


def synthetic_image(rng, width=240, height=180) -> np.ndarray:
    """Flat-colour graphic: poster, logo, line art or banner."""
    kind = rng.integers(0, 4)
    bg = (255, 255, 255) if kind == 1 else _random_color(rng)
    im = Image.new("RGB", (width, height), bg)
    draw = ImageDraw.Draw(im)
    if kind == 3:  # banner bands
        y = 0
        while y < height:
            band = int(rng.integers(15, 60))
            draw.rectangle([0, y, width, y + band], fill=_random_color(rng))
            y += band
    for _ in range(rng.integers(2, 9)):
        shape = rng.integers(0, 4)
        x0, y0 = int(rng.integers(0, width - 20)), int(rng.integers(0, height - 20))
        x1 = int(min(width - 1, x0 + rng.integers(10, width // 2)))
        y1 = int(min(height - 1, y0 + rng.integers(10, height // 2)))
        col = (0, 0, 0) if kind == 1 else _random_color(rng)
        if shape == 0:
            draw.rectangle([x0, y0, x1, y1], fill=col)
        elif shape == 1:
            draw.ellipse([x0, y0, x1, y1], fill=col)
        elif shape == 2:
            draw.line([x0, y0, x1, y1], fill=col, width=int(rng.integers(1, 5)))
        else:
            draw.polygon([(x0, y1), ((x0 + x1) // 2, y0), (x1, y1)], fill=col)
    if rng.uniform() < 0.5:  # text-like block
        col = _random_color(rng)
        tx, ty = int(rng.integers(5, width // 3)), int(rng.integers(5, height - 30))
        for row in range(int(rng.integers(1, 4))):
            x = tx
            while x < width - 20:
                cw = int(rng.integers(3, 9))
                draw.rectangle([x, ty + 10 * row, x + cw, ty + 10 * row + 6], fill=col)
                x += cw + int(rng.integers(2, 5))
    return np.asarray(im, dtype=np.uint8).copy()


def make_spam_corpus(out_dir, n_each: int = 250, seed: int = 0) -> Path:
    """Write ``photo/*.png`` and ``synthetic/*.png`` under ``out_dir``."""
    out = Path(out_dir)
    rng = np.random.default_rng(seed)
    for label in ("photo", "synthetic"):
        (out / label).mkdir(parents=True, exist_ok=True)
    for i in range(n_each):
        (out / "photo" / f"p{i:04d}.png").write_bytes(encode_png(photo_image(rng, *SPAM_SIZE)))
        (out / "synthetic" / f"s{i:04d}.png").write_bytes(encode_png(synthetic_image(rng, *SPAM_SIZE)))
    return out


# -- ranking corpora ---------------------------------------------------------

@dataclass
class _Item:
    image_id: str
    pixels: np.ndarray
    bits: tuple[int, int, int]
    concepts: list[str]
    votes: int
    faces: int
    posts: list[dict]


def _votes(bits, informative, rng, noisy: bool) -> int:
    k = sum(b for b, fam in zip(bits, FAMILIES) if fam in informative)
    m = len(informative)
    if k == m:
        v = 7
    elif k == 0:
        v = 0
    else:
        v = 1 + int(round(3 * (k / m)))
    if noisy and rng.uniform() < 0.3:
        v += int(rng.choice([-1, 1]))
        if k == m:
            v = max(v, 6)
        elif k == 0:
            v = min(max(v, 0), 1)
        else:
            v = min(max(v, 1), 5)
    return int(min(max(v, 0), 7))


def _concepts(rng, c_bit: int) -> list[str]:
    pool = NEWS_CONCEPTS if c_bit else OTHER_CONCEPTS
    picked = list(rng.choice(pool, size=int(rng.integers(3, 6)), replace=False))
    picked += list(rng.choice(SHARED_CONCEPTS, size=int(rng.integers(1, 3)), replace=False))
    return [str(c) for c in picked]


def _social_posts(rng, s_bit: int, n_posts: int | None = None) -> list[dict]:
    n = n_posts if n_posts is not None else (int(rng.integers(2, 5)) if s_bit else 1)
    posts = []
    for _ in range(n):
        if s_bit:
            rt, fl = int(rng.integers(200, 2000)), int(rng.integers(5000, 100000))
        else:
            rt, fl = int(rng.integers(0, 20)), int(rng.integers(50, 1000))
        posts.append({"retweets": rt, "followers": fl,
                      "hashtags": int(rng.integers(0, 3)), "mentions": int(rng.integers(0, 3)),
                      "urls": int(rng.integers(0, 2))})
    return posts


def _candidate(rng, idx: str, bits, informative, noisy) -> _Item:
    v, c, s = bits
    w, h = int(rng.integers(300, 400)), int(rng.integers(220, 300))
    quality = rng.uniform(0.8, 1.0) if v else rng.uniform(0.0, 0.2)
    return _Item(f"{idx}.png", photo_image(rng, w, h, quality), tuple(bits),
                 _concepts(rng, c), _votes(bits, informative, rng, noisy),
                 int(rng.integers(0, 4)), _social_posts(rng, s))


def _write(items: list[_Item], out: Path, ocr_text: dict[str, str] | None = None) -> dict[str, Path]:
    img_dir = out / "images"
    img_dir.mkdir(parents=True, exist_ok=True)
    posts = []
    for it in items:
        (img_dir / it.image_id).write_bytes(encode_png(it.pixels))
        for p in it.posts:
            posts.append((p.get("order", len(posts)), it.image_id, p))
    posts.sort(key=lambda t: (t[0], t[1]))
    paths = {"posts": out / "posts.jsonl", "images": img_dir, "concepts": out / "concepts.jsonl",
             "labels": out / "labels.csv", "faces": out / "faces.jsonl", "ocr": out / "ocr.jsonl",
             "truth": out / "truth.json"}
    with open(paths["posts"], "w", encoding="utf-8") as fh:
        for n, (_, iid, p) in enumerate(posts):
            fh.write(json.dumps({
                "post_id": f"t{n:05d}", "text": p.get("text", "live from the venue"),
                "hashtags": p["hashtags"], "mentions": p["mentions"], "urls": p["urls"],
                "retweets": p["retweets"], "followers": p["followers"],
                "images": [iid], "timestamp": float(n),
            }, sort_keys=True) + "\n")
    with open(paths["concepts"], "w", encoding="utf-8") as fh:
        for it in items:
            fh.write(json.dumps({"image_id": it.image_id, "concepts": it.concepts}) + "\n")
    with open(paths["labels"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["image_id", "votes"])
        for it in items:
            w.writerow([it.image_id, it.votes])
    with open(paths["faces"], "w", encoding="utf-8") as fh:
        for it in items:
            fh.write(json.dumps({"image_id": it.image_id, "faces": it.faces}) + "\n")
    with open(paths["ocr"], "w", encoding="utf-8") as fh:
        for iid, text in sorted((ocr_text or {}).items()):
            fh.write(json.dumps({"image_id": iid, "text": text}) + "\n")
    truth = {it.image_id: {"bits": list(it.bits), "votes": it.votes} for it in items}
    paths["truth"].write_text(json.dumps(truth, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return paths


def make_training_corpus(out_dir, per_pattern: int = 30, seed: int = 1,
                         informative=FAMILIES) -> dict[str, Path]:
    """Labelled corpus: ``per_pattern`` images for each of the 8 bit patterns."""
    rng = np.random.default_rng(seed)
    items = []
    for k in range(per_pattern):
        for bits in product((0, 1), repeat=3):
            items.append(_candidate(rng, f"r{len(items):04d}", bits, informative, noisy=True))
    return _write(items, Path(out_dir))


def near_duplicate_variant(rng, pixels: np.ndarray, max_area: float = 0.10,
                           max_contrast: float = 0.20) -> np.ndarray:
    """Crop away up to ``max_area`` of the image area at a random position and
    scale contrast about the mean by up to ``max_contrast``."""
    h, w, _ = pixels.shape
    keep = np.sqrt(1.0 - rng.uniform(0.0, max_area))
    kh, kw = max(1, int(np.ceil(h * keep))), max(1, int(np.ceil(w * keep)))
    top, left = int(rng.integers(0, h - kh + 1)), int(rng.integers(0, w - kw + 1))
    crop = pixels[top:top + kh, left:left + kw].astype(float)
    gain = 1.0 + rng.uniform(-max_contrast, max_contrast)
    out = crop.mean() + gain * (crop - crop.mean())
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


# reposts in the evaluation stream trim a thin border
REPOST_CROP = 0.02

EVAL_PATTERNS = ([(1, 1, 1)] * 12
                 + [(1, 1, 0)] * 6 + [(1, 0, 1)] * 6 + [(0, 1, 1)] * 6
                 + [(1, 0, 0)] * 4 + [(0, 1, 0)] * 4 + [(0, 0, 1)] * 4
                 + [(0, 0, 0)] * 2)


def make_eval_corpus(out_dir, seed: int = 2, informative=FAMILIES) -> dict[str, Path]:
    """60-image stream with planted news-quality photos and every kind of SPAM.

    44 candidate photos (12 relevant), 4 near-duplicate reposts, 5 synthetic
    graphics, 3 captioned memes, 2 thumbnails and 2 hashtag-spam posts.
    """
    rng = np.random.default_rng(seed)
    items: list[_Item] = []
    for i, bits in enumerate(EVAL_PATTERNS):
        items.append(_candidate(rng, f"e{i:03d}", bits, informative, noisy=False))
    for it in items:
        for p in it.posts:
            p["order"] = int(rng.integers(0, 1000))

    social = [it for it in items if it.bits[2] == 1]
    for k in range(4):
        src = social[k * 5 % len(social)]
        posts = _social_posts(rng, 1, 1)
        posts[0]["order"] = 2000 + k  # always after the original
        items.append(_Item(f"n{k:03d}.png", near_duplicate_variant(rng, src.pixels, REPOST_CROP), src.bits,
                           list(src.concepts), 0, src.faces, posts))

    def spam(prefix, k, pixels, **post_kw):
        posts = _social_posts(rng, 0, 1)
        posts[0].update(post_kw)
        posts[0]["order"] = int(rng.integers(0, 1000))
        return _Item(f"{prefix}{k:03d}.png", pixels, (0, 0, 0),
                     _concepts(rng, 0), 0, 0, posts)

    for k in range(5):
        items.append(spam("s", k, synthetic_image(rng, 320, 240)))
    ocr = {}
    for k in range(3):
        it = spam("m", k, photo_image(rng, 320, 240, 0.9))
        ocr[it.image_id] = "WHEN YOU REALISE THE CONCERT STARTED AN HOUR AGO AND YOU ARE STILL IN THE QUEUE"
        items.append(it)
    for k in range(2):
        items.append(spam("x", k, photo_image(rng, 150, 150, 0.9)))
    for k in range(2):
        items.append(spam("h", k, photo_image(rng, 320, 240, 0.9), hashtags=5))
    return _write(items, Path(out_dir), ocr)


DESK_CONFIG = """\
# paths are relative to this file
spam_dir = spam
train_posts = train/posts.jsonl
train_images = train/images
train_concepts = train/concepts.jsonl
train_labels = train/labels.csv
train_faces = train/faces.jsonl
posts = stream/posts.jsonl
images = stream/images
concepts = stream/concepts.jsonl
labels = stream/labels.csv
faces = stream/faces.jsonl
ocr_sidecar = stream/ocr.jsonl
models_dir = models
out_dir = out
seed = {seed}
"""


def make_desk(out_dir, seed: int = 0, spam_per_class: int = 250, per_pattern: int = 30,
              informative=FAMILIES) -> Path:
    """All three desk corpora plus ``pipeline.cfg``; returns the config path."""
    out = Path(out_dir)
    make_spam_corpus(out / "spam", spam_per_class, seed=seed)
    make_training_corpus(out / "train", per_pattern, seed=seed + 1, informative=informative)
    make_eval_corpus(out / "stream", seed=seed + 2, informative=informative)
    cfg = out / "pipeline.cfg"
    cfg.write_text(DESK_CONFIG.format(seed=seed), encoding="utf-8")
    return cfg
