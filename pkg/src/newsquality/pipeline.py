"""End-to-end orchestration: training, filtering, dedup, ranking and reports.

Stages run in a fixed order (coarse -> synthetic -> captioned -> dedup ->
features -> rank).  Hashes and duplicate clusters are computed over the
whole ingested corpus so repost counts include copies that are later
removed; only the canonical member of each surviving near-duplicate group
is ranked.
"""
from __future__ import annotations

import csv
import dataclasses
import html
import json
import logging
import shutil
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import concepts as cpt
from .dedup import DuplicateClusters, cluster, write_cluster_report
from .evaluation import RankedJudgments, classification_metrics, ranking_report, write_metrics_report
from .features import (
    SYNTHETIC_NAMES, VISUAL_NAMES, SidecarFaceDetector, synthetic_features,
    tune_corner_threshold, tune_dominant_threshold, visual_features, write_feature_dump,
)
from .learners import (
    GbtModel, GbtParams, LogisticModel, cross_validate, feature_importance, rank,
    train_gbt, train_logistic, train_test_split,
)
from .media import BinaryLabel, Corpus, FeatureVector, decode_image, load_corpus
from .social import SOCIAL_NAMES, social_features
from .spamfilter import (
    CommandOcr, Decision, FilterVerdict, Reason, StubOcr, captioned_filter,
    classify_synthetic, coarse_reason, write_verdict_log,
)

log = logging.getLogger(__name__)

FULL_NAMES = VISUAL_NAMES + cpt.CONCEPT_NAMES + SOCIAL_NAMES
VARIANTS = {
    "V": VISUAL_NAMES,
    "C": cpt.CONCEPT_NAMES,
    "S": SOCIAL_NAMES,
    "F": FULL_NAMES,
}
RELEVANT_VOTES = 4  # majority of seven annotators
SPAM_MODEL = "spam_model.json"
CONCEPT_TABLE = "concepts.json"


class ModelMissing(FileNotFoundError):
    pass


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    # stream to filter and rank
    posts: str = ""
    images: str = ""
    concepts: str = ""
    labels: str = ""
    faces: str = ""
    ocr_sidecar: str = ""
    ocr_command: str = ""
    ocr_timeout: float = 30.0
    # labelled news-quality training corpus
    train_posts: str = ""
    train_images: str = ""
    train_concepts: str = ""
    train_labels: str = ""
    train_faces: str = ""
    # photo/ and synthetic/ image folders
    spam_dir: str = ""
    models_dir: str = "models"
    out_dir: str = "out"

    max_hashtags: int = 3
    max_mentions: int = 3
    max_urls: int = 2
    min_side: int = 200
    synthetic_threshold: float = 0.5
    dominant_threshold: int = 600
    corner_fraction: float = 0.1801
    min_line_points: int = 20
    tune_thresholds: bool = False
    near_dup_cutoff: int = 8
    caption_min_chars: int = 20
    median_kernel: int = 3

    logistic_lambda: float = 1.0
    logistic_max_iters: int = 1000
    logistic_tol: float = 1e-6
    cv_folds: int = 5

    gbt_rounds: int = 100
    gbt_learning_rate: float = 0.1
    gbt_max_depth: int = 4
    gbt_min_leaf: int = 2
    train_fraction: float = 0.7
    social_aggregate: str = "max"
    variant: str = "F"
    seed: int = 0
    workers: int = 1
    # simulated streaming: re-rank whenever the posts file changes
    watch: bool = False
    watch_interval: float = 2.0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        checks = [
            (self.max_hashtags >= 0 and self.max_mentions >= 0 and self.max_urls >= 0,
             "coarse limits must be >= 0"),
            (self.min_side >= 1, "min_side must be >= 1"),
            (0.0 <= self.synthetic_threshold <= 1.0, "synthetic_threshold must be in [0, 1]"),
            (self.dominant_threshold >= 0, "dominant_threshold must be >= 0"),
            (0.0 < self.corner_fraction <= 1.0, "corner_fraction must be in (0, 1]"),
            (0 <= self.near_dup_cutoff <= 64, "near_dup_cutoff must be in [0, 64]"),
            (self.caption_min_chars >= 1, "caption_min_chars must be >= 1"),
            (self.median_kernel >= 1 and self.median_kernel % 2 == 1, "median_kernel must be odd"),
            (self.logistic_lambda >= 0, "logistic_lambda must be >= 0"),
            (self.cv_folds >= 2, "cv_folds must be >= 2"),
            (self.gbt_rounds >= 1, "gbt_rounds must be >= 1"),
            (0 < self.gbt_learning_rate <= 1, "gbt_learning_rate must be in (0, 1]"),
            (self.gbt_max_depth >= 0 and self.gbt_min_leaf >= 1, "bad GBT tree limits"),
            (0 < self.train_fraction < 1, "train_fraction must be in (0, 1)"),
            (self.social_aggregate in ("max", "sum", "mean"), "social_aggregate must be max, sum or mean"),
            (self.variant in VARIANTS, f"variant must be one of {sorted(VARIANTS)}"),
            (self.workers >= 1, "workers must be >= 1"),
            (self.watch_interval > 0, "watch_interval must be > 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)

    @property
    def gbt_params(self) -> GbtParams:
        return GbtParams(self.gbt_rounds, self.gbt_learning_rate, self.gbt_max_depth, self.gbt_min_leaf)

    def path(self, name: str) -> Path | None:
        value = getattr(self, name)
        return Path(value) if value else None

    @property
    def models(self) -> Path:
        return Path(self.models_dir)

    @property
    def out(self) -> Path:
        return Path(self.out_dir)


_PATH_FIELDS = {"posts", "images", "concepts", "labels", "faces", "ocr_sidecar",
                "train_posts", "train_images", "train_concepts", "train_labels",
                "train_faces", "spam_dir", "models_dir", "out_dir"}


def _coerce(f: dataclasses.Field, raw: str):
    kind = type(f.default)
    if kind is bool:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{f.name}: expected a boolean, got {raw!r}")
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{f.name}: cannot parse {raw!r} as {kind.__name__}") from None


def parse_config_text(text: str, base_dir: Path | None = None, **overrides) -> PipelineConfig:
    """``key = value`` lines; ``#`` starts a comment. Relative paths are
    taken relative to ``base_dir``."""
    known = {f.name: f for f in dataclasses.fields(PipelineConfig)}
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        value = _coerce(known[key], raw)
        if key in _PATH_FIELDS and value and base_dir is not None and not Path(value).is_absolute():
            value = str(base_dir / value)
        values[key] = value
    values.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineConfig(**values)


def load_config(path: str | Path | None = None, **overrides) -> PipelineConfig:
    if path is None:
        return PipelineConfig(**{k: v for k, v in overrides.items() if v is not None})
    path = Path(path)
    return parse_config_text(path.read_text(encoding="utf-8"), path.parent.resolve(), **overrides)


def write_config(config: PipelineConfig, path: str | Path) -> Path:
    path = Path(path)
    lines = [f"{f.name} = {getattr(config, f.name)}" for f in dataclasses.fields(config)
             if getattr(config, f.name) != ""]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


# -- helpers -----------------------------------------------------------------

def _map(fn: Callable, items: Sequence, workers: int) -> list:
    """Order-preserving map over a bounded thread pool."""
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _dump_json(obj, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return path


def _require(path: Path, command: str) -> Path:
    if not path.is_file():
        raise ModelMissing(f"missing {path}; run `newsquality {command}` first")
    return path


def _need(config: PipelineConfig, *names: str) -> None:
    missing = [n for n in names if not getattr(config, n)]
    if missing:
        raise ConfigError(f"config is missing required setting(s): {', '.join(missing)}")


def load_stream(config: PipelineConfig) -> Corpus:
    _need(config, "posts", "images")
    return load_corpus(config.posts, config.images, config.path("concepts"), config.path("labels"))


def load_training(config: PipelineConfig) -> Corpus:
    _need(config, "train_posts", "train_images", "train_labels")
    return load_corpus(config.train_posts, config.train_images,
                       config.path("train_concepts"), config.train_labels)


def training_split(corpus: Corpus, config: PipelineConfig) -> tuple[list[str], list[str]]:
    ids = sorted(corpus.labels)
    tr, te = train_test_split(len(ids), config.train_fraction, config.seed)
    return [ids[i] for i in tr], [ids[i] for i in te]


# -- spam model --------------------------------------------------------------

@dataclass
class SpamModel:
    classifier: LogisticModel
    dominant_threshold: int = 600
    corner_fraction: float = 0.1801
    min_line_points: int = 20

    def features(self, pixels):
        return synthetic_features(pixels, self.dominant_threshold, self.corner_fraction,
                                  self.min_line_points)

    def save(self, path: Path) -> Path:
        return _dump_json({"classifier": self.classifier.to_dict(),
                           "dominant_threshold": self.dominant_threshold,
                           "corner_fraction": self.corner_fraction,
                           "min_line_points": self.min_line_points}, path)

    @classmethod
    def load(cls, path: Path) -> "SpamModel":
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(LogisticModel.from_dict(d["classifier"]), int(d["dominant_threshold"]),
                   float(d["corner_fraction"]), int(d["min_line_points"]))


def load_spam_images(spam_dir: Path) -> tuple[list[np.ndarray], np.ndarray]:
    """Images under ``photo/`` (label 0) and ``synthetic/`` (label 1)."""
    pixels, labels = [], []
    for label, sub in ((0, "photo"), (1, "synthetic")):
        folder = spam_dir / sub
        if not folder.is_dir():
            raise ConfigError(f"spam_dir needs a {sub}/ folder: {folder}")
        for f in sorted(folder.iterdir()):
            if f.suffix.lower() in (".png", ".jpg", ".jpeg"):
                pixels.append(decode_image(f.read_bytes()))
                labels.append(label)
    return pixels, np.array(labels)


def train_spam(config: PipelineConfig) -> dict:
    """Fit the synthetic-image classifier, with a k-fold CV report."""
    _need(config, "spam_dir")
    pixels, y = load_spam_images(Path(config.spam_dir))
    dominant, corner = config.dominant_threshold, config.corner_fraction
    if config.tune_thresholds:
        photos = [p for p, lab in zip(pixels, y) if lab == 0]
        synths = [p for p, lab in zip(pixels, y) if lab == 1]
        dominant = tune_dominant_threshold(photos, synths, list(range(100, 1001, 50)))
        corner = tune_corner_threshold(photos, synths, [round(0.01 * k, 2) for k in range(1, 21)])
    proto = SpamModel(None, dominant, corner, config.min_line_points)
    X = np.array(_map(lambda p: proto.features(p).to_vector().as_array(), pixels, config.workers))

    def trainer(Xt, yt):
        return train_logistic(Xt, yt, config.logistic_lambda, config.logistic_max_iters,
                              config.logistic_tol, SYNTHETIC_NAMES)

    cv = cross_validate(X, y, trainer, config.cv_folds, config.seed)
    proto.classifier = trainer(X, y)
    config.models.mkdir(parents=True, exist_ok=True)
    proto.save(config.models / SPAM_MODEL)
    report = {"n_photo": int((y == 0).sum()), "n_synthetic": int((y == 1).sum()),
              "folds": config.cv_folds, "per_fold": cv.per_fold, "mean": cv.mean,
              "dominant_threshold": dominant, "corner_fraction": corner}
    _dump_json(report, config.models / "spam_cv.json")
    return report


# -- concepts and ranker -----------------------------------------------------

def build_concepts(config: PipelineConfig) -> cpt.ConceptProbabilityTable:
    """Concept tables from the training split of the labelled corpus."""
    corpus = load_training(config)
    train_ids, _ = training_split(corpus, config)
    y_imgs = {i: corpus.concepts.get(i, []) for i in train_ids
              if corpus.labels[i].binary is BinaryLabel.NEWS_QUALITY}
    n_imgs = {i: corpus.concepts.get(i, []) for i in train_ids
              if corpus.labels[i].binary is BinaryLabel.NOT_NEWS_QUALITY}
    table = cpt.build_tables(y_imgs, n_imgs)
    config.models.mkdir(parents=True, exist_ok=True)
    table.save(config.models / CONCEPT_TABLE)
    return table


def load_concept_table(config: PipelineConfig) -> cpt.ConceptProbabilityTable:
    return cpt.ConceptProbabilityTable.load(_require(config.models / CONCEPT_TABLE, "build-concepts"))


def ranking_features(corpus: Corpus, image_ids: Iterable[str], clusters: DuplicateClusters,
                     table: cpt.ConceptProbabilityTable, faces_path: Path | None,
                     config: PipelineConfig) -> dict[str, FeatureVector]:
    """Full visual + concept + social feature vectors for ``image_ids``."""
    detector = SidecarFaceDetector.from_file(faces_path) if faces_path else None
    ids = list(image_ids)

    def one(iid):
        vis = visual_features(corpus.images[iid].pixels, iid, detector).to_vector()
        con = cpt.score(corpus.concepts.get(iid, []), table).to_vector()
        soc = social_features(iid, corpus, clusters, config.social_aggregate).to_vector()
        return FeatureVector.concat([vis, con, soc], "full")

    return dict(zip(ids, _map(one, ids, config.workers)))


def variant_names(variant: str) -> tuple[str, ...]:
    try:
        return VARIANTS[variant]
    except KeyError:
        raise ConfigError(f"unknown model variant {variant!r}; choose from {sorted(VARIANTS)}") from None


def ranker_path(config: PipelineConfig, variant: str) -> Path:
    return config.models / f"ranker_{variant}.json"


def train_ranker(config: PipelineConfig, variant: str | None = None) -> dict:
    """Regress annotator votes on the training split; report the held-out split."""
    variant = variant or config.variant
    names = variant_names(variant)
    table = load_concept_table(config)
    corpus = load_training(config)
    clusters = cluster(list(corpus.images.values()), corpus.post_times(), config.near_dup_cutoff)
    train_ids, test_ids = training_split(corpus, config)
    feats = ranking_features(corpus, sorted(corpus.labels), clusters, table,
                             config.path("train_faces"), config)

    def matrix(ids):
        return np.array([feats[i].select(names).as_array() for i in ids])

    y_train = np.array([corpus.labels[i].votes for i in train_ids], float)
    model = train_gbt(matrix(train_ids), y_train, config.gbt_params, "squared_error", names)
    config.models.mkdir(parents=True, exist_ok=True)
    model.save(ranker_path(config, variant))

    # classification on the held-out images that have an agreed binary label
    held = [i for i in test_ids if corpus.labels[i].binary is not None]
    report = {"variant": variant, "n_train": len(train_ids), "n_test": len(test_ids),
              "n_test_binary": len(held),
              "importance": [[n, g, c] for n, g, c in feature_importance(model)]}
    if held:
        scores = model.predict(matrix(held))
        pred = (scores >= 3.5).astype(int)
        truth = [int(corpus.labels[i].binary) for i in held]
        m = classification_metrics(pred, truth)
        report["classification"] = {**m.as_dict(), "zero_division": m.zero_division}
    _dump_json(report, config.models / f"ranker_report_{variant}.json")
    return report


# -- the pipeline ------------------------------------------------------------

@dataclass
class PipelineReport:
    ingested: int = 0
    dropped: dict[str, int] = field(default_factory=dict)
    duplicates_removed: int = 0
    ranked: list[tuple[str, float, bool]] = field(default_factory=list)
    feature_dump: str = ""

    @property
    def kept(self) -> int:
        return self.ingested - sum(self.dropped.values())

    def check(self) -> None:
        if self.ingested != len(self.ranked) + sum(self.dropped.values()) + self.duplicates_removed:
            raise AssertionError("stage counts do not add up")

    def to_dict(self) -> dict:
        return {"ingested": self.ingested, "dropped": dict(sorted(self.dropped.items())),
                "kept": self.kept, "duplicates_removed": self.duplicates_removed,
                "ranked_count": len(self.ranked),
                "ranked": [{"image_id": i, "score": s, "canonical": c} for i, s, c in self.ranked],
                "feature_dump": self.feature_dump}


def _ocr_engine(config: PipelineConfig):
    if config.ocr_command:
        return CommandOcr(config.ocr_command, config.ocr_timeout)
    if config.ocr_sidecar:
        return StubOcr.from_sidecar(config.ocr_sidecar)
    return None


def filter_images(corpus: Corpus, spam: SpamModel, config: PipelineConfig) -> dict[str, FilterVerdict]:
    """Coarse, synthetic and captioned stages; the first drop wins.

    An image survives the coarse stage if any post carrying it passes the
    metadata rules; otherwise its earliest post's reason is reported.
    """
    ocr = _ocr_engine(config)
    limits = dict(max_hashtags=config.max_hashtags, max_mentions=config.max_mentions,
                  max_urls=config.max_urls, min_side=config.min_side)

    def one(iid: str) -> FilterVerdict:
        img = corpus.images[iid]
        posts = sorted(corpus.posts_of(iid), key=lambda p: (p.timestamp, p.post_id))
        reasons = [coarse_reason(p.hashtag_count, p.mention_count, p.url_count,
                                 img.width, img.height, **limits) for p in posts]
        if not reasons:
            reasons = [coarse_reason(0, 0, 0, img.width, img.height, **limits)]
        if Reason.NONE not in reasons:
            return FilterVerdict(iid, Decision.DROP, reasons[0])
        prob, decision = classify_synthetic(spam.features(img.pixels), spam.classifier,
                                            config.synthetic_threshold)
        if decision is Decision.DROP:
            return FilterVerdict(iid, Decision.DROP, Reason.SYNTHETIC, prob)
        cap = captioned_filter(img, ocr, config.caption_min_chars, config.median_kernel)
        return FilterVerdict(iid, cap.decision, cap.reason, prob)

    ids = sorted(corpus.images)
    return dict(zip(ids, _map(one, ids, config.workers)))


@dataclass
class RankedImage:
    image_id: str
    score: float
    post_id: str
    absorbed: list[str]
    source: str


def rank_corpus(corpus: Corpus, config: PipelineConfig, model: GbtModel, spam: SpamModel,
                table: cpt.ConceptProbabilityTable):
    """Filter, dedup and rank one corpus. Returns (report, verdicts, clusters,
    kept clusters, ranked images, feature rows)."""
    report = PipelineReport(ingested=len(corpus.images))
    verdicts = filter_images(corpus, spam, config)
    for v in verdicts.values():
        if not v.kept:
            report.dropped[v.reason.value] = report.dropped.get(v.reason.value, 0) + 1

    times = corpus.post_times()
    all_clusters = cluster(list(corpus.images.values()), times, config.near_dup_cutoff)
    kept = [corpus.images[i] for i in sorted(verdicts) if verdicts[i].kept]
    kept_clusters = cluster(kept, times, config.near_dup_cutoff)
    canonical = kept_clusters.canonical_ids()
    report.duplicates_removed = len(kept) - len(canonical)

    names = tuple(model.schema)
    feats = ranking_features(corpus, canonical, all_clusters, table, config.path("faces"), config)
    rows = [(i, feats[i].select(names, config.variant)) for i in canonical]
    scored = rank(model, rows)
    ranked = []
    for iid, score in scored:
        posts = sorted(corpus.posts_of(iid), key=lambda p: (p.timestamp, p.post_id))
        absorbed = sorted(kept_clusters.near_group_of(iid) - {iid})
        ranked.append(RankedImage(iid, score, posts[0].post_id if posts else "", absorbed, iid))
    report.ranked = [(r.image_id, r.score, True) for r in ranked]
    report.check()
    return report, verdicts, all_clusters, kept_clusters, ranked, rows


def load_ranker(config: PipelineConfig, variant: str | None = None) -> GbtModel:
    return GbtModel.load(_require(ranker_path(config, variant or config.variant), "train-ranker"))


def load_spam_model(config: PipelineConfig) -> SpamModel:
    return SpamModel.load(_require(config.models / SPAM_MODEL, "train-spam"))


def run_pipeline(config: PipelineConfig) -> PipelineReport:
    """Filter, deduplicate and rank the configured stream; write all reports."""
    spam = load_spam_model(config)
    table = load_concept_table(config)
    model = load_ranker(config)
    corpus = load_stream(config)
    report, verdicts, all_clusters, _, ranked, rows = rank_corpus(corpus, config, model, spam, table)

    out = config.out
    out.mkdir(parents=True, exist_ok=True)
    write_verdict_log([verdicts[i] for i in sorted(verdicts)], out / "verdicts.jsonl")
    write_cluster_report(all_clusters, out / "clusters.jsonl")
    write_feature_dump(rows, out / "features.csv")
    report.feature_dump = "features.csv"
    _dump_json(report.to_dict(), out / "report.json")
    _dump_json([dataclasses.asdict(r) for r in ranked], out / "ranking.json")
    emit_report(ranked, out, Path(config.images))
    return report


def watch_pipeline(config: PipelineConfig, max_runs: int | None = None,
                   sleep: Callable[[float], None] = time.sleep) -> list[PipelineReport]:
    """Poll the posts file and re-run the pipeline each time it changes.

    Runs once immediately. Stops after ``max_runs`` runs, or never.
    """
    _need(config, "posts")
    posts = Path(config.posts)
    reports: list[PipelineReport] = []
    seen = None
    while max_runs is None or len(reports) < max_runs:
        stamp = posts.stat().st_mtime_ns if posts.exists() else None
        if stamp is not None and stamp != seen:
            seen = stamp
            reports.append(run_pipeline(config))
            log.info("ranked %d images", len(reports[-1].ranked))
            continue
        sleep(config.watch_interval)
    return reports


# -- report files ------------------------------------------------------------

def emit_report(ranked: Sequence[RankedImage], output_dir: str | Path,
                images_dir: str | Path | None = None) -> tuple[Path, Path]:
    """Ranked CSV plus a static HTML gallery with copies of the ranked images."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "ranked.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "image_id", "score", "post_id", "reasons"])
        for k, r in enumerate(ranked, 1):
            reasons = ";".join(f"duplicate:{a}" for a in r.absorbed)
            w.writerow([k, r.image_id, repr(float(r.score)), r.post_id, reasons])

    gallery = out / "gallery"
    if gallery.exists():
        shutil.rmtree(gallery)
    gallery.mkdir()
    cards = []
    for k, r in enumerate(ranked, 1):
        name = f"{k:04d}_{Path(r.image_id).name}"
        if images_dir is not None and (Path(images_dir) / r.source).is_file():
            shutil.copyfile(Path(images_dir) / r.source, gallery / name)
        cards.append(
            f'<figure><img src="gallery/{html.escape(name)}" alt="{html.escape(r.image_id)}">'
            f"<figcaption>#{k} {html.escape(r.image_id)} score {r.score:.3f}</figcaption></figure>")
    page = ("<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Ranked images</title>"
            "<style>figure{display:inline-block;margin:6px;width:260px}"
            "img{max-width:100%}</style></head><body>\n<h1>Ranked images</h1>\n"
            + "\n".join(cards) + "\n</body></html>\n")
    html_path = out / "gallery.html"
    html_path.write_text(page, encoding="utf-8")
    return csv_path, html_path


def report_from_ranking(ranking_json: str | Path, output_dir: str | Path,
                        images_dir: str | Path | None = None) -> tuple[Path, Path]:
    rows = json.loads(Path(ranking_json).read_text(encoding="utf-8"))
    ranked = [RankedImage(**r) for r in rows]
    return emit_report(ranked, output_dir, images_dir)


# -- evaluation --------------------------------------------------------------

def evaluate(config: PipelineConfig, variant: str) -> dict:
    """Train the variant's ranker, rank the labelled stream and score it.

    Relevance is a majority of yes votes; the judged pool is every labelled
    image in the stream, so relevant images lost to filtering count as misses.
    """
    variant_names(variant)
    _need(config, "labels")
    train_report = train_ranker(config, variant)
    spam = load_spam_model(config)
    table = load_concept_table(config)
    model = load_ranker(config, variant)
    corpus = load_stream(config)
    cfg = dataclasses.replace(config, variant=variant)
    report, *_, ranked, _ = rank_corpus(corpus, cfg, model, spam, table)

    flags = [corpus.labels[r.image_id].votes >= RELEVANT_VOTES if r.image_id in corpus.labels else False
             for r in ranked]
    total = sum(1 for lab in corpus.labels.values() if lab.votes >= RELEVANT_VOTES)
    judgments = RankedJudgments.from_flags(flags, total, [r.image_id for r in ranked])
    metrics = ranking_report(f"GBT_{variant}", judgments)
    metrics["classification"] = train_report.get("classification")
    metrics["ranked"] = [r.image_id for r in ranked]
    metrics["pipeline"] = report.to_dict()["dropped"]
    config.out.mkdir(parents=True, exist_ok=True)
    write_metrics_report(metrics, config.out / f"metrics_{variant}.json")
    return metrics
