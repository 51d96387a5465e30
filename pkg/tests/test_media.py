import hashlib
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from PIL import Image

from newsquality.dedup import phash64
from newsquality.imaging import normalize, to_gray
from newsquality.media import (
    BinaryLabel, CorpusError, FeatureVector, ImageRecord, QualityLabel, SocialPost,
    binarize_labels, decode_image, encode_png, load_corpus, save_corpus,
)

from conftest import post, solid, write_posts


def _png(path, img):
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(img, "RGB").save(path)


def test_binarize_examples():
    assert binarize_labels(7) is BinaryLabel.NEWS_QUALITY
    assert binarize_labels(0) is BinaryLabel.NOT_NEWS_QUALITY
    assert binarize_labels(4) is None


def test_binarize_cutoffs():
    got = [binarize_labels(v) for v in range(8)]
    assert got == [BinaryLabel.NOT_NEWS_QUALITY] * 2 + [None] * 4 + [BinaryLabel.NEWS_QUALITY] * 2


@pytest.mark.parametrize("bad", [-1, 8, 2.5, True])
def test_binarize_rejects_out_of_range(bad):
    with pytest.raises(ValueError):
        binarize_labels(bad)


@given(st.integers(0, 7), st.integers(0, 7))
def test_binarize_monotone(a, b):
    a, b = min(a, b), max(a, b)
    ca, cb = binarize_labels(a), binarize_labels(b)
    if ca is not None and cb is not None:
        assert ca <= cb


def test_quality_label_binary_only_with_agreement():
    assert QualityLabel.from_votes(5).binary is None
    assert QualityLabel.from_votes(6).binary is BinaryLabel.NEWS_QUALITY


def test_negative_counts_rejected():
    with pytest.raises(CorpusError):
        SocialPost("p", retweet_count=-1)


def test_feature_vector_contract():
    fv = FeatureVector(("a", "b"), (1.0, 2.0), "s")
    assert fv["b"] == 2.0
    assert fv.select(["b"]).names == ("b",)
    with pytest.raises(ValueError):
        FeatureVector(("a", "a"), (1.0, 2.0))
    with pytest.raises(ValueError):
        FeatureVector(("a",), (float("nan"),))


def test_decode_composites_alpha_over_white(tmp_path):
    rgba = np.zeros((4, 4, 4), dtype=np.uint8)
    rgba[..., 0] = 255
    rgba[:2, :, 3] = 255  # top half opaque red, bottom transparent
    p = tmp_path / "a.png"
    Image.fromarray(rgba, "RGBA").save(p)
    out = decode_image(p.read_bytes())
    assert out.shape == (4, 4, 3)
    assert (out[:2] == [255, 0, 0]).all()
    assert (out[2:] == [255, 255, 255]).all()


def test_record_hashes_are_file_md5_and_normalized_phash():
    img = np.random.default_rng(0).integers(0, 256, (30, 40, 3), dtype=np.uint8)
    data = encode_png(img)
    rec = ImageRecord.from_bytes("x.png", data)
    assert rec.md5_hex == hashlib.md5(data).hexdigest()
    assert rec.phash64 == phash64(to_gray(normalize(img)))
    assert rec.width * rec.height * 3 == rec.pixels.size


def test_empty_corpus(tmp_path):
    (tmp_path / "posts.jsonl").write_text("")
    (tmp_path / "images").mkdir()
    c = load_corpus(tmp_path / "posts.jsonl", tmp_path / "images")
    assert len(c.posts) == 0 and len(c.images) == 0


def test_single_post_single_image(tmp_path):
    _png(tmp_path / "images" / "a.png", solid(200, 300, (10, 20, 30)))
    write_posts(tmp_path / "posts.jsonl", [post("p1", ["a.png"])])
    c = load_corpus(tmp_path / "posts.jsonl", tmp_path / "images")
    assert list(c.posts) == ["p1"] and list(c.images) == ["a.png"]
    assert (c.images["a.png"].width, c.images["a.png"].height) == (300, 200)
    assert c.images["a.png"].source_post_ids == ("p1",)
    assert c.posts["p1"].image_ids == ("a.png",)


def test_shared_image_file_gives_one_record(tmp_path):
    _png(tmp_path / "images" / "a.png", solid(5, 5))
    write_posts(tmp_path / "posts.jsonl", [post("p1", ["a.png"]), post("p2", ["a.png"])])
    c = load_corpus(tmp_path / "posts.jsonl", tmp_path / "images")
    assert len(c.images) == 1
    assert c.images["a.png"].source_post_ids == ("p1", "p2")


def test_missing_reference_names_post(tmp_path):
    (tmp_path / "images").mkdir()
    write_posts(tmp_path / "posts.jsonl", [post("p9", ["nope.png"])])
    with pytest.raises(CorpusError, match="p9"):
        load_corpus(tmp_path / "posts.jsonl", tmp_path / "images")


def test_undecodable_image_skipped_with_tally(tmp_path):
    _png(tmp_path / "images" / "ok.png", solid(5, 5))
    (tmp_path / "images" / "bad.png").write_bytes(b"not an image")
    write_posts(tmp_path / "posts.jsonl", [post("p1", ["ok.png", "bad.png"])])
    with pytest.warns(UserWarning, match="1 undecodable"):
        c = load_corpus(tmp_path / "posts.jsonl", tmp_path / "images")
    assert c.skipped_images == 1
    assert list(c.images) == ["ok.png"]
    assert c.posts["p1"].image_ids == ("ok.png",)


def test_labels_need_header(tmp_path):
    _png(tmp_path / "images" / "a.png", solid(5, 5))
    write_posts(tmp_path / "posts.jsonl", [post("p1", ["a.png"])])
    (tmp_path / "labels.csv").write_text("a.png,7\n")
    with pytest.raises(CorpusError, match="header"):
        load_corpus(tmp_path / "posts.jsonl", tmp_path / "images", labels_path=tmp_path / "labels.csv")


def test_duplicate_post_id_rejected(tmp_path):
    _png(tmp_path / "images" / "a.png", solid(5, 5))
    write_posts(tmp_path / "posts.jsonl", [post("p1", ["a.png"]), post("p1", ["a.png"])])
    with pytest.raises(CorpusError, match="duplicate"):
        load_corpus(tmp_path / "posts.jsonl", tmp_path / "images")


def test_round_trip_preserves_ids_counts_hashes(tmp_path):
    rng = np.random.default_rng(3)
    src = tmp_path / "src"
    for name in ("a.png", "b.png", "sub/c.png"):
        _png(src / "images" / name, rng.integers(0, 256, (20, 30, 3), dtype=np.uint8))
    write_posts(src / "posts.jsonl", [post("p1", ["a.png", "sub/c.png"], retweets=4),
                                      post("p2", ["b.png"], hashtags=2)])
    (src / "concepts.jsonl").write_text(json.dumps({"image_id": "a.png", "concepts": ["x"]}) + "\n")
    (src / "labels.csv").write_text("image_id,votes\na.png,6\nb.png,2\n")
    c1 = load_corpus(src / "posts.jsonl", src / "images", src / "concepts.jsonl", src / "labels.csv")
    paths = save_corpus(c1, tmp_path / "dst")
    c2 = load_corpus(paths["posts"], paths["images"], paths["concepts"], paths["labels"])
    assert c1.posts == c2.posts
    assert c1.labels == c2.labels and c1.concepts == c2.concepts
    for iid, rec in c1.images.items():
        other = c2.images[iid]
        assert (rec.md5_hex, rec.phash64, rec.source_post_ids) == \
            (other.md5_hex, other.phash64, other.source_post_ids)
        assert hashlib.md5((paths["images"] / iid).read_bytes()).hexdigest() == rec.md5_hex
