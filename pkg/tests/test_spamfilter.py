import json
import sys
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from newsquality import desk
from newsquality import pipeline as pl
from newsquality.features import SYNTHETIC_NAMES, synthetic_features
from newsquality.learners import SchemaError, train_logistic
from newsquality.learners.logistic import LogisticModel
from newsquality.media import ImageRecord, SocialPost
from newsquality.spamfilter import (
    CommandOcr, Decision, FilterVerdict, OcrUnavailable, Reason, StubOcr, captioned_filter,
    classify_synthetic, coarse_filter, coarse_reason, text_length, write_verdict_log,
)

from conftest import coarse_truth_table, solid


@pytest.fixture(scope="module")
def spam_model(small_desk, tmp_path_factory):
    cfg = pl.load_config(small_desk / "pipeline.cfg", models_dir=str(tmp_path_factory.mktemp("m")))
    pl.train_spam(cfg)
    return pl.load_spam_model(cfg)


@pytest.fixture
def photo_rec():
    return ImageRecord.from_array("a.png", desk.photo_image(np.random.default_rng(0)))


def test_coarse_truth_table():
    t0 = time.perf_counter()
    bad, cases = coarse_truth_table()
    assert (bad, cases) == (0, 108)
    assert time.perf_counter() - t0 < 1.0


def test_coarse_examples():
    img = ImageRecord.from_array("x", solid(300, 300))
    assert coarse_filter(SocialPost("p", hashtag_count=4), img).reason is Reason.COARSE_HASHTAGS
    kept = coarse_filter(SocialPost("p", hashtag_count=3, mention_count=3, url_count=2), img)
    assert kept.kept and kept.reason is Reason.NONE
    small = ImageRecord.from_array("s", solid(500, 199))
    assert coarse_filter(SocialPost("p"), small).reason is Reason.COARSE_SIZE


def test_coarse_reason_order_and_limits():
    assert coarse_reason(9, 9, 9, 10, 10) is Reason.COARSE_HASHTAGS
    assert coarse_reason(0, 9, 9, 10, 10) is Reason.COARSE_MENTIONS
    assert coarse_reason(0, 0, 9, 10, 10) is Reason.COARSE_URLS
    assert coarse_reason(5, 0, 0, 300, 300, max_hashtags=5) is Reason.NONE


def test_zero_weight_model_keeps_at_threshold(photo_rec):
    d = len(SYNTHETIC_NAMES)
    m = LogisticModel(np.zeros(d), 0.0, 1.0, np.zeros(d), np.ones(d), SYNTHETIC_NAMES)
    prob, decision = classify_synthetic(synthetic_features(photo_rec.pixels), m)
    assert prob == 0.5 and decision is Decision.KEEP


def test_classifier_schema_checked(photo_rec):
    m = LogisticModel(np.zeros(2), 0.0, 1.0, np.zeros(2), np.ones(2), ("a", "b"))
    with pytest.raises(SchemaError):
        classify_synthetic(synthetic_features(photo_rec.pixels), m)


def test_trained_classifier_drops_advert_keeps_photo(spam_model):
    rng = np.random.default_rng(99)
    adverts = [desk.synthetic_image(rng) for _ in range(5)]
    photos = [desk.photo_image(rng) for _ in range(5)]
    for px in adverts:
        assert classify_synthetic(spam_model.features(px), spam_model.classifier)[1] is Decision.DROP
    for px in photos:
        assert classify_synthetic(spam_model.features(px), spam_model.classifier)[1] is Decision.KEEP


@pytest.mark.parametrize("text,kept", [("", True), ("EXIT", True), ("x" * 19, True),
                                       ("x" * 20, False), ("w" * 100, False),
                                       (" a b c " * 6 + "x", True)])
def test_captioned_with_stub(photo_rec, text, kept):
    v = captioned_filter(photo_rec, StubOcr(text))
    assert v.kept == kept
    assert v.reason is (Reason.NONE if kept else Reason.CAPTIONED)


def test_text_length_ignores_whitespace():
    assert text_length(" a\tb\nc ") == 3


def test_stub_sidecar(tmp_path, photo_rec):
    path = tmp_path / "ocr.jsonl"
    path.write_text(json.dumps({"image_id": "a.png", "text": "SALE " * 10}) + "\n")
    ocr = StubOcr.from_sidecar(path)
    assert not captioned_filter(photo_rec, ocr).kept
    assert ocr.read_text("other", None) == ""


def test_no_ocr_fails_open(photo_rec):
    with pytest.warns(UserWarning, match="no OCR engine"):
        assert captioned_filter(photo_rec, None).kept


def test_ocr_unavailable_fails_open(photo_rec):
    class Down:
        def read_text(self, image_id, gray):
            raise OcrUnavailable("service down")

    with pytest.warns(UserWarning, match="OCR unavailable"):
        assert captioned_filter(photo_rec, Down()).kept


def test_command_ocr_reads_stdout(photo_rec):
    # prints one character per pixel column of the image it was handed
    script = "import sys; from PIL import Image; print('W' * Image.open(sys.argv[1]).size[0])"
    ocr = CommandOcr(f'{sys.executable} -c "{script}" {{image}}')
    assert not captioned_filter(photo_rec, ocr).kept
    assert text_length(ocr.read_text("a", np.zeros((5, 7)))) == 7


@pytest.mark.parametrize("command", ["/nonexistent/ocr {image}",
                                     f'{sys.executable} -c "import sys; sys.exit(3)" {{image}}'])
def test_command_ocr_failure_keeps(photo_rec, command):
    with pytest.warns(UserWarning, match="OCR unavailable"):
        assert captioned_filter(photo_rec, CommandOcr(command)).kept


def test_command_ocr_needs_placeholder():
    with pytest.raises(ValueError):
        CommandOcr("tesseract stdout")


@given(st.sampled_from(list(Decision)), st.sampled_from(list(Reason)))
def test_verdict_drop_iff_reason(decision, reason):
    valid = (decision is Decision.DROP) == (reason is not Reason.NONE)
    if valid:
        assert FilterVerdict("i", decision, reason).kept == (decision is Decision.KEEP)
    else:
        with pytest.raises(ValueError):
            FilterVerdict("i", decision, reason)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 1000), st.lists(st.floats(1e-3, 1e3), min_size=3, max_size=3))
def test_classifier_invariant_to_feature_scale(seed, scales):
    r = np.random.default_rng(seed)
    X = r.normal(0, 1, (40, 3))
    y = (X[:, 0] + 0.5 * r.normal(0, 1, 40) > 0).astype(int)
    if min(y.sum(), (1 - y).sum()) < 2:
        return
    a = train_logistic(X, y, tol=1e-10)
    b = train_logistic(X * np.array(scales), y, tol=1e-10)
    assert np.allclose(a.predict_proba(X), b.predict_proba(X * np.array(scales)), atol=1e-6)


def test_verdict_log(tmp_path):
    vs = [FilterVerdict("a", Decision.KEEP, score=0.1), FilterVerdict("b", Decision.DROP, Reason.SYNTHETIC, 0.9)]
    rows = [json.loads(x) for x in write_verdict_log(vs, tmp_path / "v.jsonl").read_text().splitlines()]
    assert rows[1] == {"image_id": "b", "decision": "drop", "reason": "synthetic", "score": 0.9}
