import hashlib
import itertools
import json

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.fft import dctn

from newsquality import desk
from newsquality.dedup import (
    PHASH_COEFFS, UnionFind, cluster, dct2, hamming, md5_hex, near_duplicate, phash64,
    write_cluster_report,
)
from newsquality.imaging import resize_bilinear, to_gray
from newsquality.media import ImageRecord

codes = st.integers(0, 2**64 - 1)


class Rec:
    """Minimal stand-in carrying only what clustering reads."""

    def __init__(self, image_id, md5, code, posts=()):
        self.image_id, self.md5_hex, self.phash64 = image_id, md5, code
        self.source_post_ids = tuple(posts)


def test_md5_vectors():
    assert md5_hex(b"") == "d41d8cd98f00b204e9800998ecf8427e"
    assert md5_hex(b"abc") == "900150983cd24fb0d6963f7d28e17f72"
    assert md5_hex(b"x" * 1000) == md5_hex(b"x" * 1000)


def test_dct_matches_scipy():
    block = np.random.default_rng(0).uniform(0, 255, (32, 32))
    assert np.allclose(dct2(block), dctn(block, type=2, norm="ortho"), atol=1e-9)


def test_phash_bit_layout():
    gray = np.random.default_rng(1).uniform(0, 255, (90, 120))
    coeffs = dctn(resize_bilinear(gray, 32, 32), type=2, norm="ortho")
    sel = np.array([coeffs[u, v] for u, v in PHASH_COEFFS])
    want = int("".join("1" if c > np.median(sel) else "0" for c in sel), 2)
    assert phash64(gray) == want
    assert len(PHASH_COEFFS) == 64 and (0, 0) not in PHASH_COEFFS and (8, 0) in PHASH_COEFFS
    assert bin(want).count("1") == 32


def test_hamming_examples():
    assert hamming(5, 5) == 0
    assert hamming(0x0123, ~0x0123 & (2**64 - 1)) == 64
    assert hamming(0x0F, 0x00) == 4


@given(codes, codes, codes)
def test_hamming_is_metric(a, b, c):
    assert hamming(a, a) == 0
    assert hamming(a, b) == hamming(b, a)
    assert (hamming(a, b) == 0) == (a == b)
    assert hamming(a, c) <= hamming(a, b) + hamming(b, c)


@given(codes, codes)
def test_near_duplicate_is_threshold(a, b):
    assert near_duplicate(a, b) == (bin(a ^ b).count("1") < 8)


def test_phash_examples():
    rng = np.random.default_rng(2)
    photos = [desk.photo_image(rng, 320, 240) for _ in range(20)]
    for p in photos:
        g = to_gray(p)
        assert hamming(phash64(g), phash64(g)) == 0
        half = resize_bilinear(p, 160, 120)
        assert hamming(phash64(g), phash64(to_gray(half))) < 8
    dists = [hamming(phash64(to_gray(a)), phash64(to_gray(b)))
             for a, b in itertools.combinations(photos, 2)]
    assert min(dists) > 8
    assert abs(np.mean(dists) - 32) < 4


def test_phash_brightness_invariance():
    # photos are mapped into studio range 16..235 so a +-10 shift stays
    # uniform instead of saturating
    rng = np.random.default_rng(3)
    stable = 0
    for k in range(50):
        p = np.rint(16 + desk.photo_image(rng, 240, 180) * (219 / 255)).astype(int)
        shift = 10 if k % 2 else -10
        q = np.clip(p + shift, 0, 255).astype(np.uint8)
        stable += phash64(to_gray(p.astype(np.uint8))) == phash64(to_gray(q))
    assert stable >= 48


def test_union_find_chain():
    uf = UnionFind("abcd")
    uf.union("a", "b")
    uf.union("b", "c")
    assert sorted(map(sorted, uf.groups())) == [["a", "b", "c"], ["d"]]


def test_cluster_chain_is_one_group():
    a, b, c = 0, 0b1111111, 0b11111111111111  # a~b (7), b~c (7), a!~c (14)
    assert near_duplicate(a, b) and near_duplicate(b, c) and not near_duplicate(a, c)
    cl = cluster([Rec("a", "1", a), Rec("b", "2", b), Rec("c", "3", c)])
    assert cl.near_groups == [frozenset("abc")]


def test_cluster_exact_groups():
    recs = [Rec(i, "same", 0) for i in "xyz"]
    cl = cluster(recs)
    assert cl.exact_groups == [frozenset("xyz")]
    distinct = cluster([Rec(str(i), str(i), (2**64 - 1) * (i % 2) ^ (i << 20)) for i in range(4)])
    assert all(len(g) == 1 for g in distinct.exact_groups)


def test_exact_groups_equal_byte_equality():
    rng = np.random.default_rng(4)
    blobs = [bytes(rng.integers(0, 3, 4, dtype=np.uint8)) for _ in range(30)]
    recs = [Rec(f"i{k:02d}", md5_hex(b), 0) for k, b in enumerate(blobs)]
    by_bytes = {}
    for r, b in zip(recs, blobs):
        by_bytes.setdefault(b, set()).add(r.image_id)
    assert sorted(map(sorted, cluster(recs).exact_groups)) == sorted(map(sorted, by_bytes.values()))


def test_exact_group_inside_near_group():
    cl = cluster([Rec("a", "m", 0), Rec("b", "m", 2**63), Rec("c", "n", 2**63)])
    assert cl.exact_group_of("a") == frozenset("ab")
    assert cl.near_group_of("a") == frozenset("abc")


def test_canonical_is_earliest_post_then_id():
    recs = [Rec("b", "1", 0, ["p2"]), Rec("a", "2", 1, ["p3"]), Rec("c", "3", 3, ["p1"])]
    times = {"p1": 5.0, "p2": 1.0, "p3": 1.0}
    cl = cluster(recs, times)
    assert cl.canonical_ids() == ["a"]  # a and b tie on time 1.0, id breaks it
    assert cl.is_canonical("a") and not cl.is_canonical("c")


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 2**12)), min_size=1, max_size=12),
       st.randoms())
def test_cluster_order_independent(rows, rnd):
    recs = [Rec(f"i{k}", str(m), code, [f"p{k}"]) for k, (m, code) in enumerate(rows)]
    times = {f"p{k}": float(k % 3) for k in range(len(rows))}
    shuffled = list(recs)
    rnd.shuffle(shuffled)
    c1, c2 = cluster(recs, times), cluster(shuffled, times)
    assert sorted(map(sorted, c1.exact_groups)) == sorted(map(sorted, c2.exact_groups))
    assert sorted(map(sorted, c1.near_groups)) == sorted(map(sorted, c2.near_groups))
    assert c1.canonical_ids() == c2.canonical_ids()
    for g in c1.near_groups:
        assert c1.canonical[g] in g


def test_cluster_all_distinct_and_report(tmp_path):
    rng = np.random.default_rng(5)
    recs = [ImageRecord.from_array(f"{k}.png", desk.photo_image(rng, 120, 90)) for k in range(4)]
    cl = cluster(recs)
    assert all(len(g) == 1 for g in cl.near_groups)
    lines = write_cluster_report(cl, tmp_path / "c.jsonl").read_text().splitlines()
    rows = [json.loads(x) for x in lines]
    assert len(rows) == 4
    assert set(rows[0]) == {"canonical_image_id", "exact_members", "near_members"}


def test_md5_of_record_is_file_md5():
    rec = ImageRecord.from_array("a.png", np.zeros((3, 3, 3), np.uint8))
    assert rec.md5_hex == hashlib.md5(rec.data).hexdigest()
