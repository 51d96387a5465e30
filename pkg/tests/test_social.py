import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from newsquality.dedup import cluster
from newsquality.media import Corpus, ImageRecord, SocialPost
from newsquality.social import social_features


def _img(seed):
    return np.random.default_rng(seed).integers(0, 256, (24, 32, 3), dtype=np.uint8)


def build(posts, images):
    """posts: (post_id, image_ids, retweets, followers); images: id -> pixels."""
    refs = {}
    for pid, ids, _, _ in posts:
        for i in ids:
            refs.setdefault(i, []).append(pid)
    recs = {i: ImageRecord.from_array(i, px, refs.get(i, [])) for i, px in images.items()}
    c = Corpus(posts={pid: SocialPost(pid, retweet_count=rt, author_follower_count=fl,
                                      image_ids=tuple(ids), timestamp=float(k))
                      for k, (pid, ids, rt, fl) in enumerate(posts)},
               images=recs)
    return c, cluster(list(recs.values()), c.post_times())


def test_singleton():
    c, cl = build([("p1", ["a"], 5, 100)], {"a": _img(0)})
    s = social_features("a", c, cl)
    assert (s.rt, s.fl, s.un, s.dd) == (5, 100, 1, 1)


def test_byte_identical_in_three_posts():
    px = _img(1)
    c, cl = build([("p1", ["a"], 1, 10), ("p2", ["b"], 7, 3), ("p3", ["c"], 2, 50)],
                  {"a": px, "b": px.copy(), "c": px.copy()})
    assert cl.exact_group_of("a") == frozenset("abc")
    for i in "abc":
        s = social_features(i, c, cl)
        assert (s.un, s.rt, s.fl) == (3, 7, 50)
    assert social_features("a", c, cl, "sum").rt == 10


def test_near_group_union_of_posts():
    px = _img(2)
    near = px.copy()
    near[0, 0] ^= 1  # different bytes, same pHash
    c, cl = build([("p1", ["a"], 0, 0), ("p2", ["a"], 0, 0), ("p3", ["b"], 0, 0)],
                  {"a": px, "b": near})
    assert cl.exact_group_of("a") == {"a"} and cl.near_group_of("a") == {"a", "b"}
    assert social_features("a", c, cl).dd == 3 and social_features("b", c, cl).dd == 3
    assert social_features("a", c, cl).un == 2 and social_features("b", c, cl).un == 1


def test_unknown_image():
    c, cl = build([("p1", ["a"], 0, 0)], {"a": _img(3)})
    with pytest.raises(KeyError):
        social_features("zzz", c, cl)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.lists(st.sampled_from("abcd"), min_size=1, max_size=3, unique=True),
                          st.integers(0, 100), st.integers(0, 1000)), min_size=1, max_size=6),
       st.randoms())
def test_signal_invariants(rows, rnd):
    base = _img(4)
    images = {"a": base, "b": base.copy(), "c": _img(5), "d": _img(6)}
    posts = [(f"p{k}", ids, rt, fl) for k, (ids, rt, fl) in enumerate(rows)]
    used = {i for _, ids, _, _ in posts for i in ids}
    images = {i: px for i, px in images.items() if i in used}
    c, cl = build(posts, images)
    shuffled = list(posts)
    rnd.shuffle(shuffled)
    c2, cl2 = build(shuffled, images)
    for i in images:
        s = social_features(i, c, cl)
        assert s.dd >= s.un >= 1
        assert s == social_features(i, c2, cl2)
        for j in cl.exact_group_of(i):
            assert social_features(j, c, cl) == s
