"""Social signals per image: retweets, followers, and repost counts."""
from __future__ import annotations

from dataclasses import dataclass

from .dedup import DuplicateClusters
from .media import Corpus, FeatureVector

SOCIAL_NAMES = ("rt", "fl", "un", "dd")

AGGREGATORS = {
    "max": max,
    "sum": sum,
    "mean": lambda xs: sum(xs) / len(xs),
}


@dataclass(frozen=True)
class SocialFeatures:
    rt: float
    fl: float
    un: int
    dd: int

    def to_vector(self) -> FeatureVector:
        return FeatureVector(SOCIAL_NAMES, (float(self.rt), float(self.fl),
                                            float(self.un), float(self.dd)), "social")


def _posts_featuring(ids, corpus: Corpus) -> set[str]:
    return {p for i in ids for p in corpus.images[i].source_post_ids}


def social_features(image_id: str, corpus: Corpus, clusters: DuplicateClusters,
                    aggregate: str = "max") -> SocialFeatures:
    """Signals for one image; ``clusters`` must cover the pre-dedup corpus.

    Retweets and followers are aggregated over every post carrying a byte-identical
    copy; ``un``/``dd`` count distinct posts over the exact / near group.
    """
    if image_id not in corpus.images:
        raise KeyError(f"unknown image id {image_id!r}")
    agg = AGGREGATORS[aggregate]
    exact_posts = sorted(_posts_featuring(clusters.exact_group_of(image_id), corpus))
    near_posts = _posts_featuring(clusters.near_group_of(image_id), corpus)
    if exact_posts:
        rt = agg([corpus.posts[p].retweet_count for p in exact_posts])
        fl = agg([corpus.posts[p].author_follower_count for p in exact_posts])
    else:
        rt = fl = 0
    return SocialFeatures(rt, fl, len(exact_posts), len(near_posts))
