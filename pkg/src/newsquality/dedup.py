"""Exact (MD5) and near-duplicate (pHash) detection and clustering."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .imaging import resize_bilinear

HASH_SIZE = 32
NEAR_DUP_CUTOFF = 8

# top-left 8x8 block without the DC term, plus (8, 0) to keep 64 coefficients
PHASH_COEFFS = [(u, v) for u in range(8) for v in range(8) if (u, v) != (0, 0)] + [(8, 0)]


def md5_hex(data: bytes) -> str:
    return hashlib.md5(data).hexdigest()


@lru_cache(maxsize=None)
def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II basis; ``D @ x`` transforms a length-n signal."""
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    d = np.cos(np.pi * (2 * i + 1) * k / (2 * n)) * np.sqrt(2.0 / n)
    d[0] /= np.sqrt(2.0)
    return d


def dct2(block: np.ndarray) -> np.ndarray:
    d = dct_matrix(block.shape[0])
    e = dct_matrix(block.shape[1])
    return d @ block @ e.T


def phash64(gray: np.ndarray) -> int:
    """64-bit perceptual hash of a grayscale image.

    The image is shrunk to 32x32, transformed with a 2-D DCT-II and the 64
    selected low-frequency coefficients are thresholded at their median.
    Bit 63 is the first coefficient in ``PHASH_COEFFS``.
    """
    small = resize_bilinear(np.asarray(gray, dtype=float), HASH_SIZE, HASH_SIZE)
    coeffs = dct2(small)
    sel = np.array([coeffs[u, v] for u, v in PHASH_COEFFS])
    bits = sel > np.median(sel)
    code = 0
    for b in bits:
        code = (code << 1) | int(b)
    return code


def hamming(a: int, b: int) -> int:
    return bin((a ^ b) & 0xFFFF_FFFF_FFFF_FFFF).count("1")


def near_duplicate(a, b, cutoff: int = NEAR_DUP_CUTOFF) -> bool:
    """Hamming distance of the pHash codes below ``cutoff``.

    Accepts records with a ``phash64`` attribute or raw 64-bit codes.
    """
    ca = getattr(a, "phash64", a)
    cb = getattr(b, "phash64", b)
    return hamming(ca, cb) < cutoff


class UnionFind:
    def __init__(self, items: Iterable[str]):
        self.parent = {x: x for x in items}

    def find(self, x: str) -> str:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # smaller id wins so roots do not depend on call order
            lo, hi = sorted((ra, rb))
            self.parent[hi] = lo

    def groups(self) -> list[frozenset[str]]:
        out: dict[str, set[str]] = {}
        for x in self.parent:
            out.setdefault(self.find(x), set()).add(x)
        return sorted((frozenset(g) for g in out.values()), key=lambda g: sorted(g))


@dataclass
class DuplicateClusters:
    exact_groups: list[frozenset[str]] = field(default_factory=list)
    near_groups: list[frozenset[str]] = field(default_factory=list)
    canonical: dict[frozenset[str], str] = field(default_factory=dict)

    def __post_init__(self):
        self._exact_of = {i: g for g in self.exact_groups for i in g}
        self._near_of = {i: g for g in self.near_groups for i in g}

    def exact_group_of(self, image_id: str) -> frozenset[str]:
        return self._exact_of[image_id]

    def near_group_of(self, image_id: str) -> frozenset[str]:
        return self._near_of[image_id]

    def is_canonical(self, image_id: str) -> bool:
        return self.canonical[self.near_group_of(image_id)] == image_id

    def canonical_ids(self) -> list[str]:
        return sorted(self.canonical[g] for g in self.near_groups)


def _pairwise_hamming(codes: np.ndarray) -> np.ndarray:
    x = codes[:, None] ^ codes[None, :]
    # popcount on uint64 via byte view
    bytes_ = x.view(np.uint8).reshape(x.shape + (8,))
    return np.unpackbits(bytes_, axis=-1).sum(axis=-1)


def cluster(images: Sequence, post_times: Mapping[str, float] | None = None,
            cutoff: int = NEAR_DUP_CUTOFF) -> DuplicateClusters:
    """Group images by identical MD5 and by chains of near-duplicate pHashes.

    Each group's canonical member is the image whose earliest source post is
    oldest; ties go to the smallest image id. Images without timestamps sort
    as time 0.
    """
    post_times = post_times or {}
    ids = [im.image_id for im in images]
    if len(set(ids)) != len(ids):
        raise ValueError("image ids must be unique")
    by_id = {im.image_id: im for im in images}

    exact = UnionFind(ids)
    first_by_md5: dict[str, str] = {}
    for iid in sorted(ids):
        h = by_id[iid].md5_hex
        if h in first_by_md5:
            exact.union(first_by_md5[h], iid)
        else:
            first_by_md5[h] = iid

    near = UnionFind(ids)
    if len(ids) > 1:
        order = sorted(ids)
        codes = np.array([by_id[i].phash64 for i in order], dtype=np.uint64)
        dist = _pairwise_hamming(codes)
        ii, jj = np.nonzero(np.triu(dist < cutoff, k=1))
        for a, b in zip(ii.tolist(), jj.tolist()):
            near.union(order[a], order[b])
    # exact duplicates are always near duplicates, even with cutoff 0
    for g in exact.groups():
        members = sorted(g)
        for other in members[1:]:
            near.union(members[0], other)

    def earliest(iid: str) -> float:
        times = [post_times.get(p, 0.0) for p in by_id[iid].source_post_ids]
        return min(times) if times else 0.0

    exact_groups = exact.groups()
    near_groups = near.groups()
    canonical = {}
    for g in exact_groups + near_groups:
        canonical[g] = min(g, key=lambda i: (earliest(i), i))
    return DuplicateClusters(exact_groups, near_groups, canonical)


def write_cluster_report(clusters: DuplicateClusters, path: str | Path) -> Path:
    """One JSON line per near-duplicate group."""
    path = Path(path)
    lines = []
    for g in sorted(clusters.near_groups, key=lambda g: clusters.canonical[g]):
        canon = clusters.canonical[g]
        lines.append(json.dumps({
            "canonical_image_id": canon,
            "exact_members": sorted(clusters.exact_group_of(canon)),
            "near_members": sorted(g),
        }, sort_keys=True))
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path
