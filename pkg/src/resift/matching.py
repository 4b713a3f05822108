"""Descriptor matching between a reference and a distorted map.

A reference descriptor is matched to its nearest neighbor in the distorted
set only when ratio_thresh times the nearest distance stays below the
second-nearest distance.  Because quality-assessment pairs are spatially
aligned, geometric consistency reduces to agreement with the median match
displacement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpec


@dataclass(frozen=True)
class MatchParams:
    ratio_thresh: float = 1.4
    geo_radius: float = 30.0

    def __post_init__(self):
        if not (self.ratio_thresh > 1):
            raise InvalidSpec("ratio_thresh must be > 1")
        if not (self.geo_radius > 0):
            raise InvalidSpec("geo_radius must be positive")


@dataclass(frozen=True)
class MatchSet:
    """Accepted correspondences as (reference index, distorted index,
    Euclidean distance) triples; each reference index appears at most once."""

    pairs: tuple

    def __len__(self) -> int:
        return len(self.pairs)

    def distances(self) -> np.ndarray:
        return np.array([p[2] for p in self.pairs], dtype=np.float64)


def _descriptor_matrix(descriptors) -> np.ndarray:
    if len(descriptors) == 0:
        return np.zeros((0, 128))
    if isinstance(descriptors, np.ndarray):
        return np.asarray(descriptors, dtype=np.float64)
    return np.stack([np.asarray(d.vector, dtype=np.float64) for d in descriptors])


def _exact_distance(a: np.ndarray, b: np.ndarray) -> float:
    diff = a - b
    return float(np.sqrt(np.sum(diff * diff)))


def match_descriptors(ref_set, dist_set, params: MatchParams) -> MatchSet:
    """Exhaustive nearest/second-nearest search from every reference
    descriptor into the distorted set, with the ratio acceptance rule.

    Candidate ranking uses the expanded-square-distance identity for speed;
    the two shortlisted distances are then recomputed exactly from the
    vector differences, so reported distances (and identical-vector zeros)
    carry no cancellation error.  Ties rank the lower index first.
    """
    ref = _descriptor_matrix(ref_set)
    cand = _descriptor_matrix(dist_set)
    n_ref, n_cand = ref.shape[0], cand.shape[0]
    if n_ref == 0 or n_cand == 0:
        return MatchSet(pairs=())

    pairs = []
    if n_cand == 1:
        # No second neighbor exists to certify uniqueness: accept only an
        # exact duplicate.
        for i in range(n_ref):
            d = _exact_distance(ref[i], cand[0])
            if d == 0.0:
                pairs.append((i, 0, 0.0))
        return MatchSet(pairs=tuple(pairs))

    cand_sq = np.einsum("ij,ij->i", cand, cand)
    rows_per_chunk = max(1, min(n_ref, int(4e6 // max(n_cand, 1)) + 1))
    for start in range(0, n_ref, rows_per_chunk):
        block = ref[start : start + rows_per_chunk]
        sq = block @ cand.T
        sq *= -2.0
        sq += cand_sq[None, :]
        sq += np.einsum("ij,ij->i", block, block)[:, None]
        first = np.argmin(sq, axis=1)
        block_rows = np.arange(block.shape[0])
        sq[block_rows, first] = np.inf
        second = np.argmin(sq, axis=1)
        for bi in range(block.shape[0]):
            i = start + bi
            j0 = int(first[bi])
            j1 = int(second[bi])
            d0 = _exact_distance(ref[i], cand[j0])
            d1 = _exact_distance(ref[i], cand[j1])
            if (d1, j1) < (d0, j0):
                j0, d0, d1 = j1, d1, d0
            if params.ratio_thresh * d0 < d1:
                pairs.append((i, int(j0), d0))
    return MatchSet(pairs=tuple(pairs))


def geometric_filter(matches: MatchSet, ref_keypoints, dist_keypoints, params: MatchParams) -> MatchSet:
    """Drop pairs whose displacement deviates from the component-wise median
    displacement by more than geo_radius; two or fewer pairs pass through."""
    if len(matches) <= 2:
        return matches
    dx = np.array([dist_keypoints[j].x - ref_keypoints[i].x for i, j, _ in matches.pairs])
    dy = np.array([dist_keypoints[j].y - ref_keypoints[i].y for i, j, _ in matches.pairs])
    med_x = float(np.median(dx))
    med_y = float(np.median(dy))
    keep = np.maximum(np.abs(dx - med_x), np.abs(dy - med_y)) <= params.geo_radius
    return MatchSet(pairs=tuple(p for p, k in zip(matches.pairs, keep) if k))
