"""End-to-end quality scoring.

Each image runs independently through smoothing, lightness conversion,
local normalization, spectral-residual saliency, and multiplicative
pooling; descriptors extracted from the two pooled maps are matched, the
surviving match distances are pooled at a low percentile, and the
percentile threshold maps through a decreasing reciprocal to a score in
(0, 100].  Identical images score exactly 100; a pair with no surviving
matches scores the 0 sentinel.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from .config import ReSiftConfig
from .errors import DimensionMismatch, EmptyDistances
from .imageio import RgbImage, ScalarMap
from .matching import geometric_filter, match_descriptors
from .normalize import local_normalize
from .prefilter import preprocess
from .saliency import compute_saliency, multiplicative_pool
from .sift import extract


@dataclass(frozen=True)
class QualityResult:
    score: float
    matched_count: int
    percentile_distance: float
    timings_ms: dict = field(default_factory=dict)


def percentile_threshold(distances, perc: float) -> float:
    """Nearest-rank lower percentile: sort ascending and return the element
    at rank ceil(perc * N / 100), clamped to the valid range."""
    n = len(distances)
    if n == 0:
        raise EmptyDistances("cannot pool an empty distance list")
    ordered = sorted(float(d) for d in distances)
    rank = math.ceil(perc * n / 100.0)
    return ordered[min(max(rank - 1, 0), n - 1)]


def nonlinear_map(dist: float, c1: float, c2: float) -> float:
    """Strictly decreasing reciprocal mapping of a pooled distance to a
    quality score; dist = 0 gives the 100.0 ceiling."""
    return 1.0 / (dist / c1 + c2)


def pooled_map(img: RgbImage, cfg: ReSiftConfig) -> ScalarMap:
    """Reliability-weighted map of one image (shared by scoring and the map
    inspection command)."""
    lightness = preprocess(img, cfg)
    l_norm = local_normalize(lightness, cfg.norm)
    sal = compute_saliency(l_norm, cfg.spectral)
    return multiplicative_pool(l_norm, sal)


def intermediate_maps(img: RgbImage, cfg: ReSiftConfig) -> dict:
    """Every named intermediate stage for one image, keyed by stage name."""
    lightness = preprocess(img, cfg)
    l_norm = local_normalize(lightness, cfg.norm)
    sal = compute_saliency(l_norm, cfg.spectral)
    pooled = multiplicative_pool(l_norm, sal)
    return {"lightness": lightness, "lnorm": l_norm, "saliency": sal, "pooled": pooled}


def resift_score(ref: RgbImage, dist_img: RgbImage, cfg: ReSiftConfig) -> QualityResult:
    if (ref.height, ref.width) != (dist_img.height, dist_img.width):
        raise DimensionMismatch(
            f"reference is {ref.width}x{ref.height}, "
            f"distorted is {dist_img.width}x{dist_img.height}"
        )
    timings = {}

    t0 = time.perf_counter()
    ref_pooled = pooled_map(ref, cfg)
    timings["pool_ref"] = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    dist_pooled = pooled_map(dist_img, cfg)
    timings["pool_dist"] = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    ref_descs = extract(ref_pooled, cfg.sift)
    timings["sift_ref"] = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    dist_descs = extract(dist_pooled, cfg.sift)
    timings["sift_dist"] = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    matches = match_descriptors(ref_descs, dist_descs, cfg.match)
    matches = geometric_filter(
        matches,
        [d.keypoint for d in ref_descs],
        [d.keypoint for d in dist_descs],
        cfg.match,
    )
    timings["match"] = (time.perf_counter() - t0) * 1e3

    if len(matches) == 0:
        return QualityResult(
            score=0.0,
            matched_count=0,
            percentile_distance=math.inf,
            timings_ms=timings,
        )
    threshold = percentile_threshold(matches.distances(), cfg.perc)
    return QualityResult(
        score=nonlinear_map(threshold, cfg.c1, cfg.c2),
        matched_count=len(matches),
        percentile_distance=threshold,
        timings_ms=timings,
    )
