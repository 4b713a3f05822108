"""Scale-invariant keypoints and 128-D descriptors for scalar maps.

The detector builds a Gaussian pyramid (with an optional initial 2x
upsampling, enabled by default), finds strict 26-neighbor extrema of the
difference-of-Gaussians stack, refines them with an iterated 3-D quadratic
fit, and rejects low-contrast and edge-like responses.  Orientation uses a
36-bin gradient histogram with the 80% multi-peak rule; descriptors are the
usual 4x4x8 Gaussian-weighted, trilinearly binned gradient histograms,
normalized with a clamp at 0.2.

Input maps are signed and unbounded, so extraction premultiplies them by a
fixed global input scale that brings salient structure into the range the
absolute contrast threshold assumes.  Everything is single-precision-free
and deterministic: identical input and parameters give bit-identical
descriptors regardless of worker counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import cv2
import numpy as np
from . import _kernels
from .errors import ImageTooSmall, InvalidSpec
from .imageio import ScalarMap

# Orientation window: Gaussian sigma factor relative to keypoint scale, and
# the sampling radius in units of that sigma.
ORI_SIGMA_FACTOR = 1.5
ORI_RADIUS_FACTOR = 3.0
# Descriptor cell width in units of keypoint scale.
DESCRIPTOR_CELL_FACTOR = 3.0
DESCRIPTOR_CLAMP = 0.2
IMAGE_BORDER = 5
MAX_REFINE_STEPS = 5
# Gaussian blur truncation radius in sigmas.  6 keeps incremental blurs
# within ~1e-9 of a single equivalent blur, which the pyramid tests rely on.
GAUSS_TRUNCATE = 6.0

@dataclass(frozen=True)
class SiftParams:
    octaves: Optional[int] = None  # derived from image size when None
    levels_per_octave: int = 3
    base_sigma: float = 1.6
    assumed_blur: float = 0.5
    peak_threshold: float = 0.03
    edge_threshold: float = 10.0
    orientation_bins: int = 36
    peak_accept_ratio: float = 0.8
    descriptor_grid: int = 4
    descriptor_orientations: int = 8
    input_scale: float = 64.0
    upsample: bool = True

    def __post_init__(self):
        if self.octaves is not None and self.octaves < 1:
            raise InvalidSpec("octaves must be >= 1 when given")
        if self.levels_per_octave < 1:
            raise InvalidSpec("levels_per_octave must be >= 1")
        if not (self.base_sigma > 0):
            raise InvalidSpec("base_sigma must be positive")
        if self.peak_threshold < 0:
            raise InvalidSpec("peak_threshold must be >= 0")
        if not (self.edge_threshold >= 1):
            raise InvalidSpec("edge_threshold must be >= 1")
        if self.orientation_bins != 36:
            raise InvalidSpec("orientation_bins is fixed at 36")
        if self.peak_accept_ratio != 0.8:
            raise InvalidSpec("peak_accept_ratio is fixed at 0.8")
        if self.descriptor_grid != 4 or self.descriptor_orientations != 8:
            raise InvalidSpec("descriptor layout is fixed at 4x4x8")
        if not (self.input_scale > 0):
            raise InvalidSpec("input_scale must be positive")

    @property
    def descriptor_length(self) -> int:
        return self.descriptor_grid * self.descriptor_grid * self.descriptor_orientations


@dataclass(frozen=True)
class Keypoint:
    """Sub-pixel keypoint in input-map coordinates, plus the pyramid cell it
    was detected in (octave/layer/row/col refer to the octave grid)."""

    x: float
    y: float
    scale: float
    orientation: float
    octave: int = 0
    layer: int = 1
    row: float = 0.0
    col: float = 0.0
    sigma_octave: float = 1.6

    def __post_init__(self):
        if not (self.scale > 0):
            raise InvalidSpec("keypoint scale must be positive")
        if not (0.0 <= self.orientation < 2.0 * math.pi):
            raise InvalidSpec("orientation must lie in [0, 2*pi)")


@dataclass(frozen=True)
class Descriptor:
    keypoint: Keypoint
    vector: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=np.float64)
        if vec.ndim != 1 or vec.size != 128:
            raise InvalidSpec("descriptor vector must have 128 components")
        object.__setattr__(self, "vector", vec)


@dataclass
class ScaleSpace:
    """Gaussian and DoG pyramids plus the grid geometry needed to map octave
    coordinates back to the input map."""

    gaussians: list
    dogs: list
    delta: float  # spacing of the octave-0 grid in input-map pixels
    level_sigmas: np.ndarray  # absolute within-octave blurs, octave units
    _polar_cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_octaves(self) -> int:
        return len(self.gaussians)

    def pixel_step(self, octave: int) -> float:
        return self.delta * (2.0**octave)

    def gradients(self, octave: int, layer: int):
        """Central-difference gradients (d/drow, d/dcol) of one Gaussian
        level; edges are zeroed and must be masked out by callers."""
        g = self.gaussians[octave][layer]
        gr = np.zeros_like(g)
        gc = np.zeros_like(g)
        gr[1:-1, :] = 0.5 * (g[2:, :] - g[:-2, :])
        gc[:, 1:-1] = 0.5 * (g[:, 2:] - g[:, :-2])
        return gr, gc

    def polar_gradients(self, octave: int, layer: int):
        """Gradient magnitude and orientation (radians in [0, 2*pi]) of one
        Gaussian level, cached per level; edge pixels carry zero magnitude."""
        key = (octave, layer)
        if key not in self._polar_cache:
            gr, gc = self.gradients(octave, layer)
            mag = np.hypot(gr, gc).astype(np.float32)
            ang = np.mod(np.arctan2(gr, gc), 2.0 * math.pi).astype(np.float32)
            self._polar_cache[key] = (mag, ang)
        return self._polar_cache[key]


@dataclass(frozen=True)
class KeypointCandidate:
    """Refined DoG extremum before orientation assignment."""

    x: float
    y: float
    scale: float
    octave: int
    layer: int
    layer_f: float
    row: float
    col: float
    sigma_octave: float
    contrast: float


def _upsample2x(a: np.ndarray) -> np.ndarray:
    """Bilinear 2x upsampling; output index i sits at input coordinate i/2."""
    h, w = a.shape
    out = np.empty((2 * h, 2 * w), dtype=a.dtype)
    out[::2, ::2] = a
    right = np.concatenate([a[:, 1:], a[:, -1:]], axis=1)
    out[::2, 1::2] = 0.5 * (a + right)
    even = out[::2]
    down = np.concatenate([even[1:], even[-1:]], axis=0)
    out[1::2] = 0.5 * (even + down)
    return out


def _gauss_taps(sigma: float) -> np.ndarray:
    radius = int(GAUSS_TRUNCATE * sigma + 0.5)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    taps = np.exp(-(offsets**2) / (2.0 * sigma**2))
    taps /= taps.sum()
    return taps


def _blur(a: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with replicated edges, sampled on integer
    offsets out to GAUSS_TRUNCATE sigmas and normalized."""
    if sigma <= 0:
        return a.copy()
    taps = _gauss_taps(sigma)
    return cv2.sepFilter2D(a, -1, taps, taps, borderType=cv2.BORDER_REPLICATE)


def _blur_into(a: np.ndarray, sigma: float, dst: np.ndarray) -> None:
    taps = _gauss_taps(sigma)
    cv2.sepFilter2D(a, -1, taps, taps, dst=dst, borderType=cv2.BORDER_REPLICATE)


def default_octave_count(height: int, width: int) -> int:
    return int(math.floor(math.log2(min(height, width)))) - 3


def build_scale_space(smap: ScalarMap, params: SiftParams) -> ScaleSpace:
    """Gaussian pyramid with levels_per_octave+3 images per octave (blur
    doubling per octave) and the adjacent-level differences."""
    h, w = smap.height, smap.width
    if min(h, w) < 32:
        raise ImageTooSmall(f"scale space needs at least 32x32, got {w}x{h}")
    n_octaves = params.octaves if params.octaves is not None else default_octave_count(h, w)
    n_octaves = max(n_octaves, 1)

    s = params.levels_per_octave
    level_sigmas = params.base_sigma * (2.0 ** (np.arange(s + 3) / s))
    increments = np.sqrt(level_sigmas[1:] ** 2 - level_sigmas[:-1] ** 2)

    if params.upsample:
        base = _upsample2x(smap.values)
        delta = 0.5
    else:
        base = smap.values.astype(np.float64, copy=True)
        delta = 1.0
    existing = params.assumed_blur / delta
    pre = math.sqrt(max(params.base_sigma**2 - existing**2, 0.01))
    current = _blur(base, pre)

    # Never shrink an octave below the window the detector needs.
    max_oct = 1
    side = min(current.shape)
    while side // 2 >= 2 * IMAGE_BORDER + 3:
        side //= 2
        max_oct += 1
    n_octaves = min(n_octaves, max_oct)

    gaussians = []
    dogs = []
    for _ in range(n_octaves):
        stack = np.empty((s + 3,) + current.shape)
        stack[0] = current
        for i, inc in enumerate(increments):
            _blur_into(stack[i], inc, stack[i + 1])
        gaussians.append(stack)
        dogs.append(stack[1:] - stack[:-1])
        current = np.ascontiguousarray(stack[s][::2, ::2])
    return ScaleSpace(gaussians=gaussians, dogs=dogs, delta=delta, level_sigmas=level_sigmas)


def detect_keypoints(space: ScaleSpace, params: SiftParams) -> list:
    """Strict 26-neighbor DoG extrema, quadratically refined, with contrast
    and principal-curvature rejection.  peak_threshold is an absolute bound
    on interpolated DoG contrast; extraction premultiplies the map by
    input_scale to bring it into the range the default threshold assumes."""
    threshold = params.peak_threshold
    prelim = 0.5 * threshold
    candidates = []
    for octave, dog in enumerate(space.dogs):
        n_layers, n_rows, n_cols = dog.shape
        if n_rows < 2 * IMAGE_BORDER + 3 or n_cols < 2 * IMAGE_BORDER + 3:
            continue
        seeds = _kernels.strict_extrema(dog, prelim, IMAGE_BORDER)
        if seeds.size == 0:
            continue
        refined, keep = _kernels.refine_candidates(
            dog,
            seeds,
            IMAGE_BORDER,
            MAX_REFINE_STEPS,
            threshold,
            params.edge_threshold,
        )
        step = space.pixel_step(octave)
        seen = set()
        for layer_f, row_f, col_f, contrast in refined[keep]:
            # Neighboring seeds can converge to the same interpolated
            # extremum; keep the first occurrence only.
            key = (layer_f, row_f, col_f)
            if key in seen:
                continue
            seen.add(key)
            sigma_octave = params.base_sigma * 2.0 ** (layer_f / params.levels_per_octave)
            candidates.append(
                KeypointCandidate(
                    x=col_f * step,
                    y=row_f * step,
                    scale=sigma_octave * step,
                    octave=octave,
                    layer=int(np.clip(round(layer_f), 1, n_layers - 2)),
                    layer_f=layer_f,
                    row=row_f,
                    col=col_f,
                    sigma_octave=sigma_octave,
                    contrast=contrast,
                )
            )
    return candidates


def _group_by_level(items, key_fn):
    groups = {}
    for idx, item in enumerate(items):
        groups.setdefault(key_fn(item), []).append(idx)
    return groups


def _smooth_circular(hists: np.ndarray) -> np.ndarray:
    axis = hists.ndim - 1
    return (
        6.0 * hists
        + 4.0 * (np.roll(hists, 1, axis=axis) + np.roll(hists, -1, axis=axis))
        + (np.roll(hists, 2, axis=axis) + np.roll(hists, -2, axis=axis))
    ) / 16.0


def assign_orientations(space: ScaleSpace, candidates, params: SiftParams) -> list:
    """Gradient-orientation histogram per candidate; one keypoint per local
    peak within peak_accept_ratio of the highest, with parabolic sub-bin
    interpolation.  Distinct orientations share location and scale."""
    nbins = params.orientation_bins
    two_pi = 2.0 * math.pi
    per_candidate = [[] for _ in candidates]
    groups = _group_by_level(candidates, lambda c: (c.octave, c.layer))
    for (octave, layer), indices in sorted(groups.items()):
        mag, ang = space.polar_gradients(octave, layer)
        rows = np.array([candidates[i].row for i in indices], dtype=np.float32)
        cols = np.array([candidates[i].col for i in indices], dtype=np.float32)
        sigmas = np.array([candidates[i].sigma_octave for i in indices], dtype=np.float32)
        hists = _kernels.orientation_histograms(
            mag, ang, rows, cols, sigmas, nbins, ORI_SIGMA_FACTOR, ORI_RADIUS_FACTOR
        )
        smoothed = _smooth_circular(hists)
        left = np.roll(smoothed, 1, axis=1)
        right = np.roll(smoothed, -1, axis=1)
        peak_floor = params.peak_accept_ratio * smoothed.max(axis=1, keepdims=True)
        peak_mask = (
            (smoothed > left) & (smoothed > right) & (smoothed >= peak_floor) & (peak_floor > 0)
        )
        for local, bin_idx in zip(*np.nonzero(peak_mask)):
            l_val = left[local, bin_idx]
            c_val = smoothed[local, bin_idx]
            r_val = right[local, bin_idx]
            denom = l_val - 2.0 * c_val + r_val
            shift = 0.5 * (l_val - r_val) / denom if denom != 0 else 0.0
            orientation = ((bin_idx + shift) * (two_pi / nbins)) % two_pi
            per_candidate[indices[local]].append(float(orientation))
    keypoints = []
    for cand, orientations in zip(candidates, per_candidate):
        for orientation in orientations:
            keypoints.append(
                Keypoint(
                    x=cand.x,
                    y=cand.y,
                    scale=cand.scale,
                    orientation=orientation,
                    octave=cand.octave,
                    layer=cand.layer,
                    row=cand.row,
                    col=cand.col,
                    sigma_octave=cand.sigma_octave,
                )
            )
    return keypoints


def compute_descriptors(space: ScaleSpace, keypoints, params: SiftParams) -> list:
    """4x4 spatial grid of 8-bin gradient histograms around each keypoint,
    sampled in a frame rotated to the keypoint orientation and Gaussian
    weighted with sigma equal to half the descriptor window width."""
    d = params.descriptor_grid
    nbins = params.descriptor_orientations
    vectors = [None] * len(keypoints)
    groups = _group_by_level(keypoints, lambda k: (k.octave, k.layer))
    for (octave, layer), indices in sorted(groups.items()):
        mag, ang = space.polar_gradients(octave, layer)
        rows = np.array([keypoints[i].row for i in indices], dtype=np.float32)
        cols = np.array([keypoints[i].col for i in indices], dtype=np.float32)
        sigmas = np.array([keypoints[i].sigma_octave for i in indices], dtype=np.float32)
        orientations = np.array([keypoints[i].orientation for i in indices], dtype=np.float32)
        raw = _kernels.descriptor_histograms(
            mag, ang, rows, cols, sigmas, orientations, d, nbins, DESCRIPTOR_CELL_FACTOR
        )
        normalized = _kernels.normalize_clamped_batch(raw.astype(np.float64), DESCRIPTOR_CLAMP)
        for local, kp_idx in enumerate(indices):
            vectors[kp_idx] = normalized[local]
    return [Descriptor(keypoint=kp, vector=vec) for kp, vec in zip(keypoints, vectors)]


def extract(smap: ScalarMap, params: SiftParams) -> list:
    """Full extraction chain on a reliability-weighted map: apply the fixed
    input scale, build the pyramids, detect, orient, describe.  Output order
    is canonical: octave, then y, x, orientation."""
    scaled = ScalarMap(smap.values * params.input_scale)
    space = build_scale_space(scaled, params)
    candidates = detect_keypoints(space, params)
    keypoints = assign_orientations(space, candidates, params)
    descriptors = compute_descriptors(space, keypoints, params)
    descriptors.sort(
        key=lambda desc: (
            desc.keypoint.octave,
            desc.keypoint.y,
            desc.keypoint.x,
            desc.keypoint.orientation,
            desc.keypoint.scale,
        )
    )
    return descriptors
