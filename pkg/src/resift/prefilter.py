"""Input conditioning: Gaussian low-pass smoothing of the RGB channels
followed by conversion to the lightness channel of La*b*.

The smoothing kernel is parameterized by taps-per-side and standard
deviation.  Even sizes sample the Gaussian on symmetric half-integer
offsets (size 4 uses -1.5, -0.5, 0.5, 1.5), the same grid convention used
by parameterized Gaussian windows in common numeric environments.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.ndimage as ndi

from .errors import InvalidSpec, KernelTooLarge
from .imageio import RgbImage, ScalarMap

# Adobe RGB (1998) RGB->XYZ matrix as published for D65 white, and the pure
# power decoding exponent 563/256.  The reference white is taken as the
# matrix's own image of RGB (1,1,1) so that white maps to L = 100 exactly.
ADOBE_RGB_1998_MATRIX = (
    (0.57667, 0.18556, 0.18823),
    (0.29734, 0.62736, 0.07529),
    (0.02703, 0.07069, 0.99134),
)
ADOBE_RGB_1998_GAMMA = 563.0 / 256.0

CIE_KAPPA = 903.3
CIE_EPSILON = 0.008856


@dataclass(frozen=True)
class GaussianKernelSpec:
    """Square Gaussian kernel: taps per side and standard deviation in px."""

    size: int
    sigma: float

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 1:
            raise InvalidSpec(f"kernel size must be a positive integer, got {self.size}")
        if not (self.sigma > 0):
            raise InvalidSpec(f"kernel sigma must be positive, got {self.sigma}")
        object.__setattr__(self, "size", int(self.size))
        object.__setattr__(self, "sigma", float(self.sigma))


def _default_matrix() -> np.ndarray:
    return np.array(ADOBE_RGB_1998_MATRIX, dtype=np.float64)


@dataclass(frozen=True)
class ColorTransformParams:
    """Linear-RGB to XYZ matrix plus the CIE lightness constants."""

    matrix: np.ndarray = field(default_factory=_default_matrix)
    kappa: float = CIE_KAPPA
    epsilon: float = CIE_EPSILON
    gamma: float = ADOBE_RGB_1998_GAMMA
    white_point: np.ndarray = None

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=np.float64)
        if matrix.shape != (3, 3):
            raise InvalidSpec("color matrix must be 3x3")
        white = self.white_point
        if white is None:
            white = matrix @ np.ones(3)
        white = np.asarray(white, dtype=np.float64)
        if white.shape != (3,) or not (white > 0).all():
            raise InvalidSpec("white point must be a positive XYZ triple")
        if np.max(np.abs(matrix @ np.ones(3) - white)) > 1e-6:
            raise InvalidSpec("matrix rows must map RGB white to the white point")
        if self.kappa != CIE_KAPPA or self.epsilon != CIE_EPSILON:
            raise InvalidSpec("kappa and epsilon are fixed CIE standard coefficients")
        if not (self.gamma > 0):
            raise InvalidSpec("gamma must be positive")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "white_point", white)
        object.__setattr__(self, "gamma", float(self.gamma))

    def __eq__(self, other):
        if not isinstance(other, ColorTransformParams):
            return NotImplemented
        return (
            np.array_equal(self.matrix, other.matrix)
            and np.array_equal(self.white_point, other.white_point)
            and (self.kappa, self.epsilon, self.gamma)
            == (other.kappa, other.epsilon, other.gamma)
        )


def make_gaussian_kernel(spec: GaussianKernelSpec) -> ScalarMap:
    """Sample exp(-(x^2+y^2)/(2*sigma^2)) on a symmetric size x size grid and
    normalize the taps to sum to 1."""
    offsets = np.arange(spec.size, dtype=np.float64) - (spec.size - 1) / 2.0
    profile = np.exp(-(offsets**2) / (2.0 * spec.sigma**2))
    kernel = np.outer(profile, profile)
    kernel /= kernel.sum()
    return ScalarMap(kernel)


def convolve_replicate(smap: ScalarMap, kernel: ScalarMap) -> ScalarMap:
    """Correlate a map with a kernel, replicating edge pixels beyond the
    border.  The kernel anchor is index size//2 per axis (for even sizes the
    window reaches one tap further up and left)."""
    if kernel.height >= smap.height or kernel.width >= smap.width:
        raise KernelTooLarge(
            f"kernel {kernel.width}x{kernel.height} does not fit inside map "
            f"{smap.width}x{smap.height}"
        )
    out = ndi.correlate(smap.values, kernel.values, mode="nearest")
    return ScalarMap(out)


def _lightness_from_linear_xyz_y(y_norm: np.ndarray, params: ColorTransformParams) -> np.ndarray:
    above = y_norm > params.epsilon
    f = np.where(above, np.cbrt(np.maximum(y_norm, 0.0)), (params.kappa * y_norm + 16.0) / 116.0)
    return 116.0 * f - 16.0


def lightness_from_channels(channels: np.ndarray, params: ColorTransformParams) -> np.ndarray:
    """Lightness of an (H, W, 3) float array of RGB channels in [0, 1]."""
    decoded = np.power(np.clip(channels, 0.0, 1.0), params.gamma)
    y = decoded @ params.matrix[1]
    y_norm = y / params.white_point[1]
    return _lightness_from_linear_xyz_y(y_norm, params)


def rgb_to_lightness(img: RgbImage, params: ColorTransformParams) -> ScalarMap:
    """La*b* lightness channel of an 8-bit RGB image, values in [0, 100].

    Channels are scaled to [0, 1], gamma-decoded, mapped through the RGB->XYZ
    matrix, and the Y component (normalized by the reference white) is pushed
    through the CIE lightness curve.  Chroma is never computed; it carries no
    structure the later stages use.
    """
    channels = img.data.astype(np.float64) / 255.0
    return ScalarMap(lightness_from_channels(channels, params))


def preprocess(img: RgbImage, cfg) -> ScalarMap:
    """Smooth each RGB channel with the configured Gaussian kernel, then
    convert to lightness."""
    kernel = make_gaussian_kernel(cfg.filter)
    channels = img.data.astype(np.float64) / 255.0
    smoothed = np.empty_like(channels)
    for c in range(3):
        smoothed[:, :, c] = convolve_replicate(ScalarMap(channels[:, :, c]), kernel).values
    return ScalarMap(lightness_from_channels(smoothed, cfg.color))
