"""Shared fixtures: synthetic reference images and distortion helpers."""

import numpy as np
import pytest
import scipy.ndimage as ndi
from scipy.fft import dctn, idctn

from resift.imageio import RgbImage

# Standard JPEG luminance quantization table, used by the JPEG-like
# block-quantization distortion.
JPEG_LUMA_TABLE = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.float64,
)


def texture_rgb(seed: int, size: int) -> RgbImage:
    """Structure-rich synthetic reference: fractal noise octaves plus
    geometric shapes and a global gradient, gently colorized."""
    rng = np.random.default_rng(seed)
    acc = np.zeros((size, size))
    for sig, w in [(1, 0.6), (2, 1.0), (4, 1.6), (8, 2.6), (16, 4.2), (32, 6.8)]:
        acc += ndi.gaussian_filter(rng.normal(size=(size, size)), sig) * w
    yy, xx = np.mgrid[0:size, 0:size]
    for _ in range(10):
        cy, cx = rng.uniform(16, size - 16, 2)
        r = rng.uniform(8, 40)
        disk = ((yy - cy) ** 2 + (xx - cx) ** 2 < r * r).astype(float)
        acc += rng.uniform(-1.5, 1.5) * ndi.gaussian_filter(disk, 1.0)
    for _ in range(6):
        y0, x0 = rng.integers(0, size - 48, 2)
        hh, ww = rng.integers(16, 48, 2)
        box = np.zeros((size, size))
        box[y0 : y0 + hh, x0 : x0 + ww] = 1.0
        acc += rng.uniform(-1.2, 1.2) * ndi.gaussian_filter(box, 1.0)
    acc += 0.8 * (xx / size - 0.5) * rng.choice([-1.0, 1.0])
    acc = np.clip((acc - acc.min()) / (acc.max() - acc.min()), 0, 1)
    base = (acc * 205 + 25).astype(np.uint8)
    rgb = np.stack(
        [
            base,
            np.clip(base * 0.95 + 8, 0, 255).astype(np.uint8),
            np.clip(base * 0.9 + 15, 0, 255).astype(np.uint8),
        ],
        axis=2,
    )
    return RgbImage(rgb)


def blur_rgb(img: RgbImage, sigma: float) -> RgbImage:
    out = np.empty(img.data.shape)
    for c in range(3):
        out[:, :, c] = ndi.gaussian_filter(img.data[:, :, c].astype(float), sigma, mode="nearest")
    return RgbImage(np.clip(np.round(out), 0, 255).astype(np.uint8))


def noise_rgb(img: RgbImage, amplitude: float, seed: int) -> RgbImage:
    rng = np.random.default_rng(seed)
    out = img.data.astype(float) + rng.normal(0, amplitude, img.data.shape)
    return RgbImage(np.clip(np.round(out), 0, 255).astype(np.uint8))


def jpegish_rgb(img: RgbImage, quality: float) -> RgbImage:
    """JPEG-style 8x8 block DCT quantization at the given quality factor."""
    scale = 5000.0 / quality if quality < 50 else 200.0 - 2.0 * quality
    q = np.clip(np.floor((JPEG_LUMA_TABLE * scale + 50) / 100), 1, 255)
    h, w = img.data.shape[:2]
    out = np.empty(img.data.shape)
    for c in range(3):
        ch = img.data[:, :, c].astype(float) - 128.0
        rec = np.empty_like(ch)
        for by in range(0, h, 8):
            for bx in range(0, w, 8):
                block = dctn(ch[by : by + 8, bx : bx + 8], norm="ortho")
                rec[by : by + 8, bx : bx + 8] = idctn(np.round(block / q) * q, norm="ortho")
        out[:, :, c] = rec + 128.0
    return RgbImage(np.clip(np.round(out), 0, 255).astype(np.uint8))


def combined_degrade(img: RgbImage, level: int, seed: int) -> RgbImage:
    """Joint blur+noise ladder: both strengths grow with the level index, so
    each level is unambiguously worse than the previous one."""
    blurred = blur_rgb(img, 0.35 * level)
    return noise_rgb(blurred, 1.25 * level, seed)


def save_png(img: RgbImage, path) -> None:
    from PIL import Image

    Image.fromarray(img.data).save(path)


@pytest.fixture(scope="session")
def small_texture() -> RgbImage:
    return texture_rgb(11, 96)


@pytest.fixture(scope="session")
def warm_pipeline(small_texture):
    """Trigger jit compilation once so timing-sensitive tests measure the
    steady state."""
    from resift import ReSiftConfig, resift_score

    resift_score(small_texture, small_texture, ReSiftConfig())
    return True
