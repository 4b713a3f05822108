"""Spectral-residual saliency with global normalization, and the pixel-wise
pooling that weights the normalized lightness map by it.

The residual is the log-magnitude spectrum minus its local average.  It is
recombined with the original phase (after exponentiating back to magnitude
domain), inverse-transformed, squared, smoothed, and min-max normalized to
[0, 1].  The transform runs at the native map size; padding would distort
the spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidSpec
from .imageio import ScalarMap
from .prefilter import GaussianKernelSpec, convolve_replicate, make_gaussian_kernel


@dataclass(frozen=True)
class SpectralParams:
    avg_size: int = 3
    smooth_size: int = 10
    smooth_sigma: float = 3.8
    log_floor: float = 1e-8

    def __post_init__(self):
        if int(self.avg_size) != self.avg_size or self.avg_size < 1:
            raise InvalidSpec(f"avg_size must be an integer >= 1, got {self.avg_size}")
        if int(self.smooth_size) != self.smooth_size or self.smooth_size < 1:
            raise InvalidSpec(f"smooth_size must be an integer >= 1, got {self.smooth_size}")
        if not (self.smooth_sigma > 0):
            raise InvalidSpec(f"smooth_sigma must be positive, got {self.smooth_sigma}")
        if not (self.log_floor > 0):
            raise InvalidSpec(f"log_floor must be positive, got {self.log_floor}")
        object.__setattr__(self, "avg_size", int(self.avg_size))
        object.__setattr__(self, "smooth_size", int(self.smooth_size))


@dataclass(frozen=True)
class Spectrum:
    """Magnitude and phase (radians) of a 2-D discrete Fourier transform."""

    magnitude: ScalarMap
    phase: ScalarMap

    def __post_init__(self):
        if self.magnitude.values.shape != self.phase.values.shape:
            raise DimensionMismatch("magnitude and phase must share dimensions")
        if (self.magnitude.values < 0).any():
            raise ValueError("spectrum magnitude must be non-negative")


def forward_spectrum(smap: ScalarMap) -> Spectrum:
    """Unnormalized 2-D DFT at the native map size, split into magnitude and
    phase."""
    if smap.height < 2 or smap.width < 2:
        raise DimensionMismatch("spectrum needs a map of at least 2x2")
    transformed = np.fft.fft2(smap.values)
    return Spectrum(
        magnitude=ScalarMap(np.abs(transformed)),
        phase=ScalarMap(np.angle(transformed)),
    )


def inverse_spectrum(spectrum: Spectrum) -> ScalarMap:
    """Rebuild the spatial map from magnitude and phase (round-trip partner
    of forward_spectrum)."""
    field = spectrum.magnitude.values * np.exp(1j * spectrum.phase.values)
    return ScalarMap(np.fft.ifft2(field).real)


def _uniform_kernel(size: int) -> ScalarMap:
    return ScalarMap(np.full((size, size), 1.0 / (size * size)))


def spectral_residual(spectrum: Spectrum, params: SpectralParams) -> ScalarMap:
    """Log-magnitude spectrum minus its local average (uniform filter with
    edge replication)."""
    log_spec = ScalarMap(np.log(spectrum.magnitude.values + params.log_floor))
    averaged = convolve_replicate(log_spec, _uniform_kernel(params.avg_size))
    return ScalarMap(log_spec.values - averaged.values)


def reconstruct_saliency(sr: ScalarMap, phase: ScalarMap, params: SpectralParams) -> ScalarMap:
    """Inverse-transform the residual spectrum back to a saliency map.

    The residual lives in log-magnitude domain, so it is exponentiated
    before recombination with the phase.  The squared magnitude of the
    inverse transform is smoothed with a Gaussian and min-max normalized to
    [0, 1]; a featureless (constant) map normalizes to all zeros.
    """
    if sr.values.shape != phase.values.shape:
        raise DimensionMismatch("residual and phase must share dimensions")
    field = np.exp(sr.values) * np.exp(1j * phase.values)
    energy = np.abs(np.fft.ifft2(field)) ** 2
    kernel = make_gaussian_kernel(GaussianKernelSpec(params.smooth_size, params.smooth_sigma))
    smoothed = convolve_replicate(ScalarMap(energy), kernel).values
    lo, hi = smoothed.min(), smoothed.max()
    if hi <= lo:
        return ScalarMap(np.zeros_like(smoothed))
    return ScalarMap((smoothed - lo) / (hi - lo))


def compute_saliency(l_norm: ScalarMap, params: SpectralParams) -> ScalarMap:
    """Full chain from a normalized lightness map to its saliency map."""
    spectrum = forward_spectrum(l_norm)
    sr = spectral_residual(spectrum, params)
    return reconstruct_saliency(sr, spectrum.phase, params)


def multiplicative_pool(l_norm: ScalarMap, saliency: ScalarMap) -> ScalarMap:
    """Element-wise product of the normalized lightness map and the saliency
    map; the result is the reliability-weighted map descriptors are drawn
    from."""
    if l_norm.values.shape != saliency.values.shape:
        raise DimensionMismatch(
            f"map shapes differ: {l_norm.values.shape} vs {saliency.values.shape}"
        )
    return ScalarMap(l_norm.values * saliency.values)
