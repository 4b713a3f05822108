"""Block-wise local normalization of the lightness map.

The map is partitioned into non-overlapping window x window tiles; each
pixel is mean-subtracted and divided by its tile's population standard
deviation plus a small stabilizer.  Trailing tiles at the right/bottom use
their actual pixel count, so every pixel gets normalized without padding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpec
from .imageio import ScalarMap


@dataclass(frozen=True)
class LocalNormParams:
    window: int = 20
    sigma_floor: float = 1e-6

    def __post_init__(self):
        if int(self.window) != self.window or self.window < 2:
            raise InvalidSpec(f"window must be an integer >= 2, got {self.window}")
        if self.sigma_floor < 0:
            raise InvalidSpec(f"sigma_floor must be >= 0, got {self.sigma_floor}")
        object.__setattr__(self, "window", int(self.window))
        object.__setattr__(self, "sigma_floor", float(self.sigma_floor))


def _tile_slices(height: int, width: int, window: int):
    for r0 in range(0, height, window):
        for c0 in range(0, width, window):
            yield slice(r0, min(r0 + window, height)), slice(c0, min(c0 + window, width))


def block_mean(smap: ScalarMap, window: int) -> ScalarMap:
    """Per-tile mean, broadcast back to every pixel of the tile."""
    out = np.empty_like(smap.values)
    for rs, cs in _tile_slices(smap.height, smap.width, window):
        out[rs, cs] = smap.values[rs, cs].mean()
    return ScalarMap(out)


def block_std(smap: ScalarMap, mu: ScalarMap, window: int) -> ScalarMap:
    """Per-tile population standard deviation (divide by the tile pixel
    count), broadcast back to every pixel of the tile."""
    out = np.empty_like(smap.values)
    for rs, cs in _tile_slices(smap.height, smap.width, window):
        tile = smap.values[rs, cs]
        out[rs, cs] = np.sqrt(np.mean((tile - mu.values[rs, cs]) ** 2))
    return ScalarMap(out)


def local_normalize(smap: ScalarMap, params: LocalNormParams) -> ScalarMap:
    mu = block_mean(smap, params.window)
    sigma = block_std(smap, mu, params.window)
    denom = sigma.values + params.sigma_floor
    # A zero denominator can only happen with sigma_floor == 0 on a flat
    # tile, where the numerator is zero as well; define the result as 0.
    out = np.divide(
        smap.values - mu.values,
        denom,
        out=np.zeros_like(smap.values),
        where=denom > 0,
    )
    return ScalarMap(out)
