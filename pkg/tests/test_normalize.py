import numpy as np
import pytest

from resift.errors import InvalidSpec
from resift.imageio import ScalarMap
from resift.normalize import LocalNormParams, block_mean, block_std, local_normalize


def tile_stats_oracle(values, window):
    """Nested-loop tiling reference for the block statistics."""
    h, w = values.shape
    mean = np.zeros_like(values)
    std = np.zeros_like(values)
    for r0 in range(0, h, window):
        for c0 in range(0, w, window):
            tile = values[r0 : r0 + window, c0 : c0 + window]
            acc = 0.0
            count = 0
            for v in tile.ravel():
                acc += v
                count += 1
            mu = acc / count
            var = 0.0
            for v in tile.ravel():
                var += (v - mu) ** 2
            mean[r0 : r0 + window, c0 : c0 + window] = mu
            std[r0 : r0 + window, c0 : c0 + window] = np.sqrt(var / count)
    return mean, std


def test_two_by_two_hand_values():
    m = ScalarMap(np.array([[1.0, 2.0], [3.0, 5.0]]))
    mu = block_mean(m, 2)
    assert np.allclose(mu.values, 2.75)
    sigma = block_std(m, mu, 2)
    assert np.allclose(sigma.values, np.sqrt(8.75 / 4.0))
    out = local_normalize(m, LocalNormParams(window=2, sigma_floor=1e-6))
    expected = np.array([[-1.1832, -0.5070], [0.1690, 1.5211]])
    assert np.allclose(out.values, expected, atol=1e-3)


def test_constant_map():
    m = ScalarMap(np.full((7, 9), 4.2))
    mu = block_mean(m, 4)
    assert np.allclose(mu.values, 4.2)
    sigma = block_std(m, mu, 4)
    assert np.allclose(sigma.values, 0.0)
    out = local_normalize(m, LocalNormParams(window=4))
    assert np.allclose(out.values, 0.0)


def test_partial_tiles_3x3_window_2():
    values = np.arange(9, dtype=float).reshape(3, 3) + 1
    mu_ref, std_ref = tile_stats_oracle(values, 2)
    m = ScalarMap(values)
    mu = block_mean(m, 2)
    sigma = block_std(m, mu, 2)
    assert np.allclose(mu.values, mu_ref, atol=1e-12)
    assert np.allclose(sigma.values, std_ref, atol=1e-12)


def test_block_stats_oracle_sweep():
    rng = np.random.default_rng(4)
    for _ in range(30):
        h, w = int(rng.integers(2, 45)), int(rng.integers(2, 45))
        window = int(rng.integers(2, 22))
        values = rng.normal(size=(h, w)) * 10
        mu_ref, std_ref = tile_stats_oracle(values, window)
        m = ScalarMap(values)
        mu = block_mean(m, window)
        sigma = block_std(m, mu, window)
        assert np.max(np.abs(mu.values - mu_ref)) < 1e-9
        assert np.max(np.abs(sigma.values - std_ref)) < 1e-9


def test_full_tiles_zero_mean_unit_std():
    rng = np.random.default_rng(5)
    values = rng.normal(size=(40, 40)) * 7 + 3
    out = local_normalize(ScalarMap(values), LocalNormParams(window=20, sigma_floor=1e-6)).values
    for r0 in (0, 20):
        for c0 in (0, 20):
            tile = out[r0 : r0 + 20, c0 : c0 + 20]
            assert abs(tile.mean()) < 1e-9
            assert abs(np.sqrt((tile**2).mean()) - 1.0) < 1e-3


def test_shift_invariance():
    rng = np.random.default_rng(6)
    values = rng.normal(size=(30, 25))
    params = LocalNormParams(window=7, sigma_floor=1e-6)
    a = local_normalize(ScalarMap(values), params).values
    b = local_normalize(ScalarMap(values + 123.0), params).values
    assert np.max(np.abs(a - b)) < 1e-9


def test_scale_invariance_with_zero_floor():
    rng = np.random.default_rng(7)
    values = rng.normal(size=(24, 24))  # no flat tiles
    params = LocalNormParams(window=6, sigma_floor=0.0)
    a = local_normalize(ScalarMap(values), params).values
    b = local_normalize(ScalarMap(values * 37.5), params).values
    assert np.max(np.abs(a - b)) < 1e-9


def test_param_validation():
    with pytest.raises(InvalidSpec):
        LocalNormParams(window=1)
    with pytest.raises(InvalidSpec):
        LocalNormParams(window=20, sigma_floor=-1e-9)
