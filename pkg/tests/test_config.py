import pytest

from resift.config import ReSiftConfig, format_config, load_config, parse_config_text
from resift.errors import ConfigError

TABLE_DEFAULTS = {
    "f_size": "4",
    "f_sigma": "5",
    "kappa": "903.3",
    "epsilon": "0.008856",
    "W": "20",
    "g_size": "3",
    "h_size": "10",
    "h_sigma": "3.8",
    "thresh": "1.4",
    "perc": "5",
    "C1": "100000",
    "C2": "0.01",
}


def test_defaults_reproduce_standard_values():
    cfg = ReSiftConfig()
    assert cfg.filter.size == 4
    assert cfg.filter.sigma == 5.0
    assert cfg.color.kappa == 903.3
    assert cfg.color.epsilon == 0.008856
    assert cfg.norm.window == 20
    assert cfg.spectral.avg_size == 3
    assert cfg.spectral.smooth_size == 10
    assert cfg.spectral.smooth_sigma == 3.8
    assert cfg.match.ratio_thresh == 1.4
    assert cfg.perc == 5.0
    assert cfg.c1 == 100000.0
    assert cfg.c2 == 0.01


def test_format_contains_exact_lines():
    text = format_config(ReSiftConfig())
    for key, value in TABLE_DEFAULTS.items():
        assert f"{key} = {value}" in text.splitlines()


def test_roundtrip_through_text():
    cfg = ReSiftConfig()
    assert parse_config_text(format_config(cfg)) == cfg


def test_override_values(tmp_path):
    p = tmp_path / "cfg.txt"
    p.write_text("# tweaked\nperc = 10\nthresh = 1.6\nW = 16\nupsample = false\n")
    cfg = load_config(p)
    assert cfg.perc == 10.0
    assert cfg.match.ratio_thresh == 1.6
    assert cfg.norm.window == 16
    assert cfg.sift.upsample is False
    assert cfg.c1 == 100000.0


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown"):
        parse_config_text("perc = 5\nshiny = 1\n")


def test_malformed_line_rejected():
    with pytest.raises(ConfigError):
        parse_config_text("perc 5\n")
    with pytest.raises(ConfigError):
        parse_config_text("perc =\n")


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config_text("perc = 5\nperc = 6\n")


def test_invalid_value_rejected():
    with pytest.raises(ConfigError):
        parse_config_text("thresh = 0.9\n")
    with pytest.raises(ConfigError):
        parse_config_text("W = 20.5\n")
    with pytest.raises(ConfigError):
        parse_config_text("upsample = maybe\n")
    with pytest.raises(ConfigError):
        parse_config_text("regression = quadratic\n")


def test_comments_and_blanks_ignored():
    cfg = parse_config_text("\n# comment only\nperc = 7  # trailing\n\n")
    assert cfg.perc == 7.0
