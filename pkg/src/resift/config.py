"""Aggregate configuration for the whole scoring pipeline.

Defaults reproduce the estimator's standard parameter set exactly.  Config
files are flat ``key = value`` text with ``#`` comments; keys use the canonical
parameter names (f_size, f_sigma, kappa, epsilon, W, g_size, h_size,
h_sigma, thresh, perc, C1, C2) plus the implementation-decision constants.
Unknown keys are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import ConfigError, InvalidSpec
from .matching import MatchParams
from .normalize import LocalNormParams
from .prefilter import ColorTransformParams, GaussianKernelSpec
from .saliency import SpectralParams
from .sift import SiftParams

REGRESSION_VARIANTS = ("literal", "canonical")


@dataclass(frozen=True)
class ReSiftConfig:
    filter: GaussianKernelSpec = field(default_factory=lambda: GaussianKernelSpec(4, 5.0))
    color: ColorTransformParams = field(default_factory=ColorTransformParams)
    norm: LocalNormParams = field(default_factory=LocalNormParams)
    spectral: SpectralParams = field(default_factory=SpectralParams)
    sift: SiftParams = field(default_factory=SiftParams)
    match: MatchParams = field(default_factory=MatchParams)
    perc: float = 5.0
    c1: float = 100000.0
    c2: float = 0.01
    regression: str = "literal"

    def __post_init__(self):
        if not (0 < self.perc <= 100):
            raise InvalidSpec(f"perc must lie in (0, 100], got {self.perc}")
        if not (self.c1 > 0):
            raise InvalidSpec("C1 must be positive")
        if not (self.c2 > 0):
            raise InvalidSpec("C2 must be positive")
        if self.regression not in REGRESSION_VARIANTS:
            raise InvalidSpec(f"regression must be one of {REGRESSION_VARIANTS}")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float) and value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return str(value)


def config_items(cfg: ReSiftConfig) -> list:
    """Effective configuration as (key, value) pairs, config-file order."""
    return [
        ("f_size", cfg.filter.size),
        ("f_sigma", cfg.filter.sigma),
        ("kappa", cfg.color.kappa),
        ("epsilon", cfg.color.epsilon),
        ("gamma", cfg.color.gamma),
        ("W", cfg.norm.window),
        ("sigma_floor", cfg.norm.sigma_floor),
        ("g_size", cfg.spectral.avg_size),
        ("h_size", cfg.spectral.smooth_size),
        ("h_sigma", cfg.spectral.smooth_sigma),
        ("log_floor", cfg.spectral.log_floor),
        ("input_scale", cfg.sift.input_scale),
        ("levels_per_octave", cfg.sift.levels_per_octave),
        ("base_sigma", cfg.sift.base_sigma),
        ("assumed_blur", cfg.sift.assumed_blur),
        ("peak_threshold", cfg.sift.peak_threshold),
        ("edge_threshold", cfg.sift.edge_threshold),
        ("upsample", cfg.sift.upsample),
        ("thresh", cfg.match.ratio_thresh),
        ("geo_radius", cfg.match.geo_radius),
        ("perc", cfg.perc),
        ("C1", cfg.c1),
        ("C2", cfg.c2),
        ("regression", cfg.regression),
    ]


def format_config(cfg: ReSiftConfig) -> str:
    """Render the effective configuration as a loadable config file."""
    lines = [f"{key} = {_fmt(value)}" for key, value in config_items(cfg)]
    lines.append("# RGB->XYZ matrix (Adobe RGB 1998) and reference white:")
    for row in cfg.color.matrix:
        lines.append("#   {:.5f} {:.5f} {:.5f}".format(*row))
    lines.append("#   white_point = {:.6f} {:.6f} {:.6f}".format(*cfg.color.white_point))
    return "\n".join(lines) + "\n"


def _parse_bool(raw: str, key: str) -> bool:
    lower = raw.lower()
    if lower in ("true", "1", "yes"):
        return True
    if lower in ("false", "0", "no"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {raw!r}")


def parse_config_text(text: str, base: ReSiftConfig = None) -> ReSiftConfig:
    cfg = base if base is not None else ReSiftConfig()
    values = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw_line!r}")
        key, _, raw_value = line.partition("=")
        key = key.strip()
        raw_value = raw_value.strip()
        if not key or not raw_value:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw_line!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = (raw_value, lineno)
    return _apply_values(cfg, values)


def _apply_values(cfg: ReSiftConfig, values: dict) -> ReSiftConfig:
    def take_float(key, current):
        if key not in values:
            return current
        raw, lineno = values.pop(key)
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {key} must be a number, got {raw!r}") from exc

    def take_int(key, current):
        v = take_float(key, None)
        if v is None:
            return current
        if v != int(v):
            raise ConfigError(f"{key} must be an integer, got {v}")
        return int(v)

    try:
        filter_spec = GaussianKernelSpec(
            size=take_int("f_size", cfg.filter.size),
            sigma=take_float("f_sigma", cfg.filter.sigma),
        )
        color = ColorTransformParams(
            matrix=cfg.color.matrix,
            kappa=take_float("kappa", cfg.color.kappa),
            epsilon=take_float("epsilon", cfg.color.epsilon),
            gamma=take_float("gamma", cfg.color.gamma),
            white_point=cfg.color.white_point,
        )
        norm = LocalNormParams(
            window=take_int("W", cfg.norm.window),
            sigma_floor=take_float("sigma_floor", cfg.norm.sigma_floor),
        )
        spectral = SpectralParams(
            avg_size=take_int("g_size", cfg.spectral.avg_size),
            smooth_size=take_int("h_size", cfg.spectral.smooth_size),
            smooth_sigma=take_float("h_sigma", cfg.spectral.smooth_sigma),
            log_floor=take_float("log_floor", cfg.spectral.log_floor),
        )
        upsample = cfg.sift.upsample
        if "upsample" in values:
            raw, _ = values.pop("upsample")
            upsample = _parse_bool(raw, "upsample")
        sift = SiftParams(
            octaves=cfg.sift.octaves,
            levels_per_octave=take_int("levels_per_octave", cfg.sift.levels_per_octave),
            base_sigma=take_float("base_sigma", cfg.sift.base_sigma),
            assumed_blur=take_float("assumed_blur", cfg.sift.assumed_blur),
            peak_threshold=take_float("peak_threshold", cfg.sift.peak_threshold),
            edge_threshold=take_float("edge_threshold", cfg.sift.edge_threshold),
            input_scale=take_float("input_scale", cfg.sift.input_scale),
            upsample=upsample,
        )
        match = MatchParams(
            ratio_thresh=take_float("thresh", cfg.match.ratio_thresh),
            geo_radius=take_float("geo_radius", cfg.match.geo_radius),
        )
        regression = cfg.regression
        if "regression" in values:
            raw, lineno = values.pop("regression")
            regression = raw
        new_cfg = ReSiftConfig(
            filter=filter_spec,
            color=color,
            norm=norm,
            spectral=spectral,
            sift=sift,
            match=match,
            perc=take_float("perc", cfg.perc),
            c1=take_float("C1", cfg.c1),
            c2=take_float("C2", cfg.c2),
            regression=regression,
        )
    except InvalidSpec as exc:
        raise ConfigError(str(exc)) from exc
    if values:
        unknown = ", ".join(sorted(values))
        raise ConfigError(f"unknown configuration keys: {unknown}")
    return new_cfg


def load_config(path, base: ReSiftConfig = None) -> ReSiftConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, base)


def with_octaves(cfg: ReSiftConfig, octaves) -> ReSiftConfig:
    return replace(cfg, sift=replace(cfg.sift, octaves=octaves))
