"""Full-reference image quality estimation by SIFT descriptor matching over
reliability-weighted lightness maps, plus a correlation benchmark harness."""

from .bench import (
    BenchmarkRecord,
    RegressionParams,
    fit_regression,
    parse_manifest,
    pearson,
    run_benchmark,
    spearman,
)
from .config import ReSiftConfig, format_config, load_config, parse_config_text
from .errors import ResiftError
from .imageio import RgbImage, ScalarMap, dump_map, load_image, load_map
from .matching import MatchParams, MatchSet, geometric_filter, match_descriptors
from .normalize import LocalNormParams, block_mean, block_std, local_normalize
from .prefilter import (
    ColorTransformParams,
    GaussianKernelSpec,
    convolve_replicate,
    make_gaussian_kernel,
    preprocess,
    rgb_to_lightness,
)
from .saliency import (
    SpectralParams,
    Spectrum,
    compute_saliency,
    forward_spectrum,
    inverse_spectrum,
    multiplicative_pool,
    reconstruct_saliency,
    spectral_residual,
)
from .score import QualityResult, nonlinear_map, percentile_threshold, pooled_map, resift_score
from .sift import Descriptor, Keypoint, SiftParams, build_scale_space, extract

__version__ = "0.1.0"

__all__ = [
    "BenchmarkRecord",
    "ColorTransformParams",
    "Descriptor",
    "GaussianKernelSpec",
    "Keypoint",
    "LocalNormParams",
    "MatchParams",
    "MatchSet",
    "QualityResult",
    "ReSiftConfig",
    "RegressionParams",
    "ResiftError",
    "RgbImage",
    "ScalarMap",
    "SiftParams",
    "SpectralParams",
    "Spectrum",
    "block_mean",
    "block_std",
    "build_scale_space",
    "compute_saliency",
    "convolve_replicate",
    "dump_map",
    "extract",
    "fit_regression",
    "format_config",
    "forward_spectrum",
    "geometric_filter",
    "inverse_spectrum",
    "load_config",
    "load_image",
    "load_map",
    "local_normalize",
    "make_gaussian_kernel",
    "match_descriptors",
    "multiplicative_pool",
    "nonlinear_map",
    "parse_config_text",
    "parse_manifest",
    "pearson",
    "percentile_threshold",
    "pooled_map",
    "preprocess",
    "reconstruct_saliency",
    "resift_score",
    "rgb_to_lightness",
    "run_benchmark",
    "spearman",
    "spectral_residual",
    "__version__",
]
