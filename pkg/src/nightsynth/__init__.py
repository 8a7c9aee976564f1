"""Day-to-night raw Bayer synthesis toolkit.

Turns daytime raw captures into aligned clean/noisy synthetic nighttime
pairs: calibration dictionaries for night illuminants and brightness,
spatially varying relighting, heteroscedastic sensor noise, burst
averaging for ground truth, a minimal ISP for sRGB renders, and an
evaluation metric suite.
"""

from .bayer import (
    BayerStack,
    Illuminant,
    apply_illuminant,
    average_burst,
    denormalize,
    mean_intensity,
    normalize,
    stack_mosaic,
    unstack_mosaic,
    white_balance,
)
from .dictionaries import (
    BrightnessModel,
    IlluminantModel,
    fit_brightness,
    fit_illuminant_gaussian,
    load_brightness,
    load_illuminants,
    measure_gray_card,
    sample_brightness,
    sample_illuminants,
    save_brightness,
    save_illuminants,
)
from .isp import apply_ccm, demosaic, gamma_encode, render
from .metrics import (
    EvalRow,
    MetricsReport,
    angular_error,
    delta_e,
    psnr,
    srgb_to_lab,
    ssim,
    write_report,
)
from .noise import (
    NoiseParams,
    add_noise,
    estimate_noise_params,
    load_noise_params,
    save_noise_params,
)
from .raw_io import (
    CFA_PATTERNS,
    RawFormatError,
    RawImage,
    RawMeta,
    read_png,
    read_raw,
    write_png,
    write_raw,
)
from .synthesis import (
    LightSource,
    RelightConfig,
    SceneRecord,
    dim,
    effective_wb,
    gaussian_mask,
    read_manifest,
    relight,
    replay_record,
    sample_light_sources,
    synthesize_night,
    write_manifest,
)

__version__ = "0.1.0"

__all__ = [
    "BayerStack",
    "BrightnessModel",
    "CFA_PATTERNS",
    "EvalRow",
    "Illuminant",
    "IlluminantModel",
    "LightSource",
    "MetricsReport",
    "NoiseParams",
    "RawFormatError",
    "RawImage",
    "RawMeta",
    "RelightConfig",
    "SceneRecord",
    "add_noise",
    "angular_error",
    "apply_ccm",
    "apply_illuminant",
    "average_burst",
    "delta_e",
    "demosaic",
    "denormalize",
    "dim",
    "effective_wb",
    "estimate_noise_params",
    "fit_brightness",
    "fit_illuminant_gaussian",
    "gamma_encode",
    "gaussian_mask",
    "load_brightness",
    "load_illuminants",
    "load_noise_params",
    "mean_intensity",
    "measure_gray_card",
    "normalize",
    "psnr",
    "read_manifest",
    "read_png",
    "read_raw",
    "relight",
    "render",
    "replay_record",
    "sample_brightness",
    "sample_illuminants",
    "sample_light_sources",
    "save_brightness",
    "save_illuminants",
    "save_noise_params",
    "srgb_to_lab",
    "ssim",
    "stack_mosaic",
    "synthesize_night",
    "unstack_mosaic",
    "white_balance",
    "write_manifest",
    "write_png",
    "write_raw",
    "write_report",
]
