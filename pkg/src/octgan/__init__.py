"""Desk-scale GAN toolkit built around octave and soft octave convolutions.

A small numpy-based autograd framework (:mod:`octgan.tensor`,
:mod:`octgan.ops`, :mod:`octgan.nn`), octave convolution layers with
scheduled soft variants (:mod:`octgan.octave`), DCGAN-style models and
training (:mod:`octgan.models`, :mod:`octgan.train`), and the two
diagnostics the toolkit exists for: an FID-proxy over a frozen feature
extractor (:mod:`octgan.fid`) and azimuthally averaged 1D power spectra
(:mod:`octgan.spectrum`).
"""

from .config import GanConfig, build_schedule, load_config, parse_config_text
from .errors import (CheckpointError, ConfigError, DatasetError,
                     DivergenceError, NumericError, OctganError, ShapeError)
from .fid import (FeatureExtractor, FidStats, extract_features, fid,
                  fid_from_images, fit_stats, matrix_sqrt_psd)
from .octave import (BetaSchedule, DualBatchNorm2d, OctaveConv2d,
                     OctaveConvTranspose2d, OctaveFeature, SoftOctaveConv2d,
                     SoftOctaveConvTranspose2d, as_octave, octave_merge,
                     octave_split, set_soft_betas, split_channels)
from .models import (Discriminator, Generator, build_discriminator,
                     build_generator, parameter_count, sample_latents)
from .rng import PortableRng
from .spectrum import (SpectrumProfile, band_power, high_band_slice,
                       power_spectrum_1d, profile_to_csv, spectrum_distance)
from .tensor import (Tensor, concat_channels, get_default_dtype, grad_enabled,
                     narrow_channels, no_grad, set_default_dtype, using_dtype)

__version__ = "0.1.0"

__all__ = [
    "BetaSchedule", "CheckpointError", "ConfigError", "DatasetError",
    "Discriminator", "DivergenceError", "DualBatchNorm2d", "FeatureExtractor",
    "FidStats", "GanConfig", "Generator", "NumericError", "OctaveConv2d",
    "OctaveConvTranspose2d", "OctaveFeature", "OctganError", "PortableRng",
    "ShapeError", "SoftOctaveConv2d", "SoftOctaveConvTranspose2d",
    "SpectrumProfile", "Tensor", "as_octave", "band_power",
    "build_discriminator", "build_generator", "build_schedule",
    "concat_channels", "extract_features", "fid", "fid_from_images",
    "fit_stats", "get_default_dtype", "grad_enabled", "high_band_slice",
    "load_config", "matrix_sqrt_psd", "narrow_channels", "no_grad",
    "octave_merge", "octave_split", "parameter_count", "parse_config_text",
    "power_spectrum_1d", "profile_to_csv", "sample_latents",
    "set_default_dtype", "set_soft_betas", "spectrum_distance",
    "split_channels", "using_dtype",
]
