"""Nonparametric triangular-model estimation with a mismeasured instrument.

The latent instrument is observed through two noisy measurements; its law is
recovered by characteristic-function deconvolution and plugged into kernel
estimates of conditional CDFs, from which the structural derivative and the
weighted local average response are assembled.
"""

from .charfn import FrequencyGrid, Sample, estimate_charfn
from .condist import cond_cdf_y, cond_quantile, cond_quantile_derivs, marginal_cdf_x
from .density import BandwidthSet, DensityQuery, EstimationContext, estimate_g, estimate_g_naive
from .errors import DeconvIVError, EstimationError, InputError
from .estimators import (RhoEstimate, WeightSpec, structural_derivative,
                         structural_derivative_averaged, wlar)
from .simulation import MCDesign, crossval_bandwidths, generate, run_mc, truth, tsls

__all__ = [
    "BandwidthSet", "DeconvIVError", "DensityQuery", "EstimationContext", "EstimationError",
    "FrequencyGrid", "InputError", "MCDesign", "RhoEstimate", "Sample", "WeightSpec",
    "cond_cdf_y", "cond_quantile", "cond_quantile_derivs", "crossval_bandwidths", "estimate_charfn",
    "estimate_g", "estimate_g_naive", "generate", "marginal_cdf_x", "run_mc",
    "structural_derivative", "structural_derivative_averaged", "truth", "tsls", "wlar",
]
__version__ = "0.1.0"
