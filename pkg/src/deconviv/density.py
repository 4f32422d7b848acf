r"""
Deconvolution estimator of the latent joint density and its partial integrals
=============================================================================

For a query ``(lambda1, y_mode, x_mode, point)`` the estimate is

.. math::

   \hat g = \frac{1}{2\pi}\int (-it)^{\lambda_1} e^{-itw^*}\,
            \phi_W(h_1 t)\,\hat\Phi(t)\,
            \frac{\hat\phi_{W^*}(t)}{\hat\phi_{W_2}(t)}\,dt,
   \qquad
   \hat\Phi(t) = \frac1n\sum_j e^{itW_{2j}}\,c_j(y, x),

where :math:`c_j` is the product of a y-factor and an x-factor chosen by the
two modes.  Because :math:`c_j` does not depend on :math:`t`, the same sum can
be regrouped as :math:`\frac1n\sum_j c_j L_{\lambda_1}(W_{2j} - w^*)` with a
data-driven deconvolution kernel :math:`L`.  :func:`estimate_g` evaluates the
first form literally; :class:`EstimationContext` caches :math:`L` per
:math:`w^*` and is what the conditional-distribution code uses.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .charfn import DEFAULT_EPS_DENOM, DEFAULT_M, FrequencyGrid, estimate_charfn, trig_sum
from .errors import GridTooCoarse

MODES = ("kernel", "kernel_deriv", "kernel_cdf", "integrate_out")
DEFAULT_TAU = 1e-3


@dataclass(frozen=True)
class BandwidthSet:
    h1: float
    h21: float
    h22: float

    def __post_init__(self):
        for name in ("h1", "h21", "h22"):
            v = float(getattr(self, name))
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"bandwidth {name} must be positive and finite, got {v}")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class DensityQuery:
    lambda1: int
    y_mode: str
    x_mode: str
    wstar: float
    y: float = None
    x: float = None

    def __post_init__(self):
        if self.lambda1 not in (0, 1):
            raise ValueError("lambda1 must be 0 or 1")
        for axis, mode in (("y", self.y_mode), ("x", self.x_mode)):
            if mode not in MODES:
                raise ValueError(f"unknown {axis}_mode {mode!r}")
            absent = getattr(self, axis) is None
            if absent != (mode == "integrate_out"):
                raise ValueError(f"{axis} must be given unless {axis}_mode is integrate_out")
        if self.y_mode == "kernel_deriv" and self.x_mode == "kernel_deriv":
            raise ValueError("at most one of y_mode, x_mode may be kernel_deriv")


@dataclass(frozen=True)
class DensityEstimate:
    value: float
    imag_residual: float
    grid_used: FrequencyGrid

    @property
    def flagged(self):
        return self.imag_residual > 0.01 * max(1.0, abs(self.value))


def mode_factor(mode, point, data, h):
    """Per-observation factor for one smoothing direction."""
    if mode == "integrate_out":
        return np.ones_like(data)
    u = (point - data) / h
    if mode == "kernel":
        return kernels.flattop_k(u) / h
    if mode == "kernel_deriv":
        return kernels.flattop_k_deriv(u) / (h * h)
    if mode == "kernel_cdf":
        return kernels.flattop_k_cdf(u)
    raise ValueError(f"unknown mode {mode!r}")


def query_coefficients(query, sample, bw):
    return (mode_factor(query.y_mode, query.y, sample.y, bw.h21)
            * mode_factor(query.x_mode, query.x, sample.x, bw.h22))


def default_grid(h1, m=DEFAULT_M, scale=kernels.UNIT_SUPPORT_SCALE):
    """Grid whose end point is the support edge of the instrument window."""
    return FrequencyGrid(kernels.window_support(scale) / h1, m)


def _check_grid(grid, h1, scale):
    need = kernels.window_support(scale) / h1
    if grid.t_max < need * (1.0 - 1e-12):
        raise GridTooCoarse(f"grid t_max = {grid.t_max:.6g} < window support {need:.6g}")


def _fourier_sum(query, sample, bw, grid, ratio, scale):
    t = grid.values
    coef = query_coefficients(query, sample, bw)
    big_phi = grid.mirror(trig_sum(grid.half, sample.w2, coef))
    integrand = (kernels.instrument_window(bw.h1 * t, scale) * big_phi * ratio
                 * np.exp(-1j * t * query.wstar))
    if query.lambda1 == 1:
        integrand = integrand * (-1j * t)
    total = np.sum(grid.trapezoid_weights() * integrand) / (2.0 * math.pi)
    return DensityEstimate(float(total.real), float(abs(total.imag)), grid)


def estimate_g(query, sample, bw, cf, scale=kernels.UNIT_SUPPORT_SCALE):
    """Deconvolution estimate of one density functional, by direct quadrature."""
    _check_grid(cf.grid, bw.h1, scale)
    return _fourier_sum(query, sample, bw, cf.grid, cf.ratio, scale)


def estimate_g_naive(query, sample, bw, grid=None, scale=kernels.RAW_SCALE):
    """Same functional treating ``w2`` as if it were the latent instrument.

    The CF ratio is replaced by one, so this is an ordinary kernel estimate
    of the density of ``(y, x, w2)``.  By default the instrument direction
    uses the kernel ``K`` itself at bandwidth ``h1``.
    """
    if grid is None:
        grid = default_grid(bw.h1, scale=scale)
    _check_grid(grid, bw.h1, scale)
    return _fourier_sum(query, sample, bw, grid, np.ones(grid.values.shape, dtype=complex), scale)


class EstimationContext:
    """Sample, bandwidths and CF estimates prepared for repeated queries.

    Parameters
    ----------
    sample : Sample
    bw : BandwidthSet
    m : int
        Half-grid size of the frequency grid.
    eps_denom : float
        Guard on ``|phi_W2|`` (see :func:`~deconviv.charfn.estimate_phi_wstar`).
    tau : float
        Trimming threshold for density denominators.
    naive : bool
        Replace the CF ratio by one (plug-in with ``w2`` as the instrument).
    scale : float, optional
        Instrument-window frequency scale; defaults to the unit-support
        kernel for the deconvolution estimator and ``K`` itself when naive.
    """

    def __init__(self, sample, bw, *, m=DEFAULT_M, eps_denom=DEFAULT_EPS_DENOM,
                 tau=DEFAULT_TAU, naive=False, scale=None, cf=None):
        if scale is None:
            scale = kernels.RAW_SCALE if naive else kernels.UNIT_SUPPORT_SCALE
        self.sample = sample
        self.bw = bw
        self.tau = float(tau)
        self.naive = naive
        self.scale = scale
        self.eps_denom = eps_denom
        if cf is not None:
            _check_grid(cf.grid, bw.h1, scale)
            grid = cf.grid
        else:
            grid = default_grid(bw.h1, m, scale)
        self.grid = grid
        if naive:
            self.cf = None
            ratio = np.ones(grid.m + 1, dtype=complex)
        else:
            self.cf = cf if cf is not None else estimate_charfn(sample, grid, eps_denom)
            ratio = self.cf.ratio[grid.m:]
        t = grid.half
        self._t = t
        base = (grid.trapezoid_weights()[grid.m:] * kernels.instrument_window(bw.h1 * t, scale)
                * ratio / (2.0 * math.pi))
        # the full symmetric sum is 2 Re of the half sum with the t = 0 term halved
        base[0] *= 0.5
        self._base = base
        self._phase = np.exp(1j * np.outer(sample.w2, t))
        self._weights = {}

    def deconv_weights(self, wstar, lambda1=0):
        """``L(W2_j - wstar)`` for every observation (cached)."""
        key = (float(wstar), int(lambda1))
        out = self._weights.get(key)
        if out is None:
            f = self._base * np.exp(-1j * self._t * wstar)
            if lambda1 == 1:
                f = f * (-1j * self._t)
            out = 2.0 * (self._phase @ f).real
            self._weights[key] = out
        return out

    def g(self, query):
        """Fast-path value of :func:`estimate_g` for ``query``."""
        coef = query_coefficients(query, self.sample, self.bw)
        return float(np.mean(coef * self.deconv_weights(query.wstar, query.lambda1)))

    def g_coef(self, coef, wstar, lambda1=0):
        """Functional for precomputed per-observation coefficients.

        ``coef`` may be ``(n,)`` or ``(k, n)``; the result has shape ``()`` or ``(k,)``.
        """
        w = self.deconv_weights(wstar, lambda1)
        return np.asarray(coef) @ w / self.sample.n

    def factor(self, mode, point, axis):
        data, h = (self.sample.y, self.bw.h21) if axis == "y" else (self.sample.x, self.bw.h22)
        return mode_factor(mode, point, data, h)
