"""Structural derivative and weighted local average response."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import condist
from .errors import AllPointsTrimmed, DegenerateDenominator, EstimationError


@dataclass(frozen=True)
class WeightSpec:
    """Quantile band ``[tau_l, tau_u]`` and instrument window ``[w_lo, w_hi]``."""

    tau_l: float
    tau_u: float
    w_lo: float
    w_hi: float
    n_delta: int = 11
    n_w: int = 11

    def __post_init__(self):
        if not (0.0 < self.tau_l < self.tau_u < 1.0):
            raise ValueError("need 0 < tau_l < tau_u < 1")
        if not self.w_lo < self.w_hi:
            raise ValueError("need w_lo < w_hi")
        if self.n_delta < 2 or self.n_w < 2:
            raise ValueError("n_delta and n_w must be at least 2")

    @property
    def deltas(self):
        return np.linspace(self.tau_l, self.tau_u, self.n_delta)

    @property
    def wstars(self):
        return np.linspace(self.w_lo, self.w_hi, self.n_w)


@dataclass(frozen=True)
class RhoEstimate:
    value: float
    components: dict = field(repr=False)
    wstar_used: float

    @staticmethod
    def assemble(c):
        return (-c["dF_dx"] / c["dF_dy"]
                + c["dF_dw"] / c["dF_dy"] * c["mdF_dx"] / c["mdF_dw"])


def structural_derivative(y_bar, x_bar, wstar, ctx):
    """Estimate of the structural derivative at ``(y_bar, x_bar)`` using ``wstar``.

    Raises :class:`DegenerateDenominator` when the point falls outside the
    trimmed region.
    """
    c = condist.cond_cdf_y(y_bar, x_bar, wstar, ctx)
    m = condist.marginal_cdf_x(x_bar, wstar, ctx)
    if abs(c.dF_dy) < ctx.tau:
        raise DegenerateDenominator(f"|dF/dy| = {abs(c.dF_dy):.3g} below tau = {ctx.tau:.3g}")
    if abs(m.dF_dw) < ctx.tau:
        raise DegenerateDenominator(
            f"|dF_X|W*/dw*| = {abs(m.dF_dw):.3g} below tau = {ctx.tau:.3g}")
    comps = {"dF_dx": c.dF_dx, "dF_dy": c.dF_dy, "dF_dw": c.dF_dw,
             "mdF_dx": m.dF_dx, "mdF_dw": m.dF_dw}
    return RhoEstimate(RhoEstimate.assemble(comps), comps, float(wstar))


@dataclass(frozen=True)
class AveragedRho:
    value: float
    used: tuple
    dropped: int


def structural_derivative_averaged(y_bar, x_bar, wstar_list, ctx):
    """Mean of :func:`structural_derivative` over the ``wstar`` values passing trimming."""
    vals, used = [], []
    for w in wstar_list:
        try:
            vals.append(structural_derivative(y_bar, x_bar, w, ctx).value)
        except DegenerateDenominator:
            continue
        used.append(float(w))
    if not vals:
        raise AllPointsTrimmed(f"all {len(wstar_list)} instrument values were trimmed")
    return AveragedRho(float(np.mean(vals)), tuple(used), len(wstar_list) - len(vals))


def wlar_integrand(delta, x, wstar, ctx):
    """``dq/dx - dq/dw* * (dF_X|W*/dx) / (dF_X|W*/dw*)`` at the ``delta``-quantile."""
    dqx, dqw = condist.cond_quantile_derivs(delta, x, wstar, ctx)
    m = condist.marginal_cdf_x(x, wstar, ctx)
    if abs(m.dF_dw) < ctx.tau:
        raise DegenerateDenominator(
            f"|dF_X|W*/dw*| = {abs(m.dF_dw):.3g} below tau = {ctx.tau:.3g} at w* = {wstar}")
    return dqx - dqw * m.dF_dx / m.dF_dw


def _trapezoid_weights(grid):
    h = np.diff(grid)
    w = np.zeros(len(grid))
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


def wlar(x, spec, ctx):
    """Weighted local average response at ``x``.

    The weight is uniform over the quantile band and proportional to
    ``f(x, w*)`` over the instrument window, normalized so that it
    integrates to one; ``f_X(x)`` cancels and is never estimated.
    Any trimmed grid node aborts the computation.
    """
    deltas, ws = spec.deltas, spec.wstars
    td, tw = _trapezoid_weights(deltas), _trapezoid_weights(ws)
    dens = np.array([condist.joint_density_xw(x, w, ctx) for w in ws])
    mass = float(tw @ dens)
    if not mass >= ctx.tau:
        raise DegenerateDenominator(f"normalizing integral {mass:.3g} below tau = {ctx.tau:.3g}")
    norm = (spec.tau_u - spec.tau_l) * mass
    total = 0.0
    for l, w in enumerate(ws):
        inner = sum(td[k] * wlar_integrand(d, x, w, ctx) for k, d in enumerate(deltas))
        total += tw[l] * dens[l] * inner
    out = total / norm
    if not math.isfinite(out):
        raise EstimationError("non-finite WLAR")
    return float(out)
