"""Conditional CDFs, their partial derivatives, conditional quantiles and
quantile derivatives, all assembled from density-functional estimates.

Notation inside this module (all at a fixed ``(x, w*)``)::

    A0(y) = int_{-inf}^y g000     A1(y) = int_{-inf}^y g100     Ax(y) = int_{-inf}^y g001
    D     = int g000 dy  (= f_{X,W*})   D1 = int g100 dy   Dx = int g001 dy
    f(y)  = g000(y)
    T0    = int int g000 dy dx  (= f_{W*})   T1 = int int g100 dy dx
    M0    = int_{-inf}^x int g000 dy ds      M1 = same with g100
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, isotonic_regression

from .errors import DegenerateDenominator, QuantileBracketFailure

CDF_GRID_SIZE = 256
BRACKET_PAD = 5.0
QUANTILE_TOL = 1e-8


@dataclass(frozen=True)
class CondCdfDerivs:
    """``F_{Y|X=x,W*=w*}(y)`` and its partial derivatives."""

    F: float
    dF_dw: float
    dF_dx: float
    dF_dy: float
    denom_fxw: float
    point_density: float


@dataclass(frozen=True)
class MarginalCdfDerivs:
    """``F_{X|W*=w*}(x)`` and its partial derivatives."""

    F: float
    dF_dw: float
    dF_dx: float
    denom_fw: float


def _check_denominator(value, tau, what):
    if not abs(value) >= tau:
        raise DegenerateDenominator(f"|{what}| = {abs(value):.3g} below trimming threshold tau = {tau:.3g}")


def _x_pieces(x, wstar, ctx):
    """(D, Dx, D1) with their x-factors, cached per point."""
    key = ("x", float(x), float(wstar))
    hit = ctx.__dict__.setdefault("_cond_cache", {}).get(key)
    if hit is None:
        kx = ctx.factor("kernel", x, "x")
        kxd = ctx.factor("kernel_deriv", x, "x")
        d, dx = ctx.g_coef(np.vstack([kx, kxd]), wstar, 0)
        d1 = float(ctx.g_coef(kx, wstar, 1))
        hit = (kx, kxd, float(d), float(dx), d1)
        ctx._cond_cache[key] = hit
    return hit


def joint_density_xw(x, wstar, ctx):
    """``f_{X,W*}(x, w*)`` estimate (the conditional-CDF denominator)."""
    return _x_pieces(x, wstar, ctx)[2]


def cond_cdf_y(y, x, wstar, ctx):
    """Conditional CDF of Y given (X, W*) with its three partial derivatives.

    Raises :class:`DegenerateDenominator` if ``|f_{X,W*}(x, w*)| < ctx.tau``.
    """
    kx, kxd, d, dx, d1 = _x_pieces(x, wstar, ctx)
    _check_denominator(d, ctx.tau, "f_XW*(x, w*)")
    gy = ctx.factor("kernel_cdf", y, "y")
    ky = ctx.factor("kernel", y, "y")
    a0, f, ax = ctx.g_coef(np.vstack([gy * kx, ky * kx, gy * kxd]), wstar, 0)
    a1 = float(ctx.g_coef(gy * kx, wstar, 1))
    F = a0 / d
    return CondCdfDerivs(
        F=float(F),
        dF_dw=float(a1 / d - a0 * d1 / d**2),
        dF_dx=float(ax / d - a0 * dx / d**2),
        dF_dy=float(f / d),
        denom_fxw=d,
        point_density=float(f),
    )


def marginal_cdf_x(x, wstar, ctx):
    """Conditional CDF of X given W* with its two partial derivatives."""
    key = ("m", float(x), float(wstar))
    cache = ctx.__dict__.setdefault("_cond_cache", {})
    if key in cache:
        return cache[key]
    _, _, d, _, _ = _x_pieces(x, wstar, ctx)
    gx = ctx.factor("kernel_cdf", x, "x")
    ones = np.ones_like(gx)
    m0, t0 = ctx.g_coef(np.vstack([gx, ones]), wstar, 0)
    m1, t1 = ctx.g_coef(np.vstack([gx, ones]), wstar, 1)
    _check_denominator(t0, ctx.tau, "f_W*(w*)")
    out = MarginalCdfDerivs(
        F=float(m0 / t0),
        dF_dw=float(m1 / t0 - m0 * t1 / t0**2),
        dF_dx=float(d / t0),
        denom_fw=float(t0),
    )
    cache[key] = out
    return out


class CdfCurve:
    """Estimated ``y -> F_{Y|X=x,W*=w*}(y)`` on a grid, raw and isotonized."""

    def __init__(self, x, wstar, ctx, size=CDF_GRID_SIZE, pad=BRACKET_PAD):
        kx, _, d, _, _ = _x_pieces(x, wstar, ctx)
        _check_denominator(d, ctx.tau, "f_XW*(x, w*)")
        s = ctx.sample
        h = ctx.bw.h21
        self.x, self.wstar, self.ctx = x, wstar, ctx
        self.denom = d
        self._kx = kx
        self.y = np.linspace(s.y.min() - pad * h, s.y.max() + pad * h, size)
        gy = ctx.factor("kernel_cdf", self.y[:, None], "y")
        self.raw = ctx.g_coef(gy * kx, wstar, 0) / d
        self.iso = isotonic_regression(self.raw).x
        self.n_violations = int(np.sum(np.diff(self.raw) < 0))

    def raw_at(self, y):
        gy = self.ctx.factor("kernel_cdf", y, "y")
        return float(self.ctx.g_coef(gy * self._kx, self.wstar, 0)) / self.denom

    def _cell(self, y):
        return int(np.clip(np.searchsorted(self.y, y) - 1, 0, len(self.y) - 2))

    def _untouched(self, k):
        return (self.raw[k] == self.iso[k] and self.raw[k + 1] == self.iso[k + 1]
                and self.raw[k] < self.raw[k + 1])

    def evaluate(self, y):
        """Monotone CDF used for inversion.

        Inside grid cells that isotonization left unchanged this is the raw
        estimate (clipped to the cell's end values); inside pooled cells it
        is the linear interpolant of the isotonized values.
        """
        k = self._cell(y)
        if self.y[0] <= y <= self.y[-1] and self._untouched(k):
            return float(np.clip(self.raw_at(y), self.iso[k], self.iso[k + 1]))
        return float(np.interp(y, self.y, self.iso))

    def inverse(self, delta, tol=QUANTILE_TOL):
        """Solve ``evaluate(y) = delta``.

        Bisection on the interpolant of the isotonized grid values locates the
        cell; in unchanged cells the root is then polished on the raw estimate.
        """
        if not (self.iso[0] <= delta <= self.iso[-1]):
            raise QuantileBracketFailure(
                f"isotonized CDF spans [{self.iso[0]:.4g}, {self.iso[-1]:.4g}], does not reach {delta}")
        lo, hi = self.y[0], self.y[-1]
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if np.interp(mid, self.y, self.iso) < delta:
                lo = mid
            else:
                hi = mid
        q = 0.5 * (lo + hi)
        k = self._cell(q)
        if self._untouched(k) and self.raw[k] <= delta <= self.raw[k + 1]:
            q = brentq(lambda v: self.raw_at(v) - delta, self.y[k], self.y[k + 1], xtol=1e-13, rtol=1e-15)
        return float(q)


def cdf_curve(x, wstar, ctx):
    cache = ctx.__dict__.setdefault("_cond_cache", {})
    key = ("curve", float(x), float(wstar))
    if key not in cache:
        cache[key] = CdfCurve(x, wstar, ctx)
    return cache[key]


def cond_quantile(delta, x, wstar, ctx):
    """Conditional ``delta``-quantile of Y given (X, W*) = (x, wstar)."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    return cdf_curve(x, wstar, ctx).inverse(delta)


def quantile_derivs_at(q, delta, x, wstar, ctx):
    """Quantile derivatives ``(dq/dx, dq/dw*)`` with the quantile ``q`` given."""
    kx, kxd, d, dx, d1 = _x_pieces(x, wstar, ctx)
    gy = ctx.factor("kernel_cdf", q, "y")
    ky = ctx.factor("kernel", q, "y")
    f, ax = ctx.g_coef(np.vstack([ky * kx, gy * kxd]), wstar, 0)
    a1 = float(ctx.g_coef(gy * kx, wstar, 1))
    _check_denominator(f, ctx.tau, "f_YXW*(q, x, w*)")
    return float((delta * dx - ax) / f), float((delta * d1 - a1) / f)


def cond_quantile_derivs(delta, x, wstar, ctx):
    """``(dq/dx, dq/dw*)`` of the conditional quantile at level ``delta``."""
    q = cond_quantile(delta, x, wstar, ctx)
    return quantile_derivs_at(q, delta, x, wstar, ctx)
