"""Closed-form Gaussian oracle for the linear design.

Under the linear design (Y, X, W*) is jointly normal, so Y | X, W* and
X | W* are univariate normal with affine means and every identification
functional has a closed form.  Nothing here is used by the estimators; it
exists to check the identification algebra and calibrate tests.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

RHO_TRUE = 0.25


def _design1_covariance():
    # W* ~ N(0, sd sqrt(.5)); theta ~ sd .5; eps1 ~ sd sqrt(.75); eta1 ~ sd .5
    var_w = 0.5
    var_theta = 0.25
    var_eps = var_theta + 0.75            # eps = theta + eps1
    var_eta = var_theta + 0.25            # eta = theta + eta1
    cov_eps_eta = var_theta
    # X = W* + eta
    var_x = var_w + var_eta
    cov_xw = var_w
    # Y = 0.25 X + 0.25 eps, Cov(X, eps) = Cov(eta, eps)
    cov_x_eps = cov_eps_eta
    var_y = 0.25**2 * var_x + 0.25**2 * var_eps + 2 * 0.25**2 * cov_x_eps
    cov_yx = 0.25 * var_x + 0.25 * cov_x_eps
    cov_yw = 0.25 * cov_xw
    return np.array([[var_y, cov_yx, cov_yw],
                     [cov_yx, var_x, cov_xw],
                     [cov_yw, cov_xw, var_w]])


@dataclass(frozen=True)
class GaussianTriple:
    """Joint normal law of (Y, X, W*)."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape != (3, 3) or not np.allclose(cov, cov.T):
            raise ValueError("covariance must be a symmetric 3x3 matrix")
        np.linalg.cholesky(cov)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))

    @classmethod
    def design1(cls):
        return cls(np.zeros(3), _design1_covariance())

    @property
    def y_given_xw(self):
        """(intercept, b_x, b_w, sd) of Y | X, W*."""
        s = self.cov
        b = np.linalg.solve(s[1:, 1:], s[1:, 0])
        var = s[0, 0] - s[0, 1:] @ b
        c = self.mean[0] - b @ self.mean[1:]
        return float(c), float(b[0]), float(b[1]), math.sqrt(var)

    @property
    def x_given_w(self):
        """(intercept, slope, sd) of X | W*."""
        s = self.cov
        a = s[1, 2] / s[2, 2]
        var = s[1, 1] - a * s[1, 2]
        return float(self.mean[1] - a * self.mean[2]), float(a), math.sqrt(var)


def _pdf(z):
    return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def exact_functionals(y, x, wstar, law=None):
    """The seven conditional-CDF functionals at ``(y, x, wstar)``."""
    law = law or GaussianTriple.design1()
    c, bx, bw, sd = law.y_given_xw
    z = (y - c - bx * x - bw * wstar) / sd
    cm, a, sx = law.x_given_w
    zx = (x - cm - a * wstar) / sx
    return {
        "F": float(ndtr(z)),
        "dF_dw": -_pdf(z) * bw / sd,
        "dF_dx": -_pdf(z) * bx / sd,
        "dF_dy": _pdf(z) / sd,
        "mF": float(ndtr(zx)),
        "mdF_dw": -_pdf(zx) * a / sx,
        "mdF_dx": _pdf(zx) / sx,
    }


def rho_from_functionals(fn):
    """Identification formula for the structural derivative."""
    return (-fn["dF_dx"] / fn["dF_dy"]
            + fn["dF_dw"] / fn["dF_dy"] * fn["mdF_dx"] / fn["mdF_dw"])


def exact_quantile(delta, x, wstar, law=None):
    law = law or GaussianTriple.design1()
    c, bx, bw, sd = law.y_given_xw
    return float(c + bx * x + bw * wstar + sd * ndtri(delta))


def exact_quantile_derivs(delta, x, wstar, law=None):
    """``(dq/dx, dq/dw*)``: the affine-mean slopes, free of ``delta``."""
    law = law or GaussianTriple.design1()
    _, bx, bw, _ = law.y_given_xw
    return bx, bw


def validation_grid(k=5):
    """Points ``(y, x, w*)`` spanning about two sd of each marginal."""
    s = np.sqrt(np.diag(_design1_covariance()))
    axes = [np.linspace(-1.5 * v, 1.5 * v, k) for v in s]
    return [(float(a), float(b), float(c)) for a in axes[0] for b in axes[1] for c in axes[2]]


def identification_check(k=5):
    """Max deviation from 0.25 of both identification representations on the grid."""
    worst_rho = worst_q = 0.0
    for y, x, w in validation_grid(k):
        fn = exact_functionals(y, x, w)
        worst_rho = max(worst_rho, abs(rho_from_functionals(fn) - RHO_TRUE))
        delta = fn["F"]
        dqx, dqw = exact_quantile_derivs(delta, x, w)
        worst_q = max(worst_q, abs(dqx - dqw * fn["mdF_dx"] / fn["mdF_dw"] - RHO_TRUE))
    return worst_rho, worst_q
