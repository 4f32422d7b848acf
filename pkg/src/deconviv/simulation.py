"""Monte Carlo designs, comparison estimators, replication engine and
cross-validated bandwidth selection.

Table parameters are read as (mean, standard deviation).  That is the only
reading under which the components add up: in the linear design
``Var(theta) + Var(eps1) = 0.5**2 + 0.75 = 1 = Var(eps)`` and
``Var(theta) + Var(eta1) = 0.5**2 + 0.5**2 = 0.5 = Var(eta)``; in the
nonlinear design ``0.5 + 0.5 = 1`` for both.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import expit, ndtri

from . import kernels
from ._accel import dispatch, njit
from .charfn import Sample
from .density import BandwidthSet, EstimationContext
from .errors import (Design2DomainError, EmptyCandidateGrid, EstimationError, TooManyFailures,
                     ZeroCovariance)
from .estimators import WeightSpec, structural_derivative, wlar

log = logging.getLogger(__name__)

ESTIMATOR_TAGS = ("deconv_rho", "naive_rho", "tsls", "deconv_wlar")
MAX_FAILURE_SHARE = 0.10
D2_SCALE = 27.0 / 256.0          # 3**3 / 4**4


@dataclass(frozen=True)
class MCDesign:
    """Distribution parameters (mean, sd) of the latent components."""

    id: str
    wstar: tuple
    theta: tuple
    eps1: tuple
    eta1: tuple
    dw1_sd: float = math.sqrt(0.5)

    @classmethod
    def design1(cls):
        return cls("Design1", (0.0, math.sqrt(0.5)), (0.0, 0.5), (0.0, math.sqrt(0.75)), (0.0, 0.5))

    @classmethod
    def design2(cls):
        r = math.sqrt(0.5)
        return cls("Design2", (6.0, 1.0), (-3.0, r), (3.0, r), (-3.0, r))

    @classmethod
    def from_name(cls, name):
        key = str(name).lower().replace("_", "").replace("-", "")
        if key in ("design1", "1", "d1", "linear"):
            return cls.design1()
        if key in ("design2", "2", "d2", "nonlinear"):
            return cls.design2()
        raise ValueError(f"unknown design {name!r}")

    def structural(self, wstar, eps, eta):
        """Outcome and regressor from the latent draws."""
        if self.id == "Design1":
            x = wstar + eta
            return 0.25 * x + 0.25 * eps, x
        if np.any(eta >= 0):
            raise Design2DomainError("eta must be negative in the nonlinear design")
        x = D2_SCALE * wstar**4 / (-eta) ** 3
        return np.logaddexp(x + eps, 0.0), x


@dataclass(frozen=True)
class Latent:
    wstar: np.ndarray
    eps: np.ndarray
    eta: np.ndarray


def substream(master_seed, r):
    """Independent generator for replication ``r``."""
    return np.random.default_rng(np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(r),)))


def generate(design, n, rng):
    """Draw ``n`` observations; returns ``(Sample, Latent)``.

    In the nonlinear design a non-negative ``eta`` (probability about 1e-9)
    is redrawn.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    theta = rng.normal(*design.theta, n)
    eps1 = rng.normal(*design.eps1, n)
    eta1 = rng.normal(*design.eta1, n)
    wstar = rng.normal(*design.wstar, n)
    dw1 = rng.normal(0.0, design.dw1_sd, n)
    dw2 = -2.0 * np.log(rng.uniform(size=n)) - 2.0    # chi2(2) - 2
    if design.id == "Design2":
        bad = theta + eta1 >= 0
        while np.any(bad):
            log.warning("redrawing %d non-negative eta draws", int(bad.sum()))
            k = int(bad.sum())
            theta[bad] = rng.normal(*design.theta, k)
            eta1[bad] = rng.normal(*design.eta1, k)
            bad = theta + eta1 >= 0
    eps = theta + eps1
    eta = theta + eta1
    y, x = design.structural(wstar, eps, eta)
    return Sample(y, x, wstar + dw1, wstar + dw2), Latent(wstar, eps, eta)


# ---------------------------------------------------------------------------
# population truths
# ---------------------------------------------------------------------------

def _d2_wlar_truth(x, spec, design):
    """Nonlinear-design WLAR by deterministic quadrature.

    Given ``(x, w*)`` the first-stage error is pinned down,
    ``-eta = (c w*^4 / x)^(1/3)``, and ``eps | eta`` is normal, so the
    integrand ``dm/dx = logistic(x + eps)`` at the ``delta``-quantile of
    ``eps`` is explicit.  The weight is ``f_{X,W*}(x, w*)``.
    """
    mt, st = design.theta
    me, se = design.eps1
    mh, sh = design.eta1
    mw, sw = design.wstar
    var_eta = st**2 + sh**2
    beta = st**2 / var_eta
    cond_mean0 = mt + me
    cond_sd = math.sqrt(st**2 + se**2 - beta * st**2)
    mean_eta = mt + mh

    def parts(w):
        neg_eta = (D2_SCALE * w**4 / x) ** (1.0 / 3.0)
        eta = -neg_eta
        f_w = math.exp(-0.5 * ((w - mw) / sw) ** 2) / (sw * math.sqrt(2 * math.pi))
        f_eta = math.exp(-0.5 * (eta - mean_eta) ** 2 / var_eta) / math.sqrt(2 * math.pi * var_eta)
        dens = f_w * f_eta * neg_eta / (3.0 * x)
        mu = cond_mean0 + beta * (eta - mean_eta)
        return dens, mu

    def inner(w):
        dens, mu = parts(w)
        val = integrate.quad(lambda d: expit(x + mu + cond_sd * ndtri(d)), spec.tau_l, spec.tau_u,
                             epsabs=1e-13, epsrel=1e-12)[0]
        return dens * val

    num = integrate.quad(inner, spec.w_lo, spec.w_hi, epsabs=1e-14, epsrel=1e-12)[0]
    den = integrate.quad(lambda w: parts(w)[0], spec.w_lo, spec.w_hi, epsabs=1e-14, epsrel=1e-12)[0]
    return num / ((spec.tau_u - spec.tau_l) * den)


def truth(design, target, point):
    """Population value of ``target`` ("rho" or "wlar") at ``point``.

    ``point`` is ``(y, x, w*)`` for rho and ``(x, WeightSpec)`` for wlar.
    """
    if target == "rho":
        if design.id == "Design1":
            return 0.25
        # dm/dx = e^(x+eps)/(e^(x+eps)+1) = 1 - e^(-y) for m = log(e^(x+eps) + 1)
        return -math.expm1(-float(point[0]))
    if target == "wlar":
        if design.id == "Design1":
            return 0.25
        x, spec = point
        if x <= 0:
            raise Design2DomainError("the nonlinear design needs x > 0")
        return _d2_wlar_truth(float(x), spec, design)
    raise ValueError(f"unknown target {target!r}")


def tsls(sample, intercept=False):
    """Linear IV slope using ``w2`` as the instrument.

    By default the just-identified IV estimator without a constant,
    ``sum(y w2) / sum(x w2)``, which is what the published comparison
    figures correspond to; ``intercept=True`` gives the covariance ratio.
    """
    w = sample.w2
    x, y = sample.x, sample.y
    if intercept:
        w = w - w.mean()
        x = x - x.mean()
        y = y - y.mean()
    sxw = float(np.dot(x, w)) / (sample.n - 1)
    if abs(sxw) < 1e-12:
        raise ZeroCovariance(f"|cov(x, w2)| = {abs(sxw):.3g}")
    return float(np.dot(y, w)) / (sample.n - 1) / sxw


# ---------------------------------------------------------------------------
# replication engine
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MCReport:
    design: str
    estimator: str
    n: int
    reps: int
    bandwidths: tuple
    truth: float
    mse: float
    var: float
    abs_bias: float
    failures: int
    seed: int
    estimates: np.ndarray = field(repr=False, compare=False)

    COLUMNS = ("design", "estimator", "h1", "h21", "h22", "n", "reps", "truth",
               "mse", "var", "abs_bias", "failures", "seed")

    def row(self):
        h1, h21, h22 = self.bandwidths if self.bandwidths else ("", "", "")
        return {"design": self.design, "estimator": self.estimator, "h1": h1, "h21": h21,
                "h22": h22, "n": self.n, "reps": self.reps, "truth": self.truth, "mse": self.mse,
                "var": self.var, "abs_bias": self.abs_bias, "failures": self.failures,
                "seed": self.seed}


def estimate_once(sample, tag, bw, point, **ctx_kw):
    """One estimate of the quantity named by ``tag``."""
    if tag == "tsls":
        return tsls(sample)
    if tag in ("deconv_rho", "naive_rho"):
        ctx = EstimationContext(sample, bw, naive=(tag == "naive_rho"), **ctx_kw)
        return structural_derivative(*point, ctx).value
    if tag == "deconv_wlar":
        ctx = EstimationContext(sample, bw, **ctx_kw)
        return wlar(point[0], point[1], ctx)
    raise ValueError(f"unknown estimator tag {tag!r}")


def _replicate(design, tag, n, bw, point, seed, r, ctx_kw):
    sample, _ = generate(design, n, substream(seed, r))
    try:
        return estimate_once(sample, tag, bw, point, **ctx_kw)
    except EstimationError as exc:
        log.info("replication %d failed: %s", r, exc)
        return math.nan


def summarize(estimates, truth_value):
    """``(mse, var, abs_bias)`` of the finite estimates."""
    est = np.asarray(estimates, dtype=float)
    est = est[np.isfinite(est)]
    mean = float(np.mean(est))
    var = float(np.mean((est - mean) ** 2))
    bias = mean - truth_value
    return var + bias**2, var, abs(bias)


def run_mc(design, tag, n, reps, bw=None, point=None, seed=0, n_jobs=1, truth_value=None, **ctx_kw):
    """Replicate ``tag`` ``reps`` times and summarize against the truth.

    Replications that raise an estimation error are excluded and counted;
    more than 10% failures raises :class:`TooManyFailures`.
    """
    if tag not in ESTIMATOR_TAGS:
        raise ValueError(f"unknown estimator tag {tag!r}")
    if reps < 1:
        raise ValueError("reps must be at least 1")
    if tag != "tsls" and bw is None:
        raise ValueError(f"{tag} needs bandwidths")
    if point is None:
        point = default_point(design, tag)
    if truth_value is None:
        if tag == "deconv_wlar":
            truth_value = truth(design, "wlar", point)
        else:
            truth_value = truth(design, "rho", point if tag != "tsls" else default_point(design, "deconv_rho"))
    if n_jobs == 1:
        est = [_replicate(design, tag, n, bw, point, seed, r, ctx_kw) for r in range(reps)]
    else:
        from joblib import Parallel, delayed
        est = Parallel(n_jobs=n_jobs)(
            delayed(_replicate)(design, tag, n, bw, point, seed, r, ctx_kw) for r in range(reps))
    est = np.asarray(est, dtype=float)
    failures = int(np.sum(~np.isfinite(est)))
    if failures > MAX_FAILURE_SHARE * reps or failures == reps:
        raise TooManyFailures(f"{failures} of {reps} replications failed", failures)
    mse, var, abs_bias = summarize(est, truth_value)
    bws = (bw.h1, bw.h21, bw.h22) if bw is not None else None
    return MCReport(design.id, tag, n, reps, bws, float(truth_value), mse, var, abs_bias,
                    failures, int(seed), est)


def default_point(design, tag):
    """Evaluation points used in the published experiments."""
    if tag == "deconv_wlar":
        if design.id == "Design1":
            return (0.0, WeightSpec(0.25, 0.35, 0.70, 0.90))
        return (0.6, WeightSpec(0.25, 0.35, 6.0, 6.23))
    return (0.0, 0.0, 0.7) if design.id == "Design1" else (0.6, 0.6, 7.0)


# ---------------------------------------------------------------------------
# least-squares cross-validation for the (Y, X) kernel density
# ---------------------------------------------------------------------------

@njit
def _lscv_pairs_numba(y, x, h21, h22, kc, kkc):
    n = y.shape[0]
    s_conv = 0.0
    s_loo = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            uy = (y[i] - y[j]) / h21
            ux = (x[i] - x[j]) / h22
            s_conv += kernels._kk_scalar(uy, kkc) * kernels._kk_scalar(ux, kkc)
            s_loo += kernels._k_scalar(uy, kc) * kernels._k_scalar(ux, kc)
    diag = kernels._kk_scalar(0.0, kkc) ** 2
    return 2.0 * s_conv + n * diag, 2.0 * s_loo


def _lscv_sums_numba(y, x, h21, h22):
    return _lscv_pairs_numba(y, x, h21, h22, kernels._K_COEFFS, kernels._KK_COEFFS)


def _lscv_sums_numpy(y, x, h21, h22):
    iu = np.triu_indices(len(y), 1)
    uy = (y[:, None] - y[None, :])[iu] / h21
    ux = (x[:, None] - x[None, :])[iu] / h22
    kk0 = kernels.flattop_selfconv(0.0)
    s_conv = 2.0 * np.sum(kernels.flattop_selfconv(uy) * kernels.flattop_selfconv(ux)) + len(y) * kk0**2
    s_loo = 2.0 * np.sum(kernels.flattop_k(uy) * kernels.flattop_k(ux))
    return float(s_conv), float(s_loo)


lscv_impls = {"numba": _lscv_sums_numba, "numpy": _lscv_sums_numpy}


def lscv_score(sample, h21, h22):
    """Estimated integrated squared error (up to a constant) of the (Y, X) density estimate."""
    impl = dispatch(_lscv_sums_numba, _lscv_sums_numpy)
    n = sample.n
    s_conv, s_loo = impl(sample.y, sample.x, float(h21), float(h22))
    return s_conv / (n * n * h21 * h22) - 2.0 * s_loo / (n * (n - 1) * h21 * h22)


def crossval_bandwidths(sample, candidates):
    """Candidate ``(h21, h22)`` minimizing the LSCV score; ties go to larger bandwidths."""
    cands = [(float(a), float(b)) for a, b in candidates]
    if not cands:
        raise EmptyCandidateGrid("no candidate bandwidths supplied")
    scores = [lscv_score(sample, a, b) for a, b in cands]
    best = min(range(len(cands)), key=lambda i: (scores[i], -cands[i][0] * cands[i][1], -cands[i][0]))
    return cands[best]


def published_candidate_grid():
    """Grid bracketing the published cross-validated bandwidths."""
    return [(a, b) for a in np.round(np.arange(0.5, 2.01, 0.05), 2)
            for b in np.round(np.arange(1.0, 5.01, 0.1), 2)]
