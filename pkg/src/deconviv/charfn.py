"""Empirical characteristic functions and recovery of the latent instrument CF.

Everything is evaluated on the non-negative half of a symmetric frequency
grid and extended to negative frequencies by conjugation, so Hermitian
symmetry holds exactly.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._accel import dispatch, njit
from .errors import EmptySample, IllPosedDenominator, InvalidSample

DEFAULT_M = 512
DEFAULT_EPS_DENOM = 1e-3


@dataclass(frozen=True)
class Sample:
    """Observed columns: outcome, endogenous regressor, two instrument measurements."""

    y: np.ndarray
    x: np.ndarray
    w1: np.ndarray
    w2: np.ndarray

    def __post_init__(self):
        cols = {}
        for name in ("y", "x", "w1", "w2"):
            arr = np.ascontiguousarray(np.asarray(getattr(self, name), dtype=float))
            if arr.ndim != 1:
                raise InvalidSample(f"column {name} must be one-dimensional")
            cols[name] = arr
            object.__setattr__(self, name, arr)
        n = {len(a) for a in cols.values()}
        if len(n) != 1:
            raise InvalidSample("columns y, x, w1, w2 must have equal length")
        size = n.pop()
        if size == 0:
            raise EmptySample("sample has no observations")
        if size < 2:
            raise InvalidSample("sample needs at least two observations")
        for name, arr in cols.items():
            if not np.all(np.isfinite(arr)):
                raise InvalidSample(f"column {name} contains NaN or Inf")

    @property
    def n(self):
        return len(self.y)

    def concat(self, other):
        return Sample(*(np.concatenate([getattr(self, c), getattr(other, c)])
                        for c in ("y", "x", "w1", "w2")))


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform symmetric grid ``-t_max, ..., 0, ..., t_max`` with ``2m + 1`` points."""

    t_max: float
    m: int = DEFAULT_M
    values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not (self.t_max > 0 and math.isfinite(self.t_max)):
            raise ValueError("t_max must be positive and finite")
        if self.m < 64:
            raise ValueError("m must be at least 64")
        half = np.arange(self.m + 1) * (self.t_max / self.m)
        half[-1] = self.t_max
        vals = np.concatenate([-half[:0:-1], half])
        object.__setattr__(self, "values", vals)

    @property
    def dt(self):
        return self.t_max / self.m

    @property
    def half(self):
        """Non-negative frequencies ``0, dt, ..., t_max``."""
        return self.values[self.m:]

    def trapezoid_weights(self):
        w = np.full(2 * self.m + 1, self.dt)
        w[0] = w[-1] = 0.5 * self.dt
        return w

    def refined(self, factor=2):
        return FrequencyGrid(self.t_max, self.m * factor)

    def mirror(self, half_values):
        """Full-grid array from values on the non-negative half (Hermitian extension)."""
        half_values = np.asarray(half_values)
        return np.concatenate([np.conj(half_values[:0:-1]), half_values])


@dataclass(frozen=True)
class CharFnEstimates:
    grid: FrequencyGrid
    phi_w2: np.ndarray
    theta: np.ndarray
    phi_wstar: np.ndarray
    min_abs_phi_w2: float

    @property
    def ratio(self):
        """``phi_wstar / phi_w2`` on the full grid."""
        return self.phi_wstar / self.phi_w2


# ---------------------------------------------------------------------------
# trigonometric sums: out[k] = (1/n) sum_j c_j exp(i t_k x_j)
# ---------------------------------------------------------------------------

@njit
def _trig_sum_numba(t, x, coef):
    n = x.shape[0]
    out_re = np.zeros(t.shape[0])
    out_im = np.zeros(t.shape[0])
    for k in range(t.shape[0]):
        tk = t[k]
        re = 0.0
        im = 0.0
        for j in range(n):
            a = tk * x[j]
            re += coef[j] * math.cos(a)
            im += coef[j] * math.sin(a)
        out_re[k] = re / n
        out_im[k] = im / n
    return out_re, out_im


def _trig_sum_numpy(t, x, coef, chunk=256):
    out = np.empty(t.shape[0], dtype=complex)
    for s in range(0, t.shape[0], chunk):
        phase = np.exp(1j * np.outer(t[s:s + chunk], x))
        out[s:s + chunk] = phase @ coef
    return out / x.shape[0]


def _trig_sum_numba_wrapped(t, x, coef):
    re, im = _trig_sum_numba(t, x, coef)
    return re + 1j * im


trig_sum_impls = {"numba": _trig_sum_numba_wrapped, "numpy": _trig_sum_numpy}


def trig_sum(t, x, coef):
    impl = dispatch(_trig_sum_numba_wrapped, _trig_sum_numpy)
    return impl(np.ascontiguousarray(t, dtype=float), np.ascontiguousarray(x, dtype=float),
                np.ascontiguousarray(coef, dtype=float))


# ---------------------------------------------------------------------------

def ecf(sample, weight_column, grid):
    """Weighted empirical CF of ``w2`` on ``grid``.

    ``weight_column`` is ``"ones"`` for the plain ECF or ``"w1"`` for
    the sample average of ``W1 exp(i t W2)``.
    """
    if sample.n == 0:
        raise EmptySample("sample has no observations")
    if weight_column == "ones":
        coef = np.ones(sample.n)
    elif weight_column == "w1":
        coef = sample.w1
    else:
        raise ValueError(f"unknown weight column {weight_column!r}")
    half = trig_sum(grid.half, sample.w2, coef)
    if weight_column == "ones":
        half[0] = 1.0
    else:
        half[0] = complex(np.mean(sample.w1), 0.0)
    return grid.mirror(half)


def estimate_phi_wstar(phi_w2, theta, grid, eps_denom=DEFAULT_EPS_DENOM):
    """Latent instrument CF from the two measurement CFs.

    Integrates ``i theta / phi_w2`` from 0 by the trapezoid rule on the
    half-grid, exponentiates, and mirrors.  Raises
    :class:`IllPosedDenominator` when ``|phi_w2|`` drops below ``eps_denom``
    anywhere on the grid.
    """
    if eps_denom <= 0:
        raise ValueError("eps_denom must be positive")
    m = grid.m
    ph = np.asarray(phi_w2)[m:]
    th = np.asarray(theta)[m:]
    min_abs = float(np.min(np.abs(ph)))
    if min_abs < eps_denom:
        raise IllPosedDenominator(
            f"min |phi_W2| = {min_abs:.3g} < eps_denom = {eps_denom:.3g} on |t| <= {grid.t_max:.4g}; "
            "shrink t_max or enlarge h1")
    integrand = 1j * th / ph
    cum = np.empty(m + 1, dtype=complex)
    cum[0] = 0.0
    np.cumsum(0.5 * grid.dt * (integrand[1:] + integrand[:-1]), out=cum[1:])
    half = np.exp(cum)
    half[0] = 1.0
    return grid.mirror(half)


def estimate_charfn(sample, grid, eps_denom=DEFAULT_EPS_DENOM):
    """All three CF arrays for ``sample`` on ``grid``."""
    phi_w2 = ecf(sample, "ones", grid)
    theta = ecf(sample, "w1", grid)
    phi_wstar = estimate_phi_wstar(phi_w2, theta, grid, eps_denom)
    return CharFnEstimates(grid, phi_w2, theta, phi_wstar,
                           float(np.min(np.abs(phi_w2[grid.m:]))))
