import itertools

import numpy as np
import pytest

from deconviv import kernels
from deconviv.charfn import FrequencyGrid, Sample, estimate_charfn
from deconviv.density import (MODES, BandwidthSet, DensityQuery, EstimationContext, default_grid,
                              estimate_g, estimate_g_naive, query_coefficients)
from deconviv.errors import GridTooCoarse

from conftest import PUBLISHED_BW

COMBOS = [(l, ym, xm) for l, ym, xm in itertools.product((0, 1), MODES, MODES)
          if not (ym == xm == "kernel_deriv")]


def make_query(lam, ym, xm, w=0.7, y=0.1, x=-0.2):
    return DensityQuery(lam, ym, xm, w,
                        None if ym == "integrate_out" else y,
                        None if xm == "integrate_out" else x)


@pytest.fixture(scope="module")
def cf500(sample500):
    return estimate_charfn(sample500, default_grid(PUBLISHED_BW.h1))


@pytest.mark.parametrize("lam, ym, xm", COMBOS)
def test_fast_path_matches_direct_quadrature(sample500, ctx500, cf500, lam, ym, xm):
    q = make_query(lam, ym, xm)
    direct = estimate_g(q, sample500, PUBLISHED_BW, cf500)
    assert ctx500.g(q) == pytest.approx(direct.value, abs=1e-12)
    assert not direct.flagged


def test_estimate_is_real_up_to_rounding(sample500, cf500):
    est = estimate_g(make_query(0, "kernel", "kernel"), sample500, PUBLISHED_BW, cf500)
    assert est.imag_residual < 1e-12


def test_noiseless_degeneracy_to_direct_kde(design1):
    from deconviv import simulation
    _, lat = simulation.generate(design1, 500, simulation.substream(99, 0))
    y, x = design1.structural(lat.wstar, lat.eps, lat.eta)
    s = Sample(y, x, lat.wstar, lat.wstar)
    ctx = EstimationContext(s, PUBLISHED_BW, eps_denom=1e-8)
    h1 = PUBLISHED_BW.h1
    for w in (-0.5, 0.0, 0.7):
        for ym, xm in [("kernel", "kernel"), ("kernel_cdf", "kernel"), ("integrate_out", "kernel_cdf")]:
            q = make_query(0, ym, xm, w=w)
            coef = query_coefficients(q, s, PUBLISHED_BW)
            kde = np.mean(coef * kernels.instrument_kernel((s.w2 - w) / h1) / h1)
            assert ctx.g(q) == pytest.approx(kde, abs=1e-3)


def test_naive_is_plain_kde(sample500):
    bw = PUBLISHED_BW
    q = make_query(0, "kernel", "kernel_cdf")
    coef = query_coefficients(q, sample500, bw)
    kde = np.mean(coef * kernels.flattop_k((sample500.w2 - q.wstar) / bw.h1) / bw.h1)
    assert estimate_g_naive(q, sample500, bw).value == pytest.approx(kde, abs=1e-6)
    ctx = EstimationContext(sample500, bw, naive=True)
    assert ctx.g(q) == pytest.approx(kde, abs=1e-6)


def test_linearity_in_coefficients(ctx500, sample500):
    a = ctx500.factor("kernel", 0.1, "y")
    b = ctx500.factor("kernel_cdf", -0.3, "x")
    lhs = ctx500.g_coef(2.0 * a - 3.0 * b, 0.4)
    rhs = 2.0 * ctx500.g_coef(a, 0.4) - 3.0 * ctx500.g_coef(b, 0.4)
    assert lhs == pytest.approx(rhs, abs=1e-13)
    stacked = ctx500.g_coef(np.vstack([a, b]), 0.4)
    assert stacked.shape == (2,)


def test_resolution_doubling(sample500):
    q = make_query(1, "kernel_cdf", "kernel")
    a = EstimationContext(sample500, PUBLISHED_BW, m=512).g(q)
    b = EstimationContext(sample500, PUBLISHED_BW, m=1024).g(q)
    assert abs(a - b) < 1e-6


def test_grid_too_coarse(sample500):
    cf = estimate_charfn(sample500, FrequencyGrid(0.5, 128))
    with pytest.raises(GridTooCoarse):
        estimate_g(make_query(0, "kernel", "kernel"), sample500, PUBLISHED_BW, cf)


@pytest.mark.parametrize("kwargs", [
    dict(lambda1=2, y_mode="kernel", x_mode="kernel", wstar=0.0, y=0.0, x=0.0),
    dict(lambda1=0, y_mode="bogus", x_mode="kernel", wstar=0.0, y=0.0, x=0.0),
    dict(lambda1=0, y_mode="kernel", x_mode="kernel", wstar=0.0, x=0.0),
    dict(lambda1=0, y_mode="integrate_out", x_mode="kernel", wstar=0.0, y=1.0, x=0.0),
    dict(lambda1=0, y_mode="kernel_deriv", x_mode="kernel_deriv", wstar=0.0, y=0.0, x=0.0),
])
def test_query_validation(kwargs):
    with pytest.raises(ValueError):
        DensityQuery(**kwargs)


@pytest.mark.parametrize("h", [(0, 1, 1), (1, -1, 1), (1, 1, float("inf"))])
def test_bandwidth_validation(h):
    with pytest.raises(ValueError):
        BandwidthSet(*h)


@pytest.mark.parametrize("scale", [kernels.UNIT_SUPPORT_SCALE, kernels.RAW_SCALE])
@pytest.mark.parametrize("w", [0.0, 0.8])
def test_population_cf_injection_vs_quadrature(sample500, scale, w):
    from scipy import integrate
    from deconviv.charfn import CharFnEstimates, ecf
    grid = default_grid(1.0, 1024, scale)
    phi_w2 = ecf(sample500, "ones", grid)
    cf = CharFnEstimates(grid, phi_w2, phi_w2, np.exp(-0.25 * grid.values**2), 0.0)
    q = DensityQuery(0, "integrate_out", "integrate_out", w)
    got = estimate_g(q, sample500, BandwidthSet(1.0, 1.0, 1.0), cf, scale).value
    f = lambda t: np.exp(-0.25 * t * t) * kernels.instrument_window(t, scale) * np.cos(t * w)
    edge = kernels.window_support(scale)
    want = integrate.quad(f, 0, edge, points=[edge / 2], epsabs=1e-13, limit=400)[0] / np.pi
    assert got == pytest.approx(want, abs=1e-6)
