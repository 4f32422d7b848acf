import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from deconviv import oracle
from deconviv.oracle import GaussianTriple

coord = st.floats(-2.0, 2.0)
level = st.floats(0.01, 0.99)


def test_covariance_entries():
    cov = GaussianTriple.design1().cov
    assert cov[0, 1] == pytest.approx(0.3125, abs=1e-15)
    assert cov[0, 0] == pytest.approx(0.15625, abs=1e-15)
    assert cov[0, 2] == pytest.approx(0.125, abs=1e-15)
    assert cov[1, 1] == pytest.approx(1.0) and cov[1, 2] == pytest.approx(0.5)
    assert np.all(np.linalg.eigvalsh(cov) > 0)


def test_conditional_laws():
    law = GaussianTriple.design1()
    c, bx, bw, sd = law.y_given_xw
    assert (c, bx, bw) == pytest.approx((0.0, 0.375, -0.125), abs=1e-14)
    assert sd**2 == pytest.approx(0.0546875, abs=1e-14)
    assert law.x_given_w == pytest.approx((0.0, 1.0, math.sqrt(0.5)), abs=1e-14)


def test_rejects_invalid_covariance():
    with pytest.raises(ValueError):
        GaussianTriple(np.zeros(3), np.ones((2, 2)))
    with pytest.raises(np.linalg.LinAlgError):
        GaussianTriple(np.zeros(3), -np.eye(3))


def test_identification_at_published_point():
    assert oracle.rho_from_functionals(oracle.exact_functionals(0.0, 0.0, 0.7)) == pytest.approx(0.25, abs=1e-10)


def test_identification_grid():
    worst_rho, worst_q = oracle.identification_check(5)
    assert len(oracle.validation_grid(5)) == 125
    assert worst_rho < 1e-10 and worst_q < 1e-10


@given(coord, coord, coord)
def test_identification_everywhere(y, x, w):
    fn = oracle.exact_functionals(y, x, w)
    assert fn["dF_dy"] > 0
    assert oracle.rho_from_functionals(fn) == pytest.approx(0.25, abs=1e-10)


@given(level, coord, coord)
def test_wlar_integrand_constant(delta, x, w):
    dqx, dqw = oracle.exact_quantile_derivs(delta, x, w)
    fn = oracle.exact_functionals(0.0, x, w)
    assert dqx - dqw * fn["mdF_dx"] / fn["mdF_dw"] == pytest.approx(0.25, abs=1e-10)


def test_median_is_conditional_mean():
    assert oracle.exact_quantile(0.5, 0.4, -0.2) == pytest.approx(0.375 * 0.4 + 0.125 * 0.2, abs=1e-15)


def test_quantile_derivative_finite_difference():
    s = 1e-6
    _, dqw = oracle.exact_quantile_derivs(0.3, 0.0, 0.7)
    fd = (oracle.exact_quantile(0.3, 0.0, 0.7 + s) - oracle.exact_quantile(0.3, 0.0, 0.7 - s)) / (2 * s)
    assert fd == pytest.approx(dqw, abs=1e-8)


@given(coord, coord, coord)
def test_cdf_is_quantile_inverse(y, x, w):
    fn = oracle.exact_functionals(y, x, w)
    if 1e-9 < fn["F"] < 1 - 1e-9:
        assert oracle.exact_quantile(fn["F"], x, w) == pytest.approx(y, abs=1e-7)
