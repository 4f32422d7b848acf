r"""
Flat-top kernel family
======================

The kernel used in every smoothing direction is

.. math::

   K(u) = \frac{\sin^2(2\pi u) - \sin^2(\pi u)}{\pi^2 u^2},

whose Fourier transform is the trapezoid equal to one on
:math:`|\xi| \le 2\pi`, decreasing linearly to zero at :math:`|\xi| = 4\pi`.

The outcome and endogenous-regressor directions use :math:`K` as written.
The instrument direction uses the same shape rescaled so that its transform
is supported on :math:`[-1, 1]` (flat on :math:`[-1/2, 1/2]`); see
:func:`instrument_window`.

All public functions accept scalars or arrays and return ``float`` or
``ndarray`` accordingly.
"""

import math

import numpy as np

from ._accel import dispatch, njit

PI = math.pi
TWO_PI = 2.0 * math.pi
FOUR_PI = 4.0 * math.pi

#: frequency rescaling that maps the transform support of ``K`` onto [-1, 1]
UNIT_SUPPORT_SCALE = FOUR_PI
#: no rescaling: the instrument kernel is ``K`` itself
RAW_SCALE = 1.0

# switch radii for the removable singularities at u = 0
_K_TAYLOR_RADIUS = 1e-4
_KD_TAYLOR_RADIUS = 5e-2
_KK_TAYLOR_RADIUS = 1e-1
_SI_SERIES_LIMIT = 4.0


def _kernel_taylor_coeffs(n_terms):
    # K(u) = sum_k c_k u^(2k-2), from sin^2(x) = sum_k (-1)^(k+1) 2^(2k-1) x^(2k) / (2k)!
    out = np.empty(n_terms)
    for k in range(1, n_terms + 1):
        out[k - 1] = ((-1) ** (k + 1) * 2.0 ** (2 * k - 1) * PI ** (2 * k - 2)
                      * (4.0**k - 1.0) / math.factorial(2 * k))
    return out


def _selfconv_taylor_coeffs(n_terms):
    # (K*K)(u) = (1/pi) sum_k (-1)^k u^(2k)/(2k)! * int_0^{4pi} phi_K(xi)^2 xi^(2k) dxi
    out = np.empty(n_terms)
    for k in range(n_terms):
        j = 2 * k
        moment = TWO_PI ** (j + 1) * (
            1.0 / (j + 1)
            + 4.0 * (2.0 ** (j + 1) - 1.0) / (j + 1)
            - 4.0 * (2.0 ** (j + 2) - 1.0) / (j + 2)
            + (2.0 ** (j + 3) - 1.0) / (j + 3)
        )
        out[k] = (-1) ** k * moment / (PI * math.factorial(j))
    return out


_K_COEFFS = _kernel_taylor_coeffs(10)
_KD_COEFFS = np.array([c * (2 * k) for k, c in enumerate(_K_COEFFS[1:], start=1)])
_KK_COEFFS = _selfconv_taylor_coeffs(14)

# rational approximations of the auxiliary functions f, g for |x| > 4,
# Si(x) = pi/2 - f(x) cos(x) - g(x) sin(x)
_F_NUM = np.array([1.0, 7.44437068161936700618e2, 1.96396372895146869801e5,
                   2.37750310125431834034e7, 1.43073403821274636888e9,
                   4.33736238870432522765e10, 6.40533830574022022911e11,
                   4.20968180571076940208e12, 1.00795182980368574617e13,
                   4.94816688199951963482e12, -4.94701168645415959931e11])
_F_DEN = np.array([1.0, 7.46437068161927678031e2, 1.97865247031583951450e5,
                   2.41535670165126845144e7, 1.47478952192985464958e9,
                   4.58595115847765779830e10, 7.08501308149515401563e11,
                   5.06084464593475076774e12, 1.43468549171581016479e13,
                   1.11535493509914254097e13])
_G_NUM = np.array([1.0, 8.1359520115168615e2, 2.35239181626478200e5,
                   3.12557570795778731e7, 2.06297595146763354e9,
                   6.83052205423625007e10, 1.09049528450362786e12,
                   7.57664583257834349e12, 1.81004487464664575e13,
                   6.43291613143049485e12, -1.36517137670871689e12])
_G_DEN = np.array([1.0, 8.19595201151451564e2, 2.40036752835578777e5,
                   3.26026661647090822e7, 2.23355543278099360e9,
                   7.87465017341829930e10, 1.39866710696414565e12,
                   1.17164723371736605e13, 4.01839087307656620e13,
                   3.99653257887490811e13])


# ---------------------------------------------------------------------------
# scalar kernels (numba)
# ---------------------------------------------------------------------------

@njit
def _poly(coeffs, z):
    acc = 0.0
    for i in range(coeffs.shape[0] - 1, -1, -1):
        acc = acc * z + coeffs[i]
    return acc


@njit
def _si_scalar(x, f_num, f_den, g_num, g_den):
    ax = abs(x)
    if ax <= 4.0:
        x2 = x * x
        term = x
        acc = x
        k = 0
        while abs(term) > 1e-18 * abs(acc) and k < 40:
            k += 1
            term = -term * x2 / ((2 * k) * (2 * k + 1))
            acc += term / (2 * k + 1)
        return acc
    y = 1.0 / (ax * ax)
    f = _poly(f_num, y) / (ax * _poly(f_den, y))
    g = y * _poly(g_num, y) / _poly(g_den, y)
    val = 0.5 * math.pi - f * math.cos(ax) - g * math.sin(ax)
    return val if x > 0 else -val


@njit
def _k_scalar(u, coeffs):
    if abs(u) < 1e-4:
        u2 = u * u
        return coeffs[0] + u2 * (coeffs[1] + u2 * coeffs[2])
    s2 = math.sin(2.0 * math.pi * u)
    s1 = math.sin(math.pi * u)
    return (s2 * s2 - s1 * s1) / (math.pi * math.pi * u * u)


@njit
def _kd_scalar(u, coeffs):
    if abs(u) < 5e-2:
        u2 = u * u
        return u * _poly(coeffs, u2)
    a = 2.0 * math.pi * u
    b = math.pi * u
    num = math.sin(a) ** 2 - math.sin(b) ** 2
    dnum = 2.0 * math.pi * math.sin(2.0 * a) - math.pi * math.sin(2.0 * b)
    return (dnum * u - 2.0 * num) / (math.pi * math.pi * u * u * u)


@njit
def _kcdf_scalar(u, f_num, f_den, g_num, g_den):
    if u == 0.0:
        return 0.5
    # int sin^2(a t)/t^2 dt = a Si(2 a u) - sin^2(a u)/u
    s2 = math.sin(2.0 * math.pi * u)
    s1 = math.sin(math.pi * u)
    big = 2.0 * math.pi * _si_scalar(4.0 * math.pi * u, f_num, f_den, g_num, g_den)
    small = math.pi * _si_scalar(2.0 * math.pi * u, f_num, f_den, g_num, g_den)
    return 0.5 + (big - small - (s2 * s2 - s1 * s1) / u) / (math.pi * math.pi)


@njit
def _kk_scalar(u, coeffs):
    if abs(u) < 1e-1:
        return _poly(coeffs, u * u)
    tp = 2.0 * math.pi * u
    return (math.cos(tp) / (math.pi * u * u)
            + (math.sin(tp) - math.sin(2.0 * tp)) / (2.0 * math.pi * math.pi * u * u * u)) / math.pi


@njit
def _k_loop(u, coeffs):
    out = np.empty(u.shape[0])
    for i in range(u.shape[0]):
        out[i] = _k_scalar(u[i], coeffs)
    return out


@njit
def _kd_loop(u, coeffs):
    out = np.empty(u.shape[0])
    for i in range(u.shape[0]):
        out[i] = _kd_scalar(u[i], coeffs)
    return out


@njit
def _kcdf_loop(u, f_num, f_den, g_num, g_den):
    out = np.empty(u.shape[0])
    for i in range(u.shape[0]):
        out[i] = _kcdf_scalar(u[i], f_num, f_den, g_num, g_den)
    return out


@njit
def _si_loop(x, f_num, f_den, g_num, g_den):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        out[i] = _si_scalar(x[i], f_num, f_den, g_num, g_den)
    return out


@njit
def _kk_loop(u, coeffs):
    out = np.empty(u.shape[0])
    for i in range(u.shape[0]):
        out[i] = _kk_scalar(u[i], coeffs)
    return out


# ---------------------------------------------------------------------------
# numpy fallbacks
# ---------------------------------------------------------------------------

def _polyval(coeffs, z):
    acc = np.zeros_like(z)
    for c in coeffs[::-1]:
        acc = acc * z + c
    return acc


def _si_numpy(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    ax = np.abs(x)
    small = ax <= _SI_SERIES_LIMIT
    xs = x[small]
    x2 = xs * xs
    term = xs.copy()
    acc = xs.copy()
    for k in range(1, 25):
        term = -term * x2 / ((2 * k) * (2 * k + 1))
        acc = acc + term / (2 * k + 1)
    out[small] = acc
    xl = ax[~small]
    y = 1.0 / (xl * xl)
    f = _polyval(_F_NUM, y) / (xl * _polyval(_F_DEN, y))
    g = y * _polyval(_G_NUM, y) / _polyval(_G_DEN, y)
    out[~small] = np.sign(x[~small]) * (0.5 * PI - f * np.cos(xl) - g * np.sin(xl))
    return out


def _k_numpy(u):
    out = np.empty_like(u)
    near = np.abs(u) < _K_TAYLOR_RADIUS
    v = u[~near]
    out[~near] = (np.sin(TWO_PI * v) ** 2 - np.sin(PI * v) ** 2) / (PI * PI * v * v)
    u2 = u[near] ** 2
    out[near] = _K_COEFFS[0] + u2 * (_K_COEFFS[1] + u2 * _K_COEFFS[2])
    return out


def _kd_numpy(u):
    out = np.empty_like(u)
    near = np.abs(u) < _KD_TAYLOR_RADIUS
    v = u[~near]
    num = np.sin(TWO_PI * v) ** 2 - np.sin(PI * v) ** 2
    dnum = TWO_PI * np.sin(FOUR_PI * v) - PI * np.sin(TWO_PI * v)
    out[~near] = (dnum * v - 2.0 * num) / (PI * PI * v**3)
    out[near] = u[near] * _polyval(_KD_COEFFS, u[near] ** 2)
    return out


def _kcdf_numpy(u):
    out = np.full_like(u, 0.5)
    nz = u != 0.0
    v = u[nz]
    num = np.sin(TWO_PI * v) ** 2 - np.sin(PI * v) ** 2
    big = TWO_PI * _si_numpy(FOUR_PI * v)
    small = PI * _si_numpy(TWO_PI * v)
    out[nz] = 0.5 + (big - small - num / v) / (PI * PI)
    return out


def _kk_numpy(u):
    out = np.empty_like(u)
    near = np.abs(u) < _KK_TAYLOR_RADIUS
    v = u[~near]
    tp = TWO_PI * v
    out[~near] = (np.cos(tp) / (PI * v * v)
                  + (np.sin(tp) - np.sin(2.0 * tp)) / (2.0 * PI * PI * v**3)) / PI
    out[near] = _polyval(_KK_COEFFS, u[near] ** 2)
    return out


def _numba_si(x):
    return _si_loop(x, _F_NUM, _F_DEN, _G_NUM, _G_DEN)


def _numba_k(u):
    return _k_loop(u, _K_COEFFS)


def _numba_kd(u):
    return _kd_loop(u, _KD_COEFFS)


def _numba_kcdf(u):
    return _kcdf_loop(u, _F_NUM, _F_DEN, _G_NUM, _G_DEN)


def _numba_kk(u):
    return _kk_loop(u, _KK_COEFFS)


IMPLEMENTATIONS = {
    "numba": {"si": _numba_si, "k": _numba_k, "kd": _numba_kd,
              "kcdf": _numba_kcdf, "kk": _numba_kk},
    "numpy": {"si": _si_numpy, "k": _k_numpy, "kd": _kd_numpy,
              "kcdf": _kcdf_numpy, "kk": _kk_numpy},
}


def _apply(name, u):
    impl = dispatch(IMPLEMENTATIONS["numba"][name], IMPLEMENTATIONS["numpy"][name])
    arr = np.asarray(u, dtype=float)
    flat = np.ascontiguousarray(arr.ravel())
    out = impl(flat).reshape(arr.shape)
    return float(out) if np.ndim(u) == 0 else out


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------

def sine_integral(x):
    r"""Sine integral :math:`\mathrm{Si}(x) = \int_0^x \sin(t)/t\,dt`.

    Power series for :math:`|x| \le 4`, rational approximations of the
    auxiliary functions beyond.
    """
    return _apply("si", x)


def flattop_k(u):
    """Flat-top kernel value K(u); the removable singularity at 0 gives 3."""
    return _apply("k", u)


def flattop_k_deriv(u):
    """Derivative K'(u) (odd, zero at the origin)."""
    return _apply("kd", u)


def flattop_k_cdf(u):
    r"""Kernel CDF :math:`\tilde G(u) = \int_{-\infty}^u K(s)\,ds`.

    Built from the identity
    :math:`\int \sin^2(at)/t^2\,dt = a\,\mathrm{Si}(2at) - \sin^2(at)/t`.
    Not monotone: ``K`` has negative side lobes.
    """
    return _apply("kcdf", u)


def flattop_selfconv(u):
    r"""Self-convolution :math:`(K * K)(u)`, used by least-squares CV.

    Closed form of :math:`\pi^{-1}\int_0^{4\pi}\phi_K(\xi)^2\cos(\xi u)\,d\xi`,
    with a Taylor branch for small ``|u|``.
    """
    return _apply("kk", u)


def phi_k(xi):
    r"""Fourier transform :math:`\int K(u) e^{i\xi u}\,du`.

    One on :math:`|\xi| \le 2\pi`, ``2 - |xi|/(2 pi)`` up to :math:`4\pi`, zero
    beyond.
    """
    a = np.abs(np.asarray(xi, dtype=float))
    out = np.clip(2.0 - a / TWO_PI, 0.0, 1.0)
    return float(out) if np.ndim(xi) == 0 else out


def instrument_window(xi, scale=UNIT_SUPPORT_SCALE):
    """Transform of the instrument-direction kernel, ``phi_k(scale * xi)``.

    With the default scale the support is [-1, 1]; ``scale=1`` gives the
    transform of ``K`` itself.
    """
    return phi_k(scale * np.asarray(xi, dtype=float))


def window_support(scale=UNIT_SUPPORT_SCALE):
    """Half-width of the support of :func:`instrument_window`."""
    return FOUR_PI / scale


def instrument_kernel(u, scale=UNIT_SUPPORT_SCALE):
    """Kernel in data space whose transform is :func:`instrument_window`."""
    return flattop_k(np.asarray(u, dtype=float) / scale) / scale
