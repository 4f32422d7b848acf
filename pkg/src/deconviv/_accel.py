"""Numba dispatch.

Hot kernels come in pairs: a loop version compiled with ``numba.njit`` and a
vectorised numpy version.  Set ``DECONVIV_NUMBA=0`` to force the numpy path
(numba is also skipped when it cannot be imported).
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and os.environ.get("DECONVIV_NUMBA", "1") != "0"


def njit(fn):
    """Compile ``fn`` with numba when available, else return it unchanged."""
    if numba is None:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


def dispatch(numba_impl, numpy_impl):
    return numba_impl if USE_NUMBA else numpy_impl
