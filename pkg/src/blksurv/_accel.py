"""Numba toggle for the hot numeric kernels.

Every hot kernel in the package ships in two variants: a numba ``@njit``
loop and a vectorized pure-numpy fallback. Which variant backs the public
functions is decided once, at import time, from the ``BLKSURV_NUMBA``
environment variable:

* ``BLKSURV_NUMBA=0`` (also ``false``/``off``/``no``): force the numpy path.
* ``BLKSURV_NUMBA=1`` (``true``/``on``/``yes``): require numba; raise if it
  is not importable.
* unset or ``auto``: use numba when it is importable, numpy otherwise.

``benchmarks/bench_kernels.py`` times the two paths against each other.
"""
import os

_FALSY = {"0", "false", "off", "no"}
_TRUTHY = {"1", "true", "on", "yes"}


def _resolve() -> bool:
    flag = os.environ.get("BLKSURV_NUMBA", "auto").strip().lower()
    if flag in _FALSY:
        return False
    try:
        import numba  # noqa: F401
    except ImportError as exc:
        if flag in _TRUTHY:
            raise RuntimeError(
                "BLKSURV_NUMBA=1 requires numba, which is not installed"
            ) from exc
        return False
    return True


USE_NUMBA = _resolve()

if USE_NUMBA:
    from numba import njit
else:
    def njit(*args, **kwargs):
        """No-op stand-in so kernels stay importable without numba."""
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap
