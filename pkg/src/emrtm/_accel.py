"""Numba availability and the pure-numpy fallback switch.

Set ``EMRTM_DISABLE_NUMBA=1`` in the environment to force the numpy path even
when numba is importable.
"""
import os

_DISABLED = os.environ.get("EMRTM_DISABLE_NUMBA", "0").strip().lower() in ("1", "true", "yes")

try:
    from numba import njit, prange, set_num_threads, get_num_threads

    HAVE_NUMBA = True
    if "NUMBA_THREADING_LAYER" not in os.environ and "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
        # try OpenMP and the built-in queue before TBB, whose version probe
        # warns on older system installs
        from numba import config as _config

        _config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False
    prange = range

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f

    def set_num_threads(n):
        pass

    def get_num_threads():
        return 1

USE_NUMBA = HAVE_NUMBA and not _DISABLED


def set_threads(n):
    """Bound the numba worker pool; ignored on the numpy path."""
    if HAVE_NUMBA and n is not None and n > 0:
        from numba import config

        set_num_threads(min(int(n), config.NUMBA_NUM_THREADS))


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
