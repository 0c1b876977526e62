"""Backend selection for the hot numeric kernels.

Every kernel in :mod:`coalwalsh._kernels` exists twice: a numba ``@njit``
version and a pure-numpy version. Both produce bit-identical results. Set
``COALWALSH_NO_NUMBA=1`` to force the numpy path (useful for debugging and
for platforms without numba).
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

NUMBA_AVAILABLE = numba is not None

if NUMBA_AVAILABLE and "NUMBA_THREADING_LAYER" not in os.environ:
    # the default search probes TBB first and warns on old installs
    try:
        import numba.np.ufunc.omppool  # noqa: F401

        numba.config.THREADING_LAYER = "omp"
    except ImportError:  # pragma: no cover
        numba.config.THREADING_LAYER = "workqueue"
NUMBA_ENABLED = NUMBA_AVAILABLE and os.environ.get("COALWALSH_NO_NUMBA", "") not in ("1", "true", "yes")

BACKENDS = ("numba", "numpy") if NUMBA_AVAILABLE else ("numpy",)


def default_backend():
    return "numba" if NUMBA_ENABLED else "numpy"


def resolve(backend):
    if backend is None:
        return default_backend()
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not NUMBA_AVAILABLE:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity otherwise."""
    if numba is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)


prange = range if numba is None else numba.prange


def set_threads(count):
    """Set the numba thread count; results never depend on it."""
    if numba is not None and count:
        numba.set_num_threads(min(int(count), numba.config.NUMBA_NUM_THREADS))
