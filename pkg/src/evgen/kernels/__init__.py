"""Backend selection for the hot per-pixel kernels.

Two implementations of the same kernel interface exist: a numba-compiled
one (parallel, default when numba imports) and a pure-numpy fallback.
``EVGEN_BACKEND=numpy`` or ``EVGEN_BACKEND=numba`` forces one; callers can
also pass an explicit name.  Both backends produce bit-identical results
because every transcendental is evaluated in shared numpy code before the
kernel runs; the kernels themselves use only exactly-rounded arithmetic
and 64-bit integer hashing.

Each backend module exposes:
    NAME               backend identifier
    dvs_frame_step     advance one video frame over all pixels
    photoreceptor_run  integrate single-pixel front-end traces
    set_threads        request a worker count (no-op for numpy)
"""

import os

BACKEND_ENV = "EVGEN_BACKEND"
_cache = {}


def default_backend():
    try:
        import numba  # noqa: F401
    except ImportError:
        return "numpy"
    return "numba"


def available_backends():
    names = ["numpy"]
    try:
        import numba  # noqa: F401
        names.insert(0, "numba")
    except ImportError:
        pass
    return tuple(names)


def get_backend(name=None):
    """Resolve a kernel backend module by name, env var, or default."""
    if name is None:
        name = os.environ.get(BACKEND_ENV, "").strip() or default_backend()
    name = name.lower()
    if name in _cache:
        return _cache[name]
    if name == "numpy":
        from . import numpy_backend as mod
    elif name == "numba":
        from . import numba_backend as mod
    else:
        raise ValueError(f"unknown kernel backend {name!r}; choose numba or numpy")
    _cache[name] = mod
    return mod
