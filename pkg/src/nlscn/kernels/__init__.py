"""Hot assembly kernels: compiled extension with a numpy fallback.

The backend is selected once at import.  Set ``NLSCN_KERNELS=numpy`` to
force the fallback (e.g. for benchmarking) or ``NLSCN_KERNELS=compiled``
to fail loudly if the extension is missing.
"""

import os

from . import numpy_backend

_requested = os.environ.get("NLSCN_KERNELS", "auto").lower()
if _requested not in ("auto", "compiled", "numpy"):
    raise ValueError(f"NLSCN_KERNELS must be auto|compiled|numpy, got {_requested!r}")

if _requested == "numpy":
    _impl = numpy_backend
    BACKEND = "numpy"
else:
    try:
        from . import _csr_scatter as _impl
        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        _impl = numpy_backend
        BACKEND = "numpy"

scatter_coefficient_mass = _impl.scatter_coefficient_mass


def get_backend(name):
    """Return the named backend module, or None if it is unavailable."""
    if name == "numpy":
        return numpy_backend
    if name == "compiled":
        try:
            from . import _csr_scatter
        except ImportError:
            return None
        return _csr_scatter
    raise ValueError(f"unknown backend {name!r}")
