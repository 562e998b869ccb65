"""Backend selection for the hot loops.

The compiled extension is used when importable; set ``SGBN_LAB_PURE_PYTHON=1``
to force the NumPy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("SGBN_LAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

cd_columns = _impl.cd_columns
smo = _impl.smo


def get(backend):
    """Return the kernel module for ``"cython"`` or ``"python"``."""
    if backend == "python":
        return _kernels_py
    if backend == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {backend!r}")
