"""Kernel selection: compiled extension when importable, else pure Python.

Set ``ENDURQ_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

BACKEND = "python"

if os.environ.get("ENDURQ_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _pykernels
else:
    _impl = _pykernels

convolve = _impl.convolve
bucket_counts = _impl.bucket_counts


def trace_machine(m, n, cap):
    """Return a trace machine, falling back to Python for caps beyond int64."""
    if _impl is not _pykernels:
        try:
            return _impl.TraceMachine(m, n, cap)
        except OverflowError:
            pass
    return _pykernels.TraceMachine(m, n, cap)
