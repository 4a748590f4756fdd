"""Select the compiled kernels when available, the numpy fallback otherwise.

Set ``HARMSTAT_PURE=1`` in the environment to force the fallback.
"""

import os

from . import _pure

try:
    if os.environ.get("HARMSTAT_PURE", "") not in ("", "0"):
        raise ImportError("pure backend forced by HARMSTAT_PURE")
    from . import _kernels as _impl

    BACKEND = "compiled"
except ImportError:
    _impl = _pure
    BACKEND = "pure"

ql_eigh = _impl.ql_eigh
dopri5_batch = _impl.dopri5_batch

# Trajectories per work unit. Fixed per backend, never derived from the
# thread count, so batching cannot change any trajectory's arithmetic.
CHUNK = 256 if BACKEND == "compiled" else 1024


def kernels(name=None):
    """Return the kernel module for ``name`` ("compiled" or "pure"), or the active one."""
    if name is None:
        return _impl
    if name == "pure":
        return _pure
    if name == "compiled":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
