"""Kernel backend selection: compiled extension if built, numpy otherwise.

Set LOPBSR_BACKEND=python to force the fallback (used by the benchmark and
the cross-backend tests).
"""

import os

if os.environ.get("LOPBSR_BACKEND", "").lower() in ("python", "py"):
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels  # type: ignore[attr-defined]

        kernels = _kernels
    except ImportError:
        from . import _kernels_py as kernels

BACKEND = kernels.NAME


def backend_name():
    """Name of the active kernel backend: 'compiled' or 'python'."""
    return BACKEND
