"""Pick the kernel implementation at import time.

Set ``BLOCKDISCRIM_PURE_PYTHON=1`` to force the pure-Python kernels even when
the compiled extension is importable.
"""
import os

if os.environ.get("BLOCKDISCRIM_PURE_PYTHON", "").strip() not in ("", "0"):
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        from . import _kernels_py as kernels

BACKEND = kernels.NAME
