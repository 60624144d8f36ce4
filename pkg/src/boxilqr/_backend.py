"""Kernel backend selection.

The compiled extension ``boxilqr._core`` is preferred; the pure-Python
module ``boxilqr._core_py`` is used when the extension is missing or when
``BOXILQR_PURE_PYTHON=1`` is set (useful for benchmarking the two)."""

import os

if os.environ.get("BOXILQR_PURE_PYTHON") == "1":
    from boxilqr import _core_py as core
else:
    try:
        from boxilqr import _core as core  # type: ignore[attr-defined]
    except ImportError:
        from boxilqr import _core_py as core

BACKEND = core.BACKEND
