"""Pick the compiled kernels when they import, the NumPy ones otherwise.

Set ``FRACNEUMANN_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("FRACNEUMANN_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

besselk = _impl.besselk
rho_and_derivative = _impl.rho_and_derivative

__all__ = ["BACKEND", "besselk", "rho_and_derivative"]
