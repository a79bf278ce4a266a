"""Backend selection for the hot loops.

The compiled ``_kernels`` extension is used when it was built; otherwise the
numpy implementations in ``_kernels_py`` are used.  Setting the environment
variable ``GAUGELAT_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("GAUGELAT_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

piece_index = _impl.piece_index
piece_masses = _impl.piece_masses
piece_masses_int = _impl.piece_masses_int
step_oscillation = _impl.step_oscillation
coset_tag = _impl.coset_tag
coset_contrast = _impl.coset_contrast

__all__ = [
    "BACKEND",
    "piece_index",
    "piece_masses",
    "piece_masses_int",
    "step_oscillation",
    "coset_tag",
    "coset_contrast",
]
