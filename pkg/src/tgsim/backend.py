"""Kernel selection: compiled extension when available, else pure Python.

Set TGSIM_BACKEND=python to force the fallback (used by the parity
tests and the benchmark). Both kernels implement the same contract and
must agree bit for bit; see tests/test_backend.py.
"""

from __future__ import annotations

import os

BACKEND = "python"

if os.environ.get("TGSIM_BACKEND", "").lower() != "python":
    try:
        from ._core import population_tick  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from ._core_py import population_tick
else:
    from ._core_py import population_tick

__all__ = ["population_tick", "BACKEND"]
