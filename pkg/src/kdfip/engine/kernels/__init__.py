"""Kernel backend selection.

The compiled core (Cython, ``_fast``) is preferred when it built; the NumPy
reference (``_py``) is the fallback. Override with the environment variable
``KDFIP_KERNELS``:

    auto      compiled if available, else NumPy (default)
    compiled  require the compiled core (ImportError if missing)
    python    force the NumPy reference

Both backends are deterministic run-to-run; they are not bitwise identical
to each other (summation order differs), so cross-backend comparisons use
tolerances. ``benchmarks/bench_kernels.py`` compares their speed.
"""

from __future__ import annotations

import os

from . import _py

_choice = os.environ.get("KDFIP_KERNELS", "auto").lower()
if _choice not in ("auto", "compiled", "python"):
    raise ValueError(f"KDFIP_KERNELS must be auto|compiled|python, got {_choice!r}")

_compiled = None
if _choice in ("auto", "compiled"):
    try:
        from . import _fast as _compiled
    except ImportError:
        if _choice == "compiled":
            raise
        _compiled = None

active = _compiled if _compiled is not None else _py
BACKEND = "compiled" if active is not _py else "python"


def backends() -> dict[str, object]:
    """All importable backends, keyed by name (for parity tests and benchmarks)."""
    out: dict[str, object] = {"python": _py}
    if _compiled is not None:
        out["compiled"] = _compiled
    return out
