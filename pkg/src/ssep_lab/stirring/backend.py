"""Kernel selection: the compiled extension when importable, else pure Python.

Set ``SSEP_LAB_BACKEND=python`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _pykernel

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _pykernel}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled


def default_backend() -> str:
    forced = os.environ.get("SSEP_LAB_BACKEND")
    if forced:
        if forced not in BACKENDS:
            raise ImportError(f"backend {forced!r} unavailable; have {sorted(BACKENDS)}")
        return forced
    return "compiled" if _compiled is not None else "python"


def get(name: str | None = None):
    return BACKENDS[name or default_backend()]
