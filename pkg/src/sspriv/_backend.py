"""Kernel backend selection.

The compiled extension is used when importable. Setting the environment
variable ``SSPRIV_PURE_PYTHON=1`` forces the numpy fallback.
"""

from __future__ import annotations

import os

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _fallback}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled

if os.environ.get("SSPRIV_PURE_PYTHON", "") not in ("", "0") or _compiled is None:
    BACKEND = "python"
else:
    BACKEND = "compiled"

_impl = _BACKENDS[BACKEND]
lsap = _impl.lsap
grid_success_counts = _impl.grid_success_counts


def available() -> list[str]:
    return sorted(_BACKENDS)


def get(name: str):
    """Kernel module for ``name`` (``"compiled"`` or ``"python"``)."""
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {available()}") from None
