"""Small numeric helpers shared across modules."""

from __future__ import annotations

import math

SNAP = 1e-9


def ceil_tol(x: float, tol: float = SNAP) -> int:
    """``ceil`` that treats values within ``tol`` (relative) of an integer as that integer.

    Closed forms such as ``1/(1 - (2/3)) - 1`` evaluate to ``2.0000000000000004``
    in floating point; a plain ceil would jump to 3.
    """
    r = round(x)
    if abs(x - r) <= tol * max(1.0, abs(x)):
        return int(r)
    return math.ceil(x)
