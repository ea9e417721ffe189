"""Bessel/Hankel functions of order 0 and 1, the 2D outgoing Green's
function, and a cancellation-safe sinc."""

from __future__ import annotations

import numpy as np
import scipy.special as sp

from .exceptions import InputError

_BESSEL = {
    ("J", 0): sp.j0,
    ("J", 1): sp.j1,
    ("Y", 0): sp.y0,
    ("Y", 1): sp.y1,
}


def bessel(order: int, kind: str, x):
    """Bessel function J_order or Y_order for order in {0, 1}.

    Y requires x > 0.
    """
    if order not in (0, 1):
        raise InputError(f"order must be 0 or 1, got {order}")
    if kind not in ("J", "Y"):
        raise InputError(f"kind must be 'J' or 'Y', got {kind!r}")
    x = np.asarray(x, dtype=float)
    if kind == "Y" and np.any(x <= 0):
        raise InputError("Y_nu requires x > 0")
    out = _BESSEL[(kind, order)](x)
    return out if out.ndim else float(out)


def hankel1(order: int, x):
    """Hankel function of the first kind, H^(1)_order = J + iY, for x > 0."""
    if order not in (0, 1):
        raise InputError(f"order must be 0 or 1, got {order}")
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise InputError("hankel1 requires x > 0")
    out = _BESSEL[("J", order)](x) + 1j * _BESSEL[("Y", order)](x)
    return out if out.ndim else complex(out)


def green2d(k: float, r):
    """Outgoing 2D Helmholtz fundamental solution (i/4) H^(1)_0(k r)."""
    if k <= 0:
        raise InputError(f"wavenumber must be positive, got {k}")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise InputError("green2d requires r > 0; self-interaction terms "
                         "are handled by the forward solver")
    return 0.25j * hankel1(0, k * r)


def sinc(x):
    """sin(x)/x with sinc(0) = 1.

    A 3-term Taylor series is used for |x| < 1e-4 to avoid cancellation.
    """
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    x_safe = np.where(small, 1.0, x)
    x2 = x * x
    out = np.where(small,
                   1.0 - x2 / 6.0 + x2 * x2 / 120.0,
                   np.sin(x_safe) / x_safe)
    return out if out.ndim else float(out)
