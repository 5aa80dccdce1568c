"""Harmonic-oscillator basis bookkeeping.

Quantum numbers and matrix elements of powers of x^2 in the radial/parity
basis with frequency scaled to 1.  The label ell is -1 (even) or 0 (odd) in
one dimension; ell = 0, 1, ... acts as angular momentum in three dimensions.
The reinterpretation is purely a labeling convention, there is no separate
3-D code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import banded

__all__ = ["BasisParams", "alpha", "beta_off", "eps", "x2_band", "power_band"]


@dataclass(frozen=True)
class BasisParams:
    """Symmetry channel and frequency of the oscillator basis."""

    ell: int = -1
    omega: float = 1.0

    def __post_init__(self):
        if self.ell < -1:
            raise ValueError(f"ell must be >= -1, got {self.ell}")
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")


def _check(n: int, ell: int) -> None:
    if n < 0:
        raise ValueError(f"quantum number n must be >= 0, got {n}")
    if ell < -1:
        raise ValueError(f"ell must be >= -1, got {ell}")


def alpha(n: int, ell: int) -> float:
    """Diagonal element <n|x^2|n> = 2n + ell + 3/2."""
    _check(n, ell)
    return 2 * n + ell + 1.5


def beta_off(n: int, ell: int) -> float:
    """Off-diagonal element <n|x^2|n+1> = sqrt((n+1)(n+ell+3/2))."""
    _check(n, ell)
    return math.sqrt((n + 1) * (n + ell + 1.5))


def eps(n: int, ell: int) -> int:
    """Harmonic eigenvalue 4n + 2*ell + 3 (equal to 2*alpha(n, ell))."""
    _check(n, ell)
    return 4 * n + 2 * ell + 3


def eps_vector(size: int, ell: int) -> np.ndarray:
    return np.array([eps(n, ell) for n in range(size)], dtype=float)


def x2_band(ell: int, size: int) -> "banded.BandedMatrix":
    """Tridiagonal band of the multiplication operator x^2."""
    if size < 1:
        raise ValueError("size must be positive")
    m = banded.BandedMatrix(size, 1, 1)
    n = np.arange(size)
    m.data[:, 1] = 2 * n + ell + 1.5
    off = np.sqrt((n[:-1] + 1) * (n[:-1] + ell + 1.5))
    m.data[:-1, 2] = off
    m.data[1:, 0] = off
    return m


def power_band(t: int, ell: int, size: int) -> "banded.BandedMatrix":
    """Band of <m|x^{2t}|n>, built by t-fold products of the x^2 band.

    The operator-product construction avoids the factorial growth of
    closed-form element formulas and keeps the bandwidth exactly t.  The
    products run in a workspace with t extra states and are cropped, so every
    returned entry is the true infinite-operator element (paths through
    intermediate states above the requested size are not lost).
    """
    if t < 1:
        raise ValueError(f"power t must be >= 1, got {t}")
    if size <= t:
        raise ValueError(f"size must exceed t, got size={size}, t={t}")
    base = x2_band(ell, size + t)
    out = base
    for _ in range(t - 1):
        out = out @ base
    return out.cropped(size)
