"""Rational transfer functions of the linear part of the loop.

Coefficients are stored in ascending powers of ``s``, so ``(1, 0.1, 0.0025)``
is ``1 + 0.1 s + 0.0025 s**2``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import DomainError, SingularityError

__all__ = ["RationalTransferFunction", "actuator_tf", "loop_tf",
           "integrator_tf", "eval_response", "nyquist_locus"]


def _trim(coeffs: Sequence[float]) -> tuple[float, ...]:
    c = [float(x) for x in coeffs]
    while len(c) > 1 and c[-1] == 0.0:
        c.pop()
    return tuple(c)


@dataclass(frozen=True)
class RationalTransferFunction:
    """Proper SISO transfer function ``num(s) / den(s)``."""

    numerator_coeffs: tuple[float, ...]
    denominator_coeffs: tuple[float, ...]

    def __post_init__(self):
        num = _trim(self.numerator_coeffs)
        den = _trim(self.denominator_coeffs)
        if not den or den[-1] == 0.0:
            raise DomainError("denominator must have a nonzero leading coefficient")
        if not num:
            raise DomainError("numerator must have at least one coefficient")
        if not all(math.isfinite(x) for x in num + den):
            raise DomainError("coefficients must be finite")
        if len(num) > len(den):
            raise DomainError("transfer function must be proper "
                              "(deg numerator <= deg denominator)")
        object.__setattr__(self, "numerator_coeffs", num)
        object.__setattr__(self, "denominator_coeffs", den)

    def __call__(self, omega: float) -> complex:
        return eval_response(self, omega)


def _horner(coeffs: Sequence[float], s: complex) -> complex:
    acc = 0j
    for c in reversed(coeffs):
        acc = acc * s + c
    return acc


def actuator_tf(mu: float) -> RationalTransferFunction:
    """Critically damped actuator ``1 / (mu s + 1)**2`` with unit static gain."""
    if not mu > 0:
        raise DomainError(f"actuator time constant must be positive, got {mu!r}")
    return RationalTransferFunction((1.0,), (1.0, 2.0 * mu, mu * mu))


def loop_tf(mu: float) -> RationalTransferFunction:
    """Actuator in cascade with the integrator plant, ``1 / (s (mu s + 1)**2)``."""
    if not mu > 0:
        raise DomainError(f"actuator time constant must be positive, got {mu!r}")
    return RationalTransferFunction((1.0,), (0.0, 1.0, 2.0 * mu, mu * mu))


def integrator_tf() -> RationalTransferFunction:
    return RationalTransferFunction((1.0,), (0.0, 1.0))


def eval_response(tf: RationalTransferFunction, omega: float) -> complex:
    """Evaluate ``tf`` at ``s = j*omega`` by Horner's rule.

    Raises
    ------
    DomainError
        If ``omega <= 0``; the loop has a pole at the origin and only the
        positive half of the Nyquist contour is meaningful here.
    SingularityError
        If the denominator vanishes exactly at ``j*omega``.
    """
    if not omega > 0 or not math.isfinite(omega):
        raise DomainError(f"omega must be positive and finite, got {omega!r}")
    s = 1j * omega
    den = _horner(tf.denominator_coeffs, s)
    if den == 0:
        raise SingularityError(f"denominator vanishes at omega={omega!r}")
    value = _horner(tf.numerator_coeffs, s) / den
    if not cmath.isfinite(value):
        raise SingularityError(f"response is not finite at omega={omega!r}")
    return value


def nyquist_locus(tf: RationalTransferFunction,
                  omega_grid: Sequence[float]) -> list[tuple[float, complex]]:
    """Sample the frequency response over a caller-supplied grid."""
    grid = [float(w) for w in omega_grid]
    if not grid:
        raise DomainError("omega grid is empty")
    if any(w <= 0 for w in grid):
        raise DomainError("omega grid must be strictly positive")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("omega grid must be strictly increasing")
    return [(w, eval_response(tf, w)) for w in grid]
