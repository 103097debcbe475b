"""Describing functions of the LSV/TSV Lipschitz-continuous controllers and
the super-twisting controller, plus a quadrature oracle.

All describing functions follow the convention ``N(A, w) W(jw) = -1`` for the
loop closed through negative feedback, with the assumed first-harmonic state

    x1 = A sin(w t),  x2 = A w cos(w t).
"""

from __future__ import annotations

import enum
import logging
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, SingularityError

__all__ = ["Variant", "ControllerSpec", "OscillationPoint", "GainWarning",
           "LocusPoint", "signed_power", "sine_power_integral", "alpha1",
           "df_lsv_lcsmc", "df_tsv_lcsmc", "df_stc", "describing_function",
           "df_numeric", "compare_with_oracle", "neg_reciprocal_locus",
           "DEFAULT_SAMPLES"]

log = logging.getLogger(__name__)

DEFAULT_SAMPLES = 2 ** 20


class GainWarning(UserWarning):
    """Gains violate the recommended robustness bounds (advisory only)."""


class Variant(str, enum.Enum):
    LSV_LCSMC = "lsv"
    TSV_LCSMC = "tsv"
    STC = "stc"

    @property
    def is_lcsmc(self) -> bool:
        return self is not Variant.STC


@dataclass(frozen=True)
class ControllerSpec:
    """One of the three controller families with its gains.

    ``k`` and ``b`` are used by the LSV/TSV variants, ``k1`` and ``k2`` by the
    STC.  ``delta`` is the bound on the perturbation derivative and is used
    only to emit :class:`GainWarning` for gains below the robustness bounds.
    """

    variant: Variant
    k: float = 0.0
    b: float = 0.0
    k1: float = 0.0
    k2: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        for name in ("k", "b", "k1", "k2", "delta"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.delta < 0:
            raise DomainError("delta must be non-negative")
        if self.variant.is_lcsmc:
            if self.k <= 0 or self.b <= 0:
                raise DomainError(f"{self.variant.value} needs k > 0 and b > 0")
            if self.k <= self.delta:
                warnings.warn(f"k={self.k:g} does not exceed delta={self.delta:g}",
                              GainWarning, stacklevel=3)
        else:
            if self.k1 <= 0 or self.k2 <= 0:
                raise DomainError("stc needs k1 > 0 and k2 > 0")
            if self.k2 <= self.delta:
                warnings.warn(f"k2={self.k2:g} does not exceed delta={self.delta:g}",
                              GainWarning, stacklevel=3)
            k1_min = math.sqrt(8.0 * (self.k2 + self.delta))
            if self.k1 <= k1_min:
                warnings.warn(f"k1={self.k1:g} is below sqrt(8(k2+delta))={k1_min:.4g}",
                              GainWarning, stacklevel=3)

    @classmethod
    def lsv(cls, k: float, b: float, delta: float = 0.0) -> "ControllerSpec":
        return cls(Variant.LSV_LCSMC, k=k, b=b, delta=delta)

    @classmethod
    def tsv(cls, k: float, b: float, delta: float = 0.0) -> "ControllerSpec":
        return cls(Variant.TSV_LCSMC, k=k, b=b, delta=delta)

    @classmethod
    def stc(cls, k1: float, k2: float, delta: float = 0.0) -> "ControllerSpec":
        return cls(Variant.STC, k1=k1, k2=k2, delta=delta)

    @property
    def stability_bound(self) -> float | None:
        """Largest admissible actuator time constant, ``1/(2b)``; None for STC."""
        return 1.0 / (2.0 * self.b) if self.variant.is_lcsmc else None

    def gains(self) -> dict:
        if self.variant.is_lcsmc:
            return {"k": self.k, "b": self.b, "delta": self.delta}
        return {"k1": self.k1, "k2": self.k2, "delta": self.delta}


@dataclass(frozen=True)
class OscillationPoint:
    amplitude: float
    omega: float

    def __post_init__(self):
        _check_point(self.amplitude, self.omega)


def _check_point(amplitude, omega):
    if not (amplitude > 0 and math.isfinite(amplitude)):
        raise DomainError(f"amplitude must be positive and finite, got {amplitude!r}")
    if not (omega > 0 and math.isfinite(omega)):
        raise DomainError(f"omega must be positive and finite, got {omega!r}")


def signed_power(x, p):
    """``|x|**p * sign(x)``, with ``signed_power(0, p) == 0`` for every p >= 0.

    Works elementwise on arrays.
    """
    if np.ndim(x) == 0:
        x = float(x)
        if x == 0.0:
            return 0.0
        return math.copysign(abs(x) ** p, x)
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.abs(x) ** p


def sine_power_integral(p: float) -> float:
    """``integral_0^pi sin(theta)**p dtheta`` by adaptive quadrature."""
    value, _ = integrate.quad(lambda th: math.sin(th) ** p, 0.0, math.pi,
                              epsabs=1e-13, epsrel=1e-13, limit=200)
    return value


@lru_cache(maxsize=None)
def alpha1() -> float:
    """Constant of the STC square-root describing function (about 1.748)."""
    return sine_power_integral(1.5)


def df_lsv_lcsmc(spec: ControllerSpec, amplitude: float, omega: float) -> complex:
    """Describing function of the integral of ``k sign(x2 + b x1)``."""
    if spec.variant is not Variant.LSV_LCSMC:
        raise DomainError("df_lsv_lcsmc needs an LSV controller")
    _check_point(amplitude, omega)
    k, b = spec.k, spec.b
    gain = 4.0 * k / (math.pi * amplitude * math.hypot(omega, b))
    return complex(gain, -gain * b / omega)


def df_tsv_lcsmc(spec: ControllerSpec, amplitude: float, omega: float) -> complex:
    """Describing function of the integral of ``k sign(|x2| x2 + b x1)``."""
    if spec.variant is not Variant.TSV_LCSMC:
        raise DomainError("df_tsv_lcsmc needs a TSV controller")
    _check_point(amplitude, omega)
    k, b, A, w = spec.k, spec.b, amplitude, omega
    root = math.sqrt(b * b + 4.0 * A * A * w ** 4)
    # root - b cancels badly for b >> A w^2; use the conjugate form instead
    diff = 4.0 * A * A * w ** 4 / (root + b)
    scale = 2.0 * k / (math.pi * A * A * w ** 3)
    return complex(scale * diff, -scale * math.sqrt(2.0 * b * diff))


def df_stc(spec: ControllerSpec, amplitude: float, omega: float) -> complex:
    """Describing function of ``k1 |x1|^(1/2) sign(x1) + k2 * integral sign(x1)``."""
    if spec.variant is not Variant.STC:
        raise DomainError("df_stc needs an STC controller")
    _check_point(amplitude, omega)
    A, w = amplitude, omega
    re = 2.0 * alpha1() * spec.k1 / (math.pi * math.sqrt(A))
    im = -4.0 * spec.k2 / (math.pi * A * w)
    return complex(re, im)


_CLOSED_FORMS = {
    Variant.LSV_LCSMC: df_lsv_lcsmc,
    Variant.TSV_LCSMC: df_tsv_lcsmc,
    Variant.STC: df_stc,
}


def describing_function(spec: ControllerSpec, amplitude: float, omega: float) -> complex:
    """Closed-form describing function for whichever family ``spec`` selects."""
    return _CLOSED_FORMS[spec.variant](spec, amplitude, omega)


def _first_harmonic(wave: np.ndarray, sin_t: np.ndarray, cos_t: np.ndarray) -> complex:
    # Periodic trapezoid rule: (w/pi) * integral over one period -> (2/n) * sum.
    n = wave.size
    a1 = 2.0 * float(np.dot(wave, sin_t)) / n
    b1 = 2.0 * float(np.dot(wave, cos_t)) / n
    return complex(a1, b1)


def _relay_harmonic(sigma_fn, theta: np.ndarray, sin_t: np.ndarray,
                    cos_t: np.ndarray) -> complex:
    """First harmonic of ``sign(sigma(theta))`` over one period.

    Trapezoid sum, then every sample interval containing a sign change is
    replaced by its exact piecewise integral, with the switching phase found
    by Brent's method on ``sigma``.  This removes the O(h) jump error, so the
    result is accurate to roughly machine precision for any number of
    switchings per period.
    """
    n = theta.size
    h = 2.0 * math.pi / n
    sig = sigma_fn(theta)
    s = np.sign(sig)
    a1 = float(np.dot(s, sin_t)) * h
    b1 = float(np.dot(s, cos_t)) * h

    nxt = np.roll(s, -1)
    for i in np.nonzero(s != nxt)[0].tolist():
        ta = theta[i]
        tb = ta + h
        sa, sb = s[i], nxt[i]
        fa, fb = sig[i], sig[(i + 1) % n]
        if fa == 0.0:
            tc = ta
        elif fb == 0.0:
            tc = tb
        else:
            tc = optimize.brentq(lambda t: float(sigma_fn(np.array([t]))[0]),
                                 ta, tb, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        left = sa if sa != 0 else sb
        right = sb if sb != 0 else sa
        exact_sin = (left * (math.cos(ta) - math.cos(tc))
                     + right * (math.cos(tc) - math.cos(tb)))
        exact_cos = (left * (math.sin(tc) - math.sin(ta))
                     + right * (math.sin(tb) - math.sin(tc)))
        a1 += exact_sin - 0.5 * h * (sa * math.sin(ta) + sb * math.sin(tb))
        b1 += exact_cos - 0.5 * h * (sa * math.cos(ta) + sb * math.cos(tb))
    return complex(a1, b1) / math.pi


def df_numeric(spec: ControllerSpec, amplitude: float, omega: float,
               samples: int = DEFAULT_SAMPLES) -> complex:
    """Describing function from the Fourier coefficients of the control
    waveform over one period of the assumed oscillation.

    Parameters
    ----------
    spec : ControllerSpec
        Controller family and gains.
    amplitude, omega : float
        Assumed oscillation ``x1 = A sin(w t)``.
    samples : int
        Uniform phase samples over ``[0, 2 pi)``.  Relay switchings are
        located between samples and integrated exactly; the smooth square-root
        term of the STC uses the plain periodic trapezoid rule.

    Returns
    -------
    complex
        ``(a1 + j b1) / A`` of the controller output, including the
        ``1/(j w)`` factor contributed by integral action.
    """
    _check_point(amplitude, omega)
    samples = int(samples)
    if samples < 16:
        raise DomainError("samples must be at least 16")
    A, w = amplitude, omega
    theta = 2.0 * math.pi * np.arange(samples) / samples
    sin_t, cos_t = np.sin(theta), np.cos(theta)
    integrator = 1.0 / (1j * w)

    if spec.variant is Variant.STC:
        sqrt_part = _first_harmonic(spec.k1 * signed_power(A * sin_t, 0.5), sin_t, cos_t)
        relay = _relay_harmonic(lambda th: A * np.sin(th), theta, sin_t, cos_t)
        return (sqrt_part + spec.k2 * relay * integrator) / A

    b = spec.b
    if spec.variant is Variant.LSV_LCSMC:
        def sigma(th):
            return A * w * np.cos(th) + b * A * np.sin(th)
    else:
        def sigma(th):
            return signed_power(A * w * np.cos(th), 2.0) + b * A * np.sin(th)
    relay = _relay_harmonic(sigma, theta, sin_t, cos_t)
    return spec.k * relay * integrator / A


def compare_with_oracle(spec: ControllerSpec, amplitude: float, omega: float,
                        samples: int = DEFAULT_SAMPLES, threshold: float = 1e-3):
    """Closed form vs quadrature; logs a warning above ``threshold``.

    Returns ``(closed, numeric, relative_error)``.
    """
    closed = describing_function(spec, amplitude, omega)
    numeric = df_numeric(spec, amplitude, omega, samples)
    rel = abs(closed - numeric) / abs(closed)
    if rel > threshold:
        log.warning("closed-form DF of %s disagrees with quadrature by %.3g at "
                    "A=%g, omega=%g", spec.variant.value, rel, amplitude, omega)
    return closed, numeric, rel


@dataclass(frozen=True)
class LocusPoint:
    amplitude: float
    omega: float
    value: complex | None
    error: str | None = None


def neg_reciprocal_locus(spec: ControllerSpec, amplitude, omega) -> list[LocusPoint]:
    """``-1/N(A, w)`` along a sweep of amplitude, frequency, or both.

    ``amplitude`` and ``omega`` may each be a scalar or a sequence; scalars
    are held fixed and sequences of equal length are paired pointwise.  Each
    point carries both coordinates because the TSV describing function is
    not separable in ``A`` and ``w``.  Points where ``N`` vanishes come back
    with ``value=None`` and an error message instead of aborting the sweep.
    """
    amps = np.atleast_1d(np.asarray(amplitude, dtype=float))
    omegas = np.atleast_1d(np.asarray(omega, dtype=float))
    if amps.size == 0 or omegas.size == 0:
        raise DomainError("locus grid is empty")
    if np.any(amps <= 0) or np.any(omegas <= 0):
        raise DomainError("locus grids must be strictly positive")
    if amps.size > 1 and omegas.size > 1 and amps.size != omegas.size:
        raise DomainError("paired amplitude/omega grids must have equal length")
    amps, omegas = np.broadcast_arrays(amps, omegas)

    points = []
    for A, w in zip(amps.tolist(), omegas.tolist()):
        try:
            n = describing_function(spec, A, w)
            if n == 0:
                raise SingularityError("describing function is zero")
            points.append(LocusPoint(A, w, -1.0 / n))
        except (SingularityError, ZeroDivisionError, OverflowError) as exc:
            points.append(LocusPoint(A, w, None, str(exc)))
    return points
