"""Harmonic-balance prediction of chattering: amplitude, frequency and
average power of the limit cycle solving ``N(A, w) W(jw) = -1`` for the
actuator/integrator loop ``W(s) = 1 / (s (mu s + 1)**2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .describing import (ControllerSpec, OscillationPoint, Variant, alpha1,
                         describing_function)
from .errors import DomainError, StabilityViolationError
from .lti import eval_response, loop_tf

__all__ = ["ChatteringPrediction", "HbSolveResult", "CriticalMuReport", "SweepCell",
           "average_power", "hb_residual", "solve_lsv_closed_form",
           "solve_stc_closed_form", "solve_numeric", "predict",
           "amplitude_crossing_roots", "critical_mu_amplitude",
           "critical_mu_frequency", "critical_mu_power", "power_crossing_polynomial",
           "sweep"]

REAL_ROOT_RTOL = 1e-9


@dataclass(frozen=True)
class ChatteringPrediction:
    amplitude: float
    omega: float
    average_power: float
    controller: ControllerSpec
    mu: float

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega


@dataclass(frozen=True)
class HbSolveResult:
    prediction: ChatteringPrediction | None
    residual: complex
    iterations: int
    converged: bool
    status: str = "converged"  # converged | max_iter | boundary | stalled


@dataclass(frozen=True)
class CriticalMuReport:
    mu_values: list[float]
    discarded_roots: list[complex]
    stability_bound: float
    note: str = ""


def average_power(amplitude: float, omega: float) -> float:
    """Mean absolute power ``4 A**2 w / pi`` of the chattering.

    The constant is kept as published; integrating ``|A**2 w sin(2wt) / 2|``
    over a period gives ``A**2 w / pi`` instead, a factor of 4 smaller.
    :func:`smchatter.metrics.measure_average_power` exposes both.
    """
    if not (amplitude > 0 and omega > 0):
        raise DomainError("amplitude and omega must be positive")
    return 4.0 * amplitude * amplitude * omega / math.pi


def hb_residual(spec: ControllerSpec, mu: float, amplitude: float, omega: float) -> complex:
    """``N(A, w) W(jw) + 1``; zero at a harmonic-balance solution."""
    return describing_function(spec, amplitude, omega) * eval_response(loop_tf(mu), omega) + 1.0


def _check_mu(mu):
    if not (mu > 0 and math.isfinite(mu)):
        raise DomainError(f"mu must be positive and finite, got {mu!r}")


def solve_lsv_closed_form(k: float, b: float, mu: float,
                          delta: float = 0.0) -> ChatteringPrediction:
    """Closed-form harmonic balance for the LSV controller.

    Raises
    ------
    StabilityViolationError
        If ``mu >= 1/(2b)``: the predicted frequency is no longer real and
        the amplitude has diverged.
    """
    _check_mu(mu)
    spec = ControllerSpec.lsv(k, b, delta)
    bound = spec.stability_bound
    if mu >= bound:
        raise StabilityViolationError(mu, bound)
    q = 1.0 - 2.0 * mu * b
    r = 1.0 - mu * b
    A = mu * mu * 2.0 * k / (math.pi * q * r)
    w = math.sqrt(q) / mu
    P = mu ** 3 * 16.0 * k * k / (math.pi ** 3 * q ** 1.5 * r * r)
    return ChatteringPrediction(A, w, P, spec, mu)


def solve_stc_closed_form(k1: float, k2: float, mu: float,
                          delta: float = 0.0) -> ChatteringPrediction:
    _check_mu(mu)
    spec = ControllerSpec.stc(k1, k2, delta)
    a = alpha1()
    ak2 = (a * k1) ** 2
    c = ak2 + 4.0 * math.pi * k2
    A = mu * mu * (c / (math.pi * a * k1)) ** 2
    w = math.sqrt(ak2 / c) / mu
    P = mu ** 3 * 4.0 * c ** 3.5 / (math.pi ** 5 * (a * k1) ** 3)
    return ChatteringPrediction(A, w, P, spec, mu)


def _fd_jacobian(fun, x, rel_step=1e-6):
    J = np.empty((2, 2))
    for i in range(2):
        h = rel_step * abs(x[i])
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        J[:, i] = (fun(xp) - fun(xm)) / (2.0 * h)
    return J


def _default_guess(spec: ControllerSpec, mu: float) -> OscillationPoint:
    if spec.variant is Variant.STC:
        p = solve_stc_closed_form(spec.k1, spec.k2, mu)
    else:
        p = solve_lsv_closed_form(spec.k, spec.b, mu)
    return OscillationPoint(p.amplitude, p.omega)


def solve_numeric(spec: ControllerSpec, mu: float,
                  initial: OscillationPoint | None = None,
                  tol: float = 1e-12, max_iter: int = 100) -> HbSolveResult:
    """Damped Newton iteration on ``(Re, Im)`` of ``N(A, w) W(jw) + 1``.

    The Jacobian comes from central differences with relative step 1e-6.
    Each step is halved until the iterate stays in ``A > 0, w > 0`` and the
    residual norm decreases.  Works for all three families; LSV and STC have
    closed forms that this solver must reproduce.

    ``initial`` defaults to the LSV closed form with the same ``k, b`` for
    the LSV/TSV families and to the STC closed form for the STC.  For the
    LSV/TSV families, ``mu >= 1/(2b)`` returns ``status='boundary'``
    immediately without iterating.
    """
    _check_mu(mu)
    if not tol > 0:
        raise DomainError("tol must be positive")
    nan = complex(math.nan, math.nan)
    if spec.variant.is_lcsmc and mu >= spec.stability_bound:
        return HbSolveResult(None, nan, 0, False, "boundary")
    if initial is None:
        initial = _default_guess(spec, mu)

    W = loop_tf(mu)

    def residual(x):
        A, w = x
        return describing_function(spec, A, w) * eval_response(W, w) + 1.0

    def F(x):
        r = residual(x)
        return np.array([r.real, r.imag])

    x = np.array([initial.amplitude, initial.omega], dtype=float)
    fx = F(x)
    norm = float(np.hypot(*fx))
    status = "max_iter"
    it = 0
    for it in range(1, max_iter + 1):
        if norm < tol:
            status = "converged"
            it -= 1
            break
        try:
            step = np.linalg.solve(_fd_jacobian(F, x), -fx)
        except np.linalg.LinAlgError:
            status = "stalled"
            break
        lam = 1.0
        accepted = False
        for _ in range(60):
            trial = x + lam * step
            if trial[0] > 0 and trial[1] > 0:
                ft = F(trial)
                nt = float(np.hypot(*ft))
                if nt < norm:
                    accepted = True
                    break
            lam *= 0.5
        if not accepted:
            status = "stalled"
            break
        x, fx, norm = trial, ft, nt
        if not np.all(np.isfinite(x)) or x[0] > 1e12:
            status = "boundary"
            break
    else:
        if norm < tol:
            status = "converged"

    r = complex(fx[0], fx[1])
    converged = status == "converged"
    A, w = float(x[0]), float(x[1])
    pred = ChatteringPrediction(A, w, average_power(A, w), spec, mu) if A > 0 and w > 0 else None
    return HbSolveResult(pred, r, it, converged, status)


def predict(spec: ControllerSpec, mu: float,
            initial: OscillationPoint | None = None) -> HbSolveResult:
    """Best available prediction for ``spec``: closed form where one exists,
    Newton for the TSV family."""
    if spec.variant is Variant.TSV_LCSMC:
        return solve_numeric(spec, mu, initial)
    if spec.variant is Variant.LSV_LCSMC:
        p = solve_lsv_closed_form(spec.k, spec.b, mu, spec.delta)
    else:
        p = solve_stc_closed_form(spec.k1, spec.k2, mu, spec.delta)
    p = ChatteringPrediction(p.amplitude, p.omega, p.average_power, spec, mu)
    return HbSolveResult(p, hb_residual(spec, mu, p.amplitude, p.omega), 0, True)


def _stc_constants(k1, k2):
    a = alpha1()
    ak2 = (a * k1) ** 2
    return a, ak2, ak2 + 4.0 * math.pi * k2


def _check_gains(**gains):
    for name, v in gains.items():
        if not (v > 0 and math.isfinite(v)):
            raise DomainError(f"{name} must be positive, got {v!r}")


def amplitude_crossing_roots(gamma: float, b: float) -> CriticalMuReport:
    """Roots ``(3 +- sqrt(9 - 8 gamma)) / (4 b)`` filtered by ``mu < 1/(2b)``."""
    bound = 1.0 / (2.0 * b)
    disc = 9.0 - 8.0 * gamma
    if disc < 0:
        r = math.sqrt(-disc) / (4.0 * b)
        c = 3.0 / (4.0 * b)
        return CriticalMuReport([], [complex(c, -r), complex(c, r)], bound,
                                note=f"no real crossing: 9 - 8*gamma = {disc:.6g} < 0")
    sq = math.sqrt(disc)
    kept, dropped = [], []
    for mu in sorted({(3.0 - sq) / (4.0 * b), (3.0 + sq) / (4.0 * b)}):
        (kept if 0 < mu < bound else dropped).append(mu)
    return CriticalMuReport(kept, [complex(m) for m in dropped], bound)


def critical_mu_amplitude(k: float, k1: float, k2: float, b: float) -> CriticalMuReport:
    """Actuator time constants at which LSV and STC chattering amplitudes match."""
    _check_gains(k=k, k1=k1, k2=k2, b=b)
    _, ak2, c = _stc_constants(k1, k2)
    gamma = (c * c - 2.0 * math.pi * ak2 * k) / (c * c)
    return amplitude_crossing_roots(gamma, b)


def critical_mu_frequency(k1: float, k2: float, b: float) -> float:
    """Actuator time constant at which LSV and STC chattering frequencies match."""
    _check_gains(k1=k1, k2=k2, b=b)
    _, _, c = _stc_constants(k1, k2)
    return 4.0 * math.pi * k2 / (2.0 * b * c)


def power_crossing_polynomial(k: float, k1: float, k2: float, b: float) -> Polynomial:
    """``(1 - 2 mu b)**3 (1 - mu b)**4 - 16 pi^4 k^4 (a1 k1)^6 / c^7`` in ``mu``."""
    a, ak2, c = _stc_constants(k1, k2)
    rhs = 16.0 * math.pi ** 4 * k ** 4 * (a * k1) ** 6 / c ** 7
    return Polynomial([1.0, -2.0 * b]) ** 3 * Polynomial([1.0, -b]) ** 4 - rhs


def critical_mu_power(k: float, k1: float, k2: float, b: float) -> CriticalMuReport:
    """Actuator time constants at which LSV and STC average powers match.

    All seven roots of the degree-7 polynomial come from companion-matrix
    eigenvalues; real roots are polished with a few Newton steps and kept
    when they fall in ``(0, 1/(2b))``.
    """
    _check_gains(k=k, k1=k1, k2=k2, b=b)
    poly = power_crossing_polynomial(k, k1, k2, b)
    dpoly = poly.deriv()
    bound = 1.0 / (2.0 * b)
    kept, dropped = [], []
    for root in poly.roots():
        root = complex(root)
        if abs(root.imag) <= REAL_ROOT_RTOL * abs(root):
            mu = root.real
            for _ in range(3):
                d = dpoly(mu)
                if d == 0:
                    break
                mu -= poly(mu) / d
            if 0 < mu < bound:
                kept.append(float(mu))
            else:
                dropped.append(complex(mu))
        else:
            dropped.append(root)
    kept.sort()
    dropped.sort(key=lambda z: (z.real, z.imag))
    return CriticalMuReport(kept, dropped, bound)


@dataclass(frozen=True)
class SweepCell:
    controller: ControllerSpec
    mu: float
    status: str  # ok | unstable | unsolved
    prediction: ChatteringPrediction | None = None
    residual: float = math.nan
    message: str = ""


def sweep(specs: Iterable[ControllerSpec], mu_grid: Sequence[float]) -> list[SweepCell]:
    """Predictions for every ``(controller, mu)`` pair.

    The grid is visited in ascending order per controller.  TSV cells are
    warm-started from the previous converged cell so Newton tracks one branch.
    Cells at or beyond ``1/(2b)`` for the LSV/TSV families are marked
    ``unstable``; failed Newton solves are marked ``unsolved``.
    """
    grid = sorted(float(m) for m in mu_grid)
    cells = []
    for spec in specs:
        warm = None
        for mu in grid:
            if not mu > 0:
                cells.append(SweepCell(spec, mu, "unstable", message="mu must be positive"))
                continue
            if spec.variant.is_lcsmc and mu >= spec.stability_bound:
                cells.append(SweepCell(spec, mu, "unstable",
                                       message=f"mu >= 1/(2b) = {spec.stability_bound:.9g}"))
                continue
            res = predict(spec, mu, warm)
            if res.converged:
                cells.append(SweepCell(spec, mu, "ok", res.prediction, abs(res.residual)))
                if spec.variant is Variant.TSV_LCSMC:
                    warm = OscillationPoint(res.prediction.amplitude, res.prediction.omega)
            else:
                cells.append(SweepCell(spec, mu, "unsolved", residual=abs(res.residual),
                                       message=f"newton {res.status} after {res.iterations} iterations"))
    return cells
