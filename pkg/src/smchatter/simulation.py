"""Forward-Euler simulation of the closed loop

    controller -> 1/(mu s + 1)**2 actuator -> integrator plant

with the actuator realised as ``mu z1' = z2``, ``mu z2' = u - z1 - 2 z2``,
``u_bar = z1`` and the plant as ``x1' = u_bar`` (no external perturbation).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .describing import ControllerSpec, Variant
from .errors import DivergenceError, DomainError, WindowError

__all__ = ["SimConfig", "TimeSeries", "actuator_step", "simulate", "steady_state_window"]


@dataclass(frozen=True)
class SimConfig:
    tau: float = 1e-4
    horizon: float = 20.0
    x1_initial: float = 1.0
    controller_state_initial: float = 0.0
    actuator_state_initial: tuple[float, float] = (0.0, 0.0)
    mu: float = 0.05
    divergence_threshold: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "actuator_state_initial",
                           tuple(float(v) for v in self.actuator_state_initial))
        if len(self.actuator_state_initial) != 2:
            raise DomainError("actuator_state_initial needs two entries")
        if not self.tau > 0:
            raise DomainError("tau must be positive")
        if not self.horizon >= 100 * self.tau:
            raise DomainError(f"horizon must be at least 100*tau = {100 * self.tau:g} s")
        if not self.mu > 0:
            raise DomainError("mu must be positive")
        if not self.divergence_threshold > 0:
            raise DomainError("divergence_threshold must be positive")

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.tau))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["actuator_state_initial"] = list(self.actuator_state_initial)
        return d


@dataclass
class TimeSeries:
    """Sampled closed-loop trajectory.

    ``x1_dot`` is the actuator output, equal to the plant derivative.  ``u``
    is the controller output fed to the actuator.  ``sigma`` is the sliding
    variable for the LSV/TSV controllers and ``x1`` for the STC, whose
    switching acts on the output directly.
    """

    tau: float
    t: np.ndarray
    x1: np.ndarray
    x1_dot: np.ndarray
    u: np.ndarray
    sigma: np.ndarray
    diverged_at: float | None = None

    def __len__(self):
        return self.t.size

    def slice(self, start: int, stop: int | None = None) -> "TimeSeries":
        s = np.s_[start:stop]
        return TimeSeries(self.tau, self.t[s], self.x1[s], self.x1_dot[s],
                          self.u[s], self.sigma[s], self.diverged_at)

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0]) if self.t.size else 0.0


def _sgn(x):
    return 1.0 if x > 0.0 else (-1.0 if x < 0.0 else 0.0)


def actuator_step(z1: float, z2: float, u: float, h: float) -> tuple[float, float]:
    """One Euler step of ``(mu s + 1)**2 Z1 = U`` with ``h = tau / mu``."""
    return z1 + h * z2, z2 + h * (u - z1 - 2.0 * z2)


def simulate(spec: ControllerSpec, cfg: SimConfig) -> TimeSeries:
    """Integrate the closed loop with forward Euler at constant step.

    The run stops early, recording ``diverged_at``, once ``|x1|`` exceeds
    ``cfg.divergence_threshold``.  Divergence is reported in the returned
    series, never raised.
    """
    n = cfg.steps
    tau, mu, thr = cfg.tau, cfg.mu, cfg.divergence_threshold
    variant = spec.variant
    k, b, k1, k2 = spec.k, spec.b, spec.k1, spec.k2
    tsv = variant is Variant.TSV_LCSMC
    stc = variant is Variant.STC

    x1 = cfg.x1_initial
    z1, z2 = cfg.actuator_state_initial
    c = cfg.controller_state_initial  # u for LSV/TSV, v for STC
    h = tau / mu

    xs, ubs, us, sigs = [], [], [], []
    diverged_at = None
    steps_done = n
    for i in range(n + 1):
        if stc:
            r = math.sqrt(abs(x1))
            u = -k1 * (r if x1 > 0.0 else -r if x1 < 0.0 else 0.0) + c
            sig = x1
            dc = -k2 * _sgn(x1)
        else:
            u = c
            sig = (z1 * abs(z1) if tsv else z1) + b * x1
            dc = -k * _sgn(sig)
        xs.append(x1)
        ubs.append(z1)
        us.append(u)
        sigs.append(sig)
        if abs(x1) > thr:
            diverged_at = i * tau
            steps_done = i
            break
        if i == n:
            break
        x1, c = x1 + tau * z1, c + tau * dc
        z1, z2 = actuator_step(z1, z2, u, h)

    t = np.arange(steps_done + 1) * tau
    return TimeSeries(tau, t, np.array(xs), np.array(ubs), np.array(us),
                      np.array(sigs), diverged_at)


def steady_state_window(ts: TimeSeries, transient_fraction: float = 0.5,
                        omega_hint: float | None = None,
                        min_periods: int = 10) -> TimeSeries:
    """Trailing ``1 - transient_fraction`` of a run.

    Raises
    ------
    DivergenceError
        If the run diverged.
    WindowError
        If the window has fewer than 100 samples or, when ``omega_hint`` is
        given, spans fewer than ``min_periods`` periods of that frequency.
    """
    if ts.diverged_at is not None:
        raise DivergenceError(ts.diverged_at)
    if not 0.0 < transient_fraction < 1.0:
        raise DomainError("transient_fraction must lie in (0, 1)")
    start = int(math.floor(len(ts) * transient_fraction))
    window = ts.slice(start)
    if len(window) < 100:
        raise WindowError(f"window holds only {len(window)} samples")
    if omega_hint is not None:
        periods = window.duration * omega_hint / (2.0 * math.pi)
        if periods < min_periods:
            raise WindowError(f"window spans {periods:.1f} periods at omega={omega_hint:g}; "
                              f"need {min_periods}")
    return window
