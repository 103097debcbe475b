"""Chattering parameters measured from simulated steady-state windows."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .describing import ControllerSpec
from .errors import DomainError, NoCrossingError, WindowError
from .simulation import SimConfig, TimeSeries, simulate, steady_state_window

__all__ = ["MeasuredChattering", "measure_amplitude", "upward_mean_crossings",
           "measure_frequency", "measure_average_power", "measure",
           "measure_run", "empirical_crossover", "MIN_CYCLES"]

MIN_CYCLES = 10


@dataclass(frozen=True)
class MeasuredChattering:
    amplitude: float
    omega: float
    average_power: float
    window_start: float
    window_end: float
    cycles_used: int
    power_mode: str = "paper"


def _nonempty(window: TimeSeries):
    if len(window) == 0:
        raise WindowError("empty window")


def measure_amplitude(window: TimeSeries) -> float:
    """Half the peak-to-peak excursion of ``x1``."""
    _nonempty(window)
    return 0.5 * float(np.max(window.x1) - np.min(window.x1))


def upward_mean_crossings(window: TimeSeries) -> np.ndarray:
    """Times where ``x1`` crosses its window mean going up, linearly interpolated."""
    _nonempty(window)
    c = window.x1 - np.mean(window.x1)
    idx = np.nonzero((c[:-1] < 0.0) & (c[1:] >= 0.0))[0]
    frac = -c[idx] / (c[idx + 1] - c[idx])
    return window.t[idx] + frac * window.tau


def measure_frequency(window: TimeSeries) -> float:
    """Angular frequency from the spacing of upward mean-crossings."""
    times = upward_mean_crossings(window)
    if times.size < 2:
        raise WindowError(f"need at least 2 upward mean-crossings, found {times.size}")
    return 2.0 * math.pi * (times.size - 1) / float(times[-1] - times[0])


def measure_average_power(window: TimeSeries, mode: str = "paper") -> float:
    """Average chattering power over the window.

    ``paper`` mode plugs the measured amplitude and frequency into
    ``4 A**2 w / pi``, the constant used by the predictions, so the two are
    comparable.  ``integral`` mode averages ``|u_bar * x1|`` over the window
    directly, which for a pure sinusoid is ``A**2 w / pi``.
    """
    if mode == "paper":
        A = measure_amplitude(window)
        w = measure_frequency(window)
        return 4.0 * A * A * w / math.pi
    if mode == "integral":
        _nonempty(window)
        return float(np.sum(np.abs(window.x1_dot * window.x1)) * window.tau / (len(window) * window.tau))
    raise DomainError(f"unknown power mode {mode!r}")


def measure(window: TimeSeries, power_mode: str = "paper",
            min_cycles: int = MIN_CYCLES) -> MeasuredChattering:
    """All three chattering parameters of one window."""
    times = upward_mean_crossings(window)
    cycles = max(times.size - 1, 0)
    if cycles < min_cycles:
        raise WindowError(f"window holds {cycles} full cycles; need {min_cycles}")
    return MeasuredChattering(
        amplitude=measure_amplitude(window),
        omega=measure_frequency(window),
        average_power=measure_average_power(window, power_mode),
        window_start=float(window.t[0]),
        window_end=float(window.t[-1]),
        cycles_used=cycles,
        power_mode=power_mode,
    )


def measure_run(spec: ControllerSpec, cfg: SimConfig, transient_fraction: float = 0.5,
                power_mode: str = "paper") -> MeasuredChattering:
    """Simulate and measure in one step."""
    ts = simulate(spec, cfg)
    return measure(steady_state_window(ts, transient_fraction), power_mode)


_METRICS: dict[str, Callable[[MeasuredChattering], float]] = {
    "amplitude": lambda m: m.amplitude,
    "frequency": lambda m: m.omega,
    "power": lambda m: m.average_power,
}


def empirical_crossover(metric: str, spec_a: ControllerSpec, spec_b: ControllerSpec,
                        mu_bracket: tuple[float, float], runs_config: SimConfig,
                        tol: float = 1e-3, transient_fraction: float = 0.5,
                        cache: dict | None = None) -> float:
    """Actuator time constant at which ``metric`` measured for two controllers
    coincides, found by bisection on ``mu``.

    Every evaluation simulates both controllers with ``runs_config`` (its
    ``mu`` replaced) and measures the steady-state window.  Bisection stops
    once the bracket is narrower than ``tol``; the result is the linear
    interpolation of the metric difference inside the final bracket.

    ``cache`` may be shared between calls; it maps ``(spec, mu)`` to the
    measurement so repeated searches over the same runs do not resimulate.
    """
    if metric not in _METRICS:
        raise DomainError(f"unknown metric {metric!r}; choose from {sorted(_METRICS)}")
    lo, hi = map(float, mu_bracket)
    if not 0 < lo < hi:
        raise DomainError("bracket must satisfy 0 < lo < hi")
    get = _METRICS[metric]
    cache = {} if cache is None else cache

    def run(spec, mu):
        key = (spec, mu, runs_config, transient_fraction)
        if key not in cache:
            cfg = dataclasses.replace(runs_config, mu=mu)
            cache[key] = measure_run(spec, cfg, transient_fraction)
        return cache[key]

    def diff(mu):
        return get(run(spec_a, mu)) - get(run(spec_b, mu))

    f_lo, f_hi = diff(lo), diff(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        raise NoCrossingError(
            f"{metric} difference does not change sign over [{lo:g}, {hi:g}]: "
            f"{f_lo:.6g} and {f_hi:.6g}", f_lo, f_hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = diff(mid)
        if f_mid == 0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    return lo - f_lo * (hi - lo) / (f_hi - f_lo)
