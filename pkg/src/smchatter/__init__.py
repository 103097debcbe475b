"""Chattering prediction for sliding-mode controllers behind fast actuators.

Describing functions and harmonic balance give the amplitude, frequency and
average power of the limit cycle; a fixed-step simulation of the same loop
measures them independently.
"""

from .describing import (ControllerSpec, OscillationPoint, Variant, alpha1,
                         describing_function, df_lsv_lcsmc, df_numeric, df_stc,
                         df_tsv_lcsmc, neg_reciprocal_locus, signed_power)
from .errors import (DivergenceError, DomainError, NoCrossingError,
                     SingularityError, StabilityViolationError, WindowError)
from .harmonic_balance import (ChatteringPrediction, CriticalMuReport, HbSolveResult,
                               average_power, critical_mu_amplitude,
                               critical_mu_frequency, critical_mu_power, predict,
                               solve_lsv_closed_form, solve_numeric,
                               solve_stc_closed_form, sweep)
from .lti import (RationalTransferFunction, actuator_tf, eval_response, loop_tf,
                  nyquist_locus)
from .metrics import (MeasuredChattering, empirical_crossover, measure,
                      measure_amplitude, measure_average_power, measure_frequency)
from .simulation import SimConfig, TimeSeries, simulate, steady_state_window

__version__ = "0.1.0"
