"""Spin-squeezed state preparation in an internal bosonic Josephson junction.

Control schedules (adiabatic, STA, eSTA), exact Fock-space propagation and
figures of merit for the two-mode Bose-Hubbard model.
"""

from .errors import (
    BJJError, CoherenceError, ConfigError, ConvergenceError, GridError,
    QuadratureError, ScheduleError, SensitivityError, TableFormatError,
)
from .esta import VARIANTS, EstaVariant, build_schedule, design_correction
from .metrics import MetricsRecord, evaluate, fidelity, number_squeezing, coherent_squeezing
from .model import JunctionConfig, build_hamiltonian, ground_state
from .propagate import evolve
from .schedules import ControlSchedule, CorrectionPolynomial
from .sweep import ResultTable, SweepPlan, load, persist, run_sweep

__version__ = "0.1.0"
