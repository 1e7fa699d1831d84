"""Figures of merit: fidelity, squeezing parameters, error sensitivities."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import CoherenceError, ConfigError, SensitivityError
from .model import JunctionConfig, expect_jx, expect_jz, expect_jz2, ground_state
from .propagate import default_steps, evolve
from .schedules import AmplitudeScaled, TimeShifted

FD_STEP = 1e-3
FD_RTOL = 0.05
# Derivative magnitudes below this are treated as zero when comparing step sizes;
# it sits well above the propagation noise floor (~1e-8 / delta).
FD_ATOL = 1e-5


@dataclass(frozen=True)
class MetricsRecord:
    fidelity: float
    xi_n_sq: float
    xi_s_sq: float
    xi_s_db: float
    alpha: float
    # None when robustness was not evaluated
    s_m: float | None = None
    s_t: float | None = None
    eta: float | None = None

    def to_dict(self):
        return asdict(self)


def fidelity(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ConfigError(f"state dimensions differ: {a.shape} vs {b.shape}")
    return float(abs(np.vdot(a, b)) ** 2)


def number_squeezing(state, config: JunctionConfig | None = None) -> float:
    n = len(state) - 1 if config is None else config.n_particles
    var = expect_jz2(state) - expect_jz(state) ** 2
    return var / (n / 4)


def coherent_squeezing(state, config: JunctionConfig | None = None):
    """(xi_S^2, xi_S^2 in dB, alpha) with alpha = 2<Jx>/N."""
    n = len(state) - 1 if config is None else config.n_particles
    alpha = 2 * expect_jx(state) / n
    if alpha == 0.0:
        raise CoherenceError("<Jx> = 0: coherent squeezing undefined")
    xi_s_sq = number_squeezing(state, config) / alpha ** 2
    return xi_s_sq, 10 * math.log10(xi_s_sq), alpha


def db_to_linear(db: float) -> float:
    return 10 ** (db / 10)


def imperfection(fid: float, s_m: float, s_t: float) -> float:
    return math.sqrt((1 - fid) ** 2 + s_m ** 2 + s_t ** 2)


def state_metrics(state, target, config: JunctionConfig | None = None) -> MetricsRecord:
    xi_s_sq, xi_s_db, alpha = coherent_squeezing(state, config)
    return MetricsRecord(fidelity(target, state), number_squeezing(state, config),
                         xi_s_sq, xi_s_db, alpha)


def _final_fidelity(schedule, config, steps, start, target):
    return fidelity(target, evolve(start, schedule, config, steps=steps).final_state)


def _central_difference(perturb, schedule, config, delta, steps, start, target):
    up = _final_fidelity(perturb(schedule, delta), config, steps, start, target)
    down = _final_fidelity(perturb(schedule, -delta), config, steps, start, target)
    return (up - down) / (2 * delta)


def _sensitivity(perturb, schedule, config, delta, steps, scale=1.0):
    if steps is None:
        steps = 2 * default_steps(schedule, config)
    start = ground_state(config, config.lambda_initial)
    target = ground_state(config, config.lambda_final)
    coarse = _central_difference(perturb, schedule, config, delta, steps, start, target) * scale
    fine = _central_difference(perturb, schedule, config, delta / 2, steps, start, target) * scale
    if abs(fine - coarse) <= FD_RTOL * abs(fine) + FD_ATOL:
        return abs(fine)
    richardson = (4 * fine - coarse) / 3
    if abs(richardson - fine) <= FD_RTOL * abs(richardson) + FD_ATOL:
        return abs(richardson)
    raise SensitivityError(
        f"derivative estimates disagree: {coarse:.4g} (delta={delta:g}) vs "
        f"{fine:.4g} (delta={delta / 2:g})")


def _scale_amplitude(schedule, d):
    return AmplitudeScaled(schedule, d)


def _shift_time(schedule, d):
    return TimeShifted(schedule, math.pi * d)


def sensitivity_amplitude(schedule, config: JunctionConfig, delta: float = FD_STEP,
                          steps: int | None = None) -> float:
    """|dF/d delta| at delta = 0 for the scaled control (1 + delta) Lambda(tau)."""
    return _sensitivity(_scale_amplitude, schedule, config, delta, steps)


def sensitivity_timeshift(schedule, config: JunctionConfig, delta: float = FD_STEP,
                          steps: int | None = None) -> float:
    """Central secant |F(delta) - F(-delta)| / (2 delta) for a shift of delta Rabi times.

    The windowed shift leaves F unchanged at first order (the final ground
    state is stationary and the endpoint mismatches are O(delta^2)), so the
    secant grows linearly with delta and a halving check cannot converge.
    The value is therefore the secant at the stated ``delta``.
    """
    if steps is None:
        steps = 2 * default_steps(schedule, config)
    start = ground_state(config, config.lambda_initial)
    target = ground_state(config, config.lambda_final)
    return abs(_central_difference(_shift_time, schedule, config, delta, steps, start, target))


def evaluate(schedule, config: JunctionConfig, steps: int | None = None,
             robustness: bool = True) -> MetricsRecord:
    """Propagate from the initial ground state and score against the final one."""
    start = ground_state(config, config.lambda_initial)
    target = ground_state(config, config.lambda_final)
    result = evolve(start, schedule, config, steps=steps)
    rec = state_metrics(result.final_state, target, config)
    if not robustness:
        return rec
    fd_steps = result.steps if steps is None else steps
    s_m = sensitivity_amplitude(schedule, config, steps=fd_steps)
    s_t = sensitivity_timeshift(schedule, config, steps=fd_steps)
    return MetricsRecord(rec.fidelity, rec.xi_n_sq, rec.xi_s_sq, rec.xi_s_db, rec.alpha,
                         s_m, s_t, imperfection(rec.fidelity, s_m, s_t))
