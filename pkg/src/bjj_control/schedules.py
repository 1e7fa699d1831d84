"""Control schedules tau -> Lambda(tau).

A schedule is any callable on [0, tau_final] that also exposes
``tau_final`` and ``breakpoints`` (interior times where it may be
discontinuous or have a kink; the propagator aligns steps to them).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ScheduleError
from .model import JunctionConfig
from .sta import build_scaling, lambda_adiabatic, lambda_sta


@dataclass(frozen=True)
class CorrectionPolynomial:
    """Lagrange interpolant through (t_j, lambda_j) with zero endpoint values.

    ``node_times`` holds all nu + 2 nodes including 0 and tau_final;
    ``node_values`` holds the nu interior values.
    """

    node_times: tuple
    node_values: tuple

    def __post_init__(self):
        t = np.asarray(self.node_times, dtype=float)
        if len(t) != len(self.node_values) + 2:
            raise ScheduleError("need exactly two more nodes than interior values")
        if len(np.unique(t)) != len(t):
            raise ScheduleError(f"coincident interpolation nodes: {self.node_times}")

    @classmethod
    def uniform(cls, tau_final: float, values) -> "CorrectionPolynomial":
        values = tuple(float(v) for v in values)
        nu = len(values)
        return cls(tuple(uniform_nodes(tau_final, nu)), values)

    @property
    def nu(self) -> int:
        return len(self.node_values)

    def cardinal(self, i: int, tau):
        """i-th Lagrange cardinal function, i = 1..nu, over all nu + 2 nodes."""
        t = np.asarray(self.node_times, dtype=float)
        tau = np.asarray(tau, dtype=float)
        out = np.ones_like(tau)
        for k, tk in enumerate(t):
            if k != i:
                out = out * (tau - tk) / (t[i] - tk)
        return out

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        out = np.zeros_like(tau)
        for i, lam in enumerate(self.node_values, start=1):
            if lam != 0.0:
                out = out + lam * self.cardinal(i, tau)
        return out


def lagrange_correction(poly: CorrectionPolynomial, tau):
    return poly(tau)


def uniform_nodes(tau_final: float, nu: int) -> np.ndarray:
    """nu + 2 equispaced nodes; the last is exactly tau_final so P(tau_f) == 0."""
    t = np.arange(nu + 2) * tau_final / (nu + 1)
    t[-1] = tau_final
    return t


BASE_KINDS = ("constant", "adiabatic", "sta")


@dataclass(frozen=True)
class ControlSchedule:
    """Base schedule (constant | adiabatic | sta) plus optional Lagrange correction."""

    config: JunctionConfig
    base: str
    correction: CorrectionPolynomial | None = None
    constant_value: float | None = None
    breakpoints: tuple = field(default=(), init=False)

    def __post_init__(self):
        if self.base not in BASE_KINDS:
            raise ScheduleError(f"unknown base schedule {self.base!r}")
        if self.base == "sta":
            object.__setattr__(self, "_scaling", build_scaling(self.config))

    @property
    def tau_final(self) -> float:
        return self.config.tau_final

    def base_value(self, tau):
        tau = np.asarray(tau, dtype=float)
        if self.base == "constant":
            value = (self.config.lambda_initial if self.constant_value is None
                     else self.constant_value)
            return np.full_like(tau, value)
        if self.base == "adiabatic":
            return lambda_adiabatic(tau, self.config)
        return lambda_sta(tau, self._scaling, self.config)

    def __call__(self, tau):
        value = self.base_value(tau)
        if self.correction is not None:
            value = value + self.correction(tau)
        return value

    def with_correction(self, poly: CorrectionPolynomial) -> "ControlSchedule":
        return ControlSchedule(self.config, self.base, poly, self.constant_value)


@dataclass(frozen=True)
class AmplitudeScaled:
    """(1 + delta) Lambda(tau)."""

    schedule: object
    delta: float

    @property
    def tau_final(self):
        return self.schedule.tau_final

    @property
    def breakpoints(self):
        return self.schedule.breakpoints

    def __call__(self, tau):
        return (1.0 + self.delta) * self.schedule(tau)


@dataclass(frozen=True)
class TimeShifted:
    """Lambda(tau + delta) for tau in [-delta, tau_f - delta], Lambda(tau) elsewhere.

    ``delta`` is in tau units.
    """

    schedule: object
    delta: float

    def __post_init__(self):
        if abs(self.delta) >= self.schedule.tau_final:
            raise ScheduleError("time shift exceeds the protocol duration")

    @property
    def tau_final(self):
        return self.schedule.tau_final

    @property
    def breakpoints(self):
        edge = self.tau_final - self.delta if self.delta > 0 else -self.delta
        inner = [edge] if 0 < edge < self.tau_final else []
        return tuple(sorted(set(self.schedule.breakpoints) | set(inner)))

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        d = self.delta
        inside = (tau >= -d) & (tau <= self.tau_final - d)
        shifted = np.clip(tau + d, 0.0, self.tau_final)
        return np.where(inside, self.schedule(shifted), self.schedule(tau))
