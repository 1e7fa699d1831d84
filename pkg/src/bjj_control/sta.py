"""Shortcut-to-adiabaticity schedule for the harmonic approximation.

In tau units the harmonic model ``i h d_tau psi = [-h^2 d_z^2 + (Lambda + 1) z^2] psi``
is an oscillator with hbar -> h, mass 1/2 and omega(tau) = 2 sqrt(1 + Lambda).
Its Lewis-Riesenfeld modes are scaled Hermite functions whose width follows a
scaling function b(tau) obeying the Ermakov equation

    b'' - omega0^2 / b^3 + omega(tau)^2 b = 0.

Fixing b by polynomial boundary conditions and inverting the Ermakov equation
gives the STA control Lambda_0(tau).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridError, ScheduleError
from .model import JunctionConfig

# Quintic smoothstep 10 s^3 - 15 s^4 + 6 s^5 and its derivatives in s.
_SMOOTH = np.polynomial.Polynomial([0, 0, 0, 10, -15, 6])


def gamma(lambda_i: float, lambda_f: float) -> float:
    """Final width ratio sqrt(omega(0) / omega(tau_f))."""
    if not (1 + lambda_i > 0 and 1 + lambda_f > 0):
        raise ScheduleError(
            f"harmonic approximation needs 1 + Lambda > 0 (got {lambda_i}, {lambda_f})")
    return ((1 + lambda_i) / (1 + lambda_f)) ** 0.25


@dataclass(frozen=True)
class ScalingFunction:
    """b(tau) = 1 + (gamma - 1) p(tau / tau_f) with p the quintic smoothstep."""

    gamma: float
    tau_final: float

    @property
    def coefficients(self) -> np.ndarray:
        """Polynomial coefficients of b in powers of s = tau / tau_f."""
        c = (self.gamma - 1) * _SMOOTH.coef
        c[0] += 1.0
        return c

    def _s(self, tau):
        return np.asarray(tau, dtype=float) / self.tau_final

    def __call__(self, tau):
        return 1.0 + (self.gamma - 1) * _SMOOTH(self._s(tau))

    def derivative(self, tau, order=1):
        scale = (self.gamma - 1) / self.tau_final ** order
        return scale * _SMOOTH.deriv(order)(self._s(tau))

    def check_positive(self, samples=2001):
        b = self(np.linspace(0.0, self.tau_final, samples))
        if np.min(b) <= 0:
            raise ScheduleError(f"scaling function reaches {np.min(b):.3g} <= 0")


def build_scaling(config: JunctionConfig) -> ScalingFunction:
    g = gamma(config.lambda_initial, config.lambda_final)
    scaling = ScalingFunction(g, config.tau_final)
    scaling.check_positive()
    return scaling


def lambda_sta(tau, scaling: ScalingFunction, config: JunctionConfig):
    """STA control Lambda_0(tau) from the Ermakov inversion."""
    b = scaling(tau)
    if np.any(b <= 0):
        raise ScheduleError("scaling function is nonpositive; STA schedule is singular")
    b2 = scaling.derivative(tau, 2)
    return -1.0 + (1.0 + config.lambda_initial) / b ** 4 - b2 / (4.0 * b)


def lambda_adiabatic(tau, config: JunctionConfig):
    """Cubic ramp with zero slope at both ends."""
    s = np.asarray(tau, dtype=float) / config.tau_final
    li, lf = config.lambda_initial, config.lambda_final
    return li + (lf - li) * (3 * s ** 2 - 2 * s ** 3)


def omega(lam):
    return 2.0 * np.sqrt(1.0 + np.asarray(lam, dtype=float))


@dataclass(frozen=True)
class LRBasisParams:
    omega0: float
    z0: float
    h: float

    @classmethod
    def from_config(cls, config: JunctionConfig) -> "LRBasisParams":
        w0 = float(omega(config.lambda_initial))
        h = config.h
        return cls(w0, math.sqrt(2 * h / w0), h)


@dataclass(frozen=True)
class ZGrid:
    """Symmetric uniform grid z_k = k dz, k = -K..K, with dz = h / q."""

    h: float
    q: int
    half_points: int

    @property
    def dz(self) -> float:
        return self.h / self.q

    @property
    def z(self) -> np.ndarray:
        k = np.arange(-self.half_points, self.half_points + 1)
        return k * self.dz

    @property
    def size(self) -> int:
        return 2 * self.half_points + 1

    def inner(self, a, b) -> complex:
        """<a|b> by the rectangle rule (exact for band-limited tails)."""
        return complex(np.sum(np.conj(a) * b) * self.dz)


def make_grid(config: JunctionConfig, points_per_width: int = 32,
              extent: float | None = None) -> ZGrid:
    """Grid with dz = h/q, at least ``points_per_width`` points across z0 min(1, gamma).

    ``extent`` defaults to the physical support 1 + h; it is rounded up to a
    whole number of h so the lattice points z_m stay on the grid.
    """
    params = LRBasisParams.from_config(config)
    g = gamma(config.lambda_initial, config.lambda_final)
    width = params.z0 * min(1.0, g)
    h = config.h
    q = max(4, math.ceil(points_per_width * h / width))
    if extent is None:
        extent = 1.0 + h
    half = q * math.ceil(extent / h - 1e-12)
    return ZGrid(h, q, half)


def hermite(n: int, x: np.ndarray) -> np.ndarray:
    """Physicists' Hermite polynomial by the three-term recurrence."""
    h_prev = np.ones_like(x)
    if n == 0:
        return h_prev
    h_cur = 2 * x
    for k in range(1, n):
        h_prev, h_cur = h_cur, 2 * x * h_cur - 2 * k * h_prev
    return h_cur


_GL_X, _GL_W = np.polynomial.legendre.leggauss(40)


def inverse_b2_integral(scaling: ScalingFunction, tau, panels: int = 8):
    """int_0^tau ds / b(s)^2 by panelled Gauss-Legendre quadrature."""
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    out = np.empty_like(taus)
    for i, t in enumerate(taus):
        edges = np.linspace(0.0, t, panels + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        s = mid[:, None] + half[:, None] * _GL_X[None, :]
        out[i] = np.sum(half[:, None] * _GL_W[None, :] / scaling(s) ** 2)
    return out if np.ndim(tau) else float(out[0])


def lr_phase(n: int, tau, scaling: ScalingFunction, params: LRBasisParams):
    """Lewis-Riesenfeld phase -(n + 1/2) omega0 int_0^tau ds / b^2."""
    return -(n + 0.5) * params.omega0 * inverse_b2_integral(scaling, tau)


def chi(n: int, tau: float, grid: ZGrid, scaling: ScalingFunction,
        params: LRBasisParams, phase: float | None = None,
        min_points: int = 16, derivative: int = 0) -> np.ndarray:
    """Lewis-Riesenfeld mode chi_n(tau, z) sampled on ``grid``.

    ``phase`` may be supplied to reuse a precomputed LR phase.  With
    ``derivative=2`` the exact second z-derivative is returned instead, which
    stays accurate where the grid edge cuts through the mode's tails.
    """
    if n < 0:
        raise ValueError("mode index must be nonnegative")
    if derivative not in (0, 2):
        raise ValueError("derivative must be 0 or 2")
    b = float(scaling(tau))
    db = float(scaling.derivative(tau, 1))
    width = params.z0 * b
    if width / grid.dz < min_points:
        raise GridError(
            f"grid too coarse: {width / grid.dz:.1f} points per width z0*b "
            f"(need {min_points})")
    if phase is None:
        phase = lr_phase(n, tau, scaling, params)
    z = grid.z
    x = z / width
    a = -0.5 / width ** 2 + 1j * db / (4 * params.h * b)  # exponent a z^2
    norm = (math.pi * params.z0 ** 2) ** -0.25 / math.sqrt(2.0 ** n * math.factorial(n) * b)
    envelope = norm * np.exp(1j * phase) * np.exp(a * z ** 2)
    if derivative == 0:
        return envelope * hermite(n, x)
    p0 = hermite(n, x)
    p1 = 2 * n * hermite(n - 1, x) / width if n >= 1 else 0.0
    p2 = 4 * n * (n - 1) * hermite(n - 2, x) / width ** 2 if n >= 2 else 0.0
    s1 = 2 * a * z
    return envelope * (p2 + 2 * p1 * s1 + p0 * (2 * a + s1 ** 2))
