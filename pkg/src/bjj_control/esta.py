"""Enhanced-STA corrections to the harmonic STA schedule.

The corrected control is Lambda_0(tau) + P(tau), with P a Lagrange
polynomial through uniform nodes whose endpoint values are pinned to zero.
The interior node values come from overlap integrals along the STA
trajectory of the Lewis-Riesenfeld modes:

    G_2   = int dtau <chi_2| dH |chi_0>
    K_2,i = int dtau l_i(tau) <chi_2| z^2 |chi_0>

where dH is the difference between the model Hamiltonian (the continuum
approximation H1 or the exact lattice operator H2) and the harmonic one.
Odd modes drop out by parity, so only n = 2 contributes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .errors import GridError, QuadratureError, ScheduleError
from .model import JunctionConfig, ground_state
from .schedules import ControlSchedule, CorrectionPolynomial, lagrange_correction, uniform_nodes
from .sta import LRBasisParams, ZGrid, build_scaling, chi, inverse_b2_integral, make_grid

log = logging.getLogger(__name__)

__all__ = [
    "EstaVariant", "VARIANTS", "CorrectionPolynomial", "lagrange_correction",
    "apply_delta_h1", "apply_delta_h2", "compute_g2", "compute_k2",
    "esta_vector", "design_correction", "build_schedule",
]


@dataclass(frozen=True)
class EstaVariant:
    hamiltonian_kind: str  # "H1" | "H2"; "H0" gives dH = 0 (test hook)
    nu: int
    n_modes: int = 1

    def __post_init__(self):
        if self.hamiltonian_kind not in ("H0", "H1", "H2"):
            raise ScheduleError(f"unknown Hamiltonian kind {self.hamiltonian_kind!r}")
        if self.nu < 1:
            raise ScheduleError("nu must be >= 1")


VARIANTS = {
    "esta_h1_nu5": EstaVariant("H1", 5),
    "esta_h2_nu5": EstaVariant("H2", 5),
    "esta_h2_nu1": EstaVariant("H2", 1),
}


def _second_difference(psi, dz):
    out = -2.0 * psi
    out[1:] += psi[:-1]
    out[:-1] += psi[1:]
    return out / dz ** 2


def _shift(values, q):
    """f(z + q dz) on the grid, zero-filled past the edges."""
    out = np.zeros_like(values)
    if q > 0:
        out[:-q] = values[q:]
    elif q < 0:
        out[-q:] = values[:q]
    else:
        out[:] = values
    return out


def b0(z):
    z = np.asarray(z, dtype=float)
    return np.sqrt(np.clip(1.0 - z ** 2, 0.0, None))


def b_h(z, h):
    """Hopping profile 1/2 sqrt((1 + z + h)(1 - z)) on (-1 - h, 1), zero elsewhere."""
    z = np.asarray(z, dtype=float)
    inside = (z > -1 - h) & (z < 1)
    prod = np.where(inside, (1 + z + h) * (1 - z), 0.0)
    return 0.5 * np.sqrt(np.clip(prod, 0.0, None))


def _kinetic(psi, grid, d2psi):
    return _second_difference(psi, grid.dz) if d2psi is None else d2psi


def apply_delta_h1(psi, grid: ZGrid, config: JunctionConfig, tail_tol: float | None = None,
                   d2psi=None):
    """(H1 - H0) psi = -h^2 d(b0 d psi) + h^2 d^2 psi - 2 b0 psi - z^2 psi.

    The divergence term uses the conservative centred stencil with b0 at
    half points; b0 vanishes at |z| = 1, so it needs no boundary treatment.
    The H0 kinetic term uses ``d2psi`` when given and a second difference
    otherwise.  The latter is only accurate when psi vanishes at the grid
    edges.  ``tail_tol`` optionally rejects states with |psi| above it
    outside |z| < 1.
    """
    z = grid.z
    dz = grid.dz
    h = config.h
    if tail_tol is not None:
        tail = np.max(np.abs(psi[np.abs(z) >= 1.0]), initial=0.0)
        if tail > tail_tol:
            raise GridError(f"wavefunction tail {tail:.2e} at |z| >= 1 exceeds {tail_tol:.0e}")
    b_half = b0(z[:-1] + 0.5 * dz)
    flux = b_half * np.diff(psi) / dz
    div = np.zeros_like(psi)
    div[:-1] += flux
    div[1:] -= flux
    div = div / dz  # d(b0 d psi), with zero flux beyond the grid
    return -h ** 2 * div + h ** 2 * _kinetic(psi, grid, d2psi) - (2 * b0(z) + z ** 2) * psi


def apply_delta_h2(psi, grid: ZGrid, config: JunctionConfig, d2psi=None):
    """(H2 - H0) psi = -2 [(b_h psi)(z - h) + b_h(z) psi(z + h)] + h^2 d^2 psi - z^2 psi."""
    h = config.h
    if not math.isclose(grid.h, h, rel_tol=1e-12) or grid.q < 4:
        raise GridError(f"grid spacing must be h/q with integer q >= 4 (h={h}, grid.h={grid.h})")
    z = grid.z
    bh = b_h(z, h)
    hop = _shift(bh * psi, -grid.q) + bh * _shift(psi, grid.q)
    return -2.0 * hop + h ** 2 * _kinetic(psi, grid, d2psi) - z ** 2 * psi


def _apply_delta(kind, psi, grid, config, d2psi=None):
    if kind == "H1":
        return apply_delta_h1(psi, grid, config, d2psi=d2psi)
    if kind == "H2":
        return apply_delta_h2(psi, grid, config, d2psi=d2psi)
    return np.zeros_like(psi)


@dataclass
class _Trajectory:
    """chi_0 and chi_2 along the STA trajectory at the quadrature samples."""

    taus: np.ndarray
    grid: ZGrid
    params: LRBasisParams
    scaling: object

    def __post_init__(self):
        self._integral = inverse_b2_integral(self.scaling, self.taus)

    def modes(self, j, n_list, derivative=0):
        tau = self.taus[j]
        out = []
        for n in n_list:
            phase = -(n + 0.5) * self.params.omega0 * self._integral[j]
            out.append(chi(n, tau, self.grid, self.scaling, self.params, phase=phase,
                           derivative=derivative))
        return out


def _trajectory(config, time_samples, grid=None):
    if time_samples < 51 or time_samples % 2 == 0:
        raise QuadratureError("time_samples must be odd and >= 51")
    scaling = build_scaling(config)
    params = LRBasisParams.from_config(config)
    grid = make_grid(config) if grid is None else grid
    taus = np.linspace(0.0, config.tau_final, time_samples)
    return _Trajectory(taus, grid, params, scaling)


def overlap_series(config: JunctionConfig, kind: str, time_samples: int = 201,
                   grid: ZGrid | None = None):
    """<chi_2|dH|chi_0> and <chi_2|z^2|chi_0> at each quadrature sample."""
    traj = _trajectory(config, time_samples, grid)
    z2 = traj.grid.z ** 2
    dh = np.empty(time_samples, dtype=complex)
    zz = np.empty(time_samples, dtype=complex)
    for j in range(time_samples):
        c0, c2 = traj.modes(j, (0, 2))
        (d2c0,) = traj.modes(j, (0,), derivative=2)
        dh[j] = traj.grid.inner(c2, _apply_delta(kind, c0, traj.grid, config, d2c0))
        zz[j] = traj.grid.inner(c2, z2 * c0)
    return traj.taus, dh, zz


def _converged(coarse, fine, what, rtol=1e-4):
    coarse = np.atleast_1d(coarse)
    fine = np.atleast_1d(fine)
    scale = np.max(np.abs(fine))
    if scale == 0.0:
        return
    if np.max(np.abs(fine - coarse)) > rtol * scale:
        raise QuadratureError(
            f"{what} not converged under sample doubling: "
            f"{np.max(np.abs(fine - coarse)) / scale:.2e} relative change")


def _g2_once(variant, config, samples, grid):
    taus, dh, _ = overlap_series(config, variant.hamiltonian_kind, samples, grid)
    return complex(simpson(dh, x=taus))


def compute_g2(variant: EstaVariant, config: JunctionConfig, time_samples: int = 201,
               grid: ZGrid | None = None, confirm: bool = True) -> complex:
    g = _g2_once(variant, config, time_samples, grid)
    if not confirm:
        return g
    fine = _g2_once(variant, config, 2 * time_samples - 1, grid)
    _converged(g, fine, "G_2")
    return fine


def _k2_once(config, nodes, samples, grid):
    taus, _, zz = overlap_series(config, "H0", samples, grid)
    poly = CorrectionPolynomial(tuple(nodes), (0.0,) * (len(nodes) - 2))
    return np.array([simpson(poly.cardinal(i, taus) * zz, x=taus)
                     for i in range(1, len(nodes) - 1)])


def compute_k2(config: JunctionConfig, nodes, time_samples: int = 201,
               grid: ZGrid | None = None, confirm: bool = True) -> np.ndarray:
    """K_2 components for the interior nodes of ``nodes`` (all nu + 2 node times)."""
    k = _k2_once(config, nodes, time_samples, grid)
    if not confirm:
        return k
    fine = _k2_once(config, nodes, 2 * time_samples - 1, grid)
    _converged(k, fine, "K_2")
    return fine


def esta_vector(g2: complex, k2) -> np.ndarray:
    """Correction step lambda = v ||v||^2 / (v^T H v).

    v = Re(G_2* K_2) and H_lk = K_2,l K_2,k*, whose quadratic form v^T H v =
    |K_2 . v|^2 is real.  This is the Newton step along v of the quadratic
    fidelity model; its sign is left to the caller's fidelity guard.
    """
    k2 = np.asarray(k2, dtype=complex)
    v = np.real(np.conj(g2) * k2)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        log.warning("eSTA gradient vanishes; returning a zero correction")
        return np.zeros_like(v)
    hess = np.real(np.outer(k2, np.conj(k2)))
    quad = float(v @ hess @ v)
    return v * norm ** 2 / quad


def selection_rule_residual(config: JunctionConfig, time_samples: int = 51,
                            grid: ZGrid | None = None) -> float:
    """max over tau and n in {1, 3} of |<chi_n|z^2|chi_0>| / z0^2."""
    traj = _trajectory(config, time_samples, grid)
    z2 = traj.grid.z ** 2
    worst = 0.0
    for j in range(time_samples):
        c0, c1, c3 = traj.modes(j, (0, 1, 3))
        for cn in (c1, c3):
            worst = max(worst, abs(traj.grid.inner(cn, z2 * c0)))
    return worst / traj.params.z0 ** 2


@dataclass
class EstaDesign:
    """Everything computed while designing one eSTA schedule."""

    variant: EstaVariant
    schedule: ControlSchedule
    g2: complex
    k2: np.ndarray
    raw_lambdas: np.ndarray
    sign: int
    guard_fidelities: dict = field(default_factory=dict)

    @property
    def lambdas(self) -> np.ndarray:
        return np.asarray(self.schedule.correction.node_values)


def design_correction(variant: EstaVariant, config: JunctionConfig,
                      time_samples: int = 201, guard_steps: int = 1000,
                      grid: ZGrid | None = None) -> EstaDesign:
    from .propagate import evolve

    grid = make_grid(config) if grid is None else grid
    residual = selection_rule_residual(config, grid=grid)
    if residual > 1e-10:
        raise ScheduleError(f"parity selection rule violated: |<chi_odd|z^2|chi_0>| = {residual:.2e} z0^2")
    nodes = uniform_nodes(config.tau_final, variant.nu)
    g2 = compute_g2(variant, config, time_samples, grid)
    k2 = compute_k2(config, nodes, time_samples, grid)
    raw = esta_vector(g2, k2)

    sta = ControlSchedule(config, "sta")
    if not np.any(raw):
        return EstaDesign(variant, sta.with_correction(CorrectionPolynomial(tuple(nodes), tuple(raw))),
                          g2, k2, raw, 0)
    start = ground_state(config, config.lambda_initial)
    target = ground_state(config, config.lambda_final)
    fids = {}
    candidates = {}
    for sign in (1, -1):
        sched = sta.with_correction(CorrectionPolynomial(tuple(nodes), tuple(sign * raw)))
        final = evolve(start, sched, config, steps=guard_steps).final_state
        fids[sign] = abs(np.vdot(target, final)) ** 2
        candidates[sign] = sched
    best = max(fids, key=fids.get)
    return EstaDesign(variant, candidates[best], g2, k2, raw, best, fids)


def build_schedule(variant: EstaVariant, config: JunctionConfig, **kwargs) -> ControlSchedule:
    return design_correction(variant, config, **kwargs).schedule
