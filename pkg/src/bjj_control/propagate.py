"""Time evolution in the Fock basis, plus independent reference propagators.

The production stepper is the fourth-order commutator-free Magnus scheme of
Blanes & Moan: per step two exponentials of Hamiltonian combinations sampled
at the Gauss-Legendre nodes.  Because H(tau) = T + Lambda(tau) D, every such
combination is again real symmetric tridiagonal, and each exponential is
applied through the (2,2) diagonal Pade approximant (exactly unitary, fourth
order) with one pentadiagonal banded solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm, solve_banded

from .errors import ConfigError, ConvergenceError
from .model import JunctionConfig, beta_array, build_hamiltonian, interaction_diagonal

NORM_TOL = 1e-9
STEP_TOL = 5e-9  # ||psi(n) - psi(2n)||; bounds the fidelity change by 2 * STEP_TOL

_C1 = 0.5 - math.sqrt(3) / 6
_C2 = 0.5 + math.sqrt(3) / 6
_A1 = (3 - 2 * math.sqrt(3)) / 12
_A2 = (3 + 2 * math.sqrt(3)) / 12


@dataclass
class EvolutionResult:
    final_state: np.ndarray
    norm_drift: float
    steps: int
    trajectory: list = field(default_factory=list)


def _pade_apply(d, e, x, ab):
    """exp(-i X) x with X the tridiagonal (d, e), via the (2,2) Pade approximant.

    ``ab`` is scratch space of shape (5, n), complex.
    """
    d2 = d * d
    e2 = e * e
    sq = d2.copy()
    sq[:-1] += e2
    sq[1:] += e2
    off1 = e * (d[:-1] + d[1:])
    off2 = e[:-1] * e[1:]

    xx = d * x
    xx[:-1] += e * x[1:]
    xx[1:] += e * x[:-1]
    xxx = d * xx
    xxx[:-1] += e * xx[1:]
    xxx[1:] += e * xx[:-1]
    rhs = x - 0.5j * xx - xxx / 12.0

    ab[0, 2:] = -off2 / 12.0
    ab[1, 1:] = 0.5j * e - off1 / 12.0
    ab[2, :] = 1.0 + 0.5j * d - sq / 12.0
    ab[3, :-1] = ab[1, 1:]
    ab[4, :-2] = ab[0, 2:]
    return solve_banded((2, 2), ab, rhs, overwrite_b=True, check_finite=False)


def _segments(schedule, steps):
    tf = schedule.tau_final
    cuts = [0.0] + [b for b in getattr(schedule, "breakpoints", ()) if 0 < b < tf] + [tf]
    lengths = np.diff(cuts)
    counts = np.maximum(1, np.round(steps * lengths / tf).astype(int))
    return list(zip(cuts[:-1], lengths, counts))


def _run(initial, schedule, config, steps, sample_every=None, observe=None,
         store_states=False):
    n = config.n_particles
    off = -beta_array(n)
    diag_int = interaction_diagonal(n)
    c = np.array(initial, dtype=complex)
    ab = np.zeros((5, n + 1), dtype=complex)
    trajectory = []

    def record(tau, state):
        if observe is not None:
            trajectory.append((tau, observe(tau, state)))
        elif store_states:
            trajectory.append((tau, state.copy()))

    if sample_every:
        record(0.0, c)
    k = 0
    total = 0
    for start, length, count in _segments(schedule, steps):
        dt = length / count
        starts = start + dt * np.arange(count)
        lam1 = np.asarray(schedule(starts + _C1 * dt), dtype=float)
        lam2 = np.asarray(schedule(starts + _C2 * dt), dtype=float)
        lam_a = 2 * (_A2 * lam1 + _A1 * lam2)
        lam_b = 2 * (_A1 * lam1 + _A2 * lam2)
        half = 0.5 * dt
        e = half * off
        for j in range(count):
            c = _pade_apply(half * lam_a[j] * diag_int, e, c, ab)
            c = _pade_apply(half * lam_b[j] * diag_int, e, c, ab)
            k += 1
            if sample_every and k % sample_every == 0:
                record(start + (j + 1) * dt, c)
        total += count
    if sample_every and k % sample_every:
        record(schedule.tau_final, c)
    drift = abs(float(np.vdot(c, c).real) - 1.0)
    return EvolutionResult(c, drift, total, trajectory)


def default_steps(schedule, config: JunctionConfig) -> int:
    tau = np.linspace(0.0, schedule.tau_final, 401)
    lam_max = float(np.max(np.abs(schedule(tau))))
    return max(2000, math.ceil(200 * schedule.tau_final * (1 + lam_max)))


def evolve(initial, schedule, config: JunctionConfig, steps: int | None = None, *,
           sample_every: int | None = None, observe=None, store_states=False,
           max_doublings: int = 6) -> EvolutionResult:
    """Integrate i dc/dtau = H(Lambda(tau)) c from 0 to tau_final.

    With ``steps=None`` the step count starts at :func:`default_steps` and is
    doubled until two successive runs agree to ``STEP_TOL`` in the state norm.
    ``observe(tau, state)`` is called every ``sample_every`` steps (and at the
    end) and its results collected in ``trajectory``.
    """
    initial = np.asarray(initial, dtype=complex)
    if initial.shape != (config.dim,):
        raise ConfigError(f"state has shape {initial.shape}, expected ({config.dim},)")
    if abs(np.vdot(initial, initial).real - 1) > NORM_TOL:
        raise ConfigError("initial state is not normalized")
    if abs(schedule.tau_final - config.tau_final) > 1e-14 * config.tau_final:
        raise ConfigError("schedule and config disagree on tau_final")

    if steps is not None:
        if steps < 1:
            raise ConfigError("steps must be >= 1")
        result = _run(initial, schedule, config, steps, sample_every, observe, store_states)
    else:
        n = default_steps(schedule, config)
        coarse = _run(initial, schedule, config, n)
        for _ in range(max_doublings):
            n *= 2
            fine = _run(initial, schedule, config, n)
            if np.linalg.norm(fine.final_state - coarse.final_state) <= STEP_TOL:
                break
            coarse = fine
        else:
            raise ConvergenceError(
                f"no step-size convergence after {max_doublings} doublings "
                f"(steps={n}); pass a finer explicit step count")
        if sample_every or observe is not None or store_states:
            result = _run(initial, schedule, config, n, sample_every, observe, store_states)
        else:
            result = fine
    if result.norm_drift > NORM_TOL:
        raise ConvergenceError(
            f"norm drift {result.norm_drift:.2e} exceeds {NORM_TOL:.0e} with "
            f"{result.steps} steps; use a finer time grid")
    return result


def evolve_dense_oracle(initial, schedule, config: JunctionConfig, slices: int) -> np.ndarray:
    """Piecewise-constant propagation with dense matrix exponentials.

    Each slice freezes the Hamiltonian at the slice midpoint.  Only meant for
    small N as a validation reference.
    """
    if config.n_particles > 16:
        raise ConfigError("dense oracle refuses N > 16")
    dt = schedule.tau_final / slices
    mids = (np.arange(slices) + 0.5) * dt
    lams = np.asarray(schedule(mids), dtype=float)
    c = np.array(initial, dtype=complex)
    cache = {}
    for lam in lams:
        u = cache.get(lam)
        if u is None:
            u = expm(-1j * dt * build_hamiltonian(config, lam).to_dense())
            if len(cache) < 4:
                cache[lam] = u
        c = u @ c
    return c


def evolve_harmonic_grid(psi0, lam_fn, tau_final: float, z: np.ndarray, h: float,
                         steps: int) -> np.ndarray:
    """Split-operator solution of i h d_tau psi = [-h^2 d_z^2 + (Lambda + 1) z^2] psi.

    ``z`` must be uniform; boundaries are periodic, so the domain should
    contain the wavefunction with negligible tails.
    """
    dz = z[1] - z[0]
    k = 2 * np.pi * np.fft.fftfreq(len(z), d=dz)
    dt = tau_final / steps
    kinetic = np.exp(-1j * dt * h * k ** 2)  # exp(-i dt h^2 k^2 / h)
    psi = np.array(psi0, dtype=complex)
    z2 = z ** 2
    mids = (np.arange(steps) + 0.5) * dt
    lams = np.asarray(lam_fn(mids), dtype=float)
    for lam in lams:
        half_pot = np.exp(-0.5j * dt * (lam + 1) * z2 / h)
        psi = half_pot * np.fft.ifft(kinetic * np.fft.fft(half_pot * psi))
    return psi
