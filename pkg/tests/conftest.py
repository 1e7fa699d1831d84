"""Shared, implementation-independent reference constructions."""

import math

import numpy as np
import pytest

from bjj_control.propagate import evolve_harmonic_grid
from bjj_control.sta import LRBasisParams, build_scaling


def two_mode_operators(n_particles):
    """Dense J_x, J_z built from two bosonic modes with n1 + n2 = N.

    Basis index k corresponds to n1 = k, n2 = N - k, so m = (n1 - n2) / 2 = k - N/2.
    """
    dim = n_particles + 1
    a1_dag_a2 = np.zeros((dim, dim))
    for n1 in range(n_particles):
        n2 = n_particles - n1
        # a1^dag a2 |n1, n2> = sqrt((n1 + 1) n2) |n1 + 1, n2 - 1>
        a1_dag_a2[n1 + 1, n1] = math.sqrt((n1 + 1) * n2)
    jx = 0.5 * (a1_dag_a2 + a1_dag_a2.T)
    n1 = np.arange(dim)
    jz = np.diag(0.5 * (n1 - (n_particles - n1)))
    return jx, jz


def dense_hamiltonian(n_particles, lam):
    """H = -2 J_x + (2 Lambda / N) J_z^2 in tau units."""
    jx, jz = two_mode_operators(n_particles)
    return -2.0 * jx + (2.0 * lam / n_particles) * jz @ jz


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# ---- expensive reference sweeps, shared across modules ----------------------

TF_GRID = (0.02, 0.05, 0.1, 0.15, 0.2)
FIG_SCHEMES = ("adiabatic", "sta", "esta_h1_nu5", "esta_h2_nu5", "esta_h2_nu1")


def _timed_sweep(plan):
    import time

    from bjj_control.sweep import run_sweep

    t0 = time.perf_counter()
    table = run_sweep(plan)
    return table, time.perf_counter() - t0


SWEEP_FIXTURES = {"n10_sweep", "n100_sweep", "n100_robust"}


def pytest_collection_modifyitems(config, items):
    for item in items:
        if SWEEP_FIXTURES & set(getattr(item, "fixturenames", ())):
            item.add_marker(pytest.mark.slow)


@pytest.fixture(scope="session")
def n10_sweep():
    """N=10, Lambda 0 -> 50, full t_f grid, all schemes, with robustness."""
    from bjj_control.sweep import SweepPlan

    return _timed_sweep(SweepPlan((10,), TF_GRID, FIG_SCHEMES, robustness=True))


@pytest.fixture(scope="session")
def n100_sweep():
    """N=100 fidelities over the t_f grid (no robustness)."""
    from bjj_control.sweep import SweepPlan

    return _timed_sweep(SweepPlan((100,), TF_GRID, FIG_SCHEMES, robustness=False))


@pytest.fixture(scope="session")
def n100_robust():
    """N=100, t_f = 0.05 t_R, every scheme with robustness."""
    from bjj_control.sweep import SweepPlan

    return _timed_sweep(SweepPlan((100,), (0.05,), FIG_SCHEMES, robustness=True))


# ---- harmonic-model grid oracle ----------------------------------------------

def harmonic_transfer(c, control):
    """Fidelity of grid-propagated chi_0(0) with chi_0(tau_f) under H0 and ``control``."""
    sc = build_scaling(c)
    p = LRBasisParams.from_config(c)
    h = c.h
    # periodic FFT box, wide enough that every mode width fits comfortably
    half = 12 * p.z0
    npts = 1024
    z = np.linspace(-half, half, npts, endpoint=False)
    dz = z[1] - z[0]
    psi0 = chi_on(z, 0, 0.0, sc, p)
    out = evolve_harmonic_grid(psi0, control, c.tau_final, z, h, steps=20_000)
    target = chi_on(z, 0, c.tau_final, sc, p)
    return abs(np.sum(np.conj(target) * out) * dz) ** 2


def chi_on(z, n, tau, sc, p):
    """LR mode via numpy's Hermite series, independent of the library's chi."""
    b = float(sc(tau))
    db = float(sc.derivative(tau, 1))
    x = z / (p.z0 * b)
    norm = (math.pi * p.z0 ** 2) ** -0.25 / math.sqrt(2.0 ** n * math.factorial(n) * b)
    return norm * np.exp(-0.5 * x ** 2 + 1j * db * z ** 2 / (4 * p.h * b)) * np.polynomial.hermite.hermval(x, [0] * n + [1])
