import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from bjj_control import JunctionConfig, ScheduleError
from bjj_control.esta import selection_rule_residual
from conftest import harmonic_transfer
from bjj_control.sta import (
    LRBasisParams, ScalingFunction, ZGrid, build_scaling, chi, gamma, lambda_adiabatic,
    lambda_sta, make_grid, omega,
)

TF_GRID = (0.02, 0.05, 0.1, 0.2)


def cfg(n=100, li=0.0, lf=50.0, tf=0.1):
    return JunctionConfig.from_rabi_units(n, li, lf, tf)


@pytest.mark.parametrize("li,lf,expected", [(0, 0, 1.0), (0, 50, 51 ** -0.25), (50, 0, 51 ** 0.25)])
def test_gamma_values(li, lf, expected):
    assert gamma(li, lf) == pytest.approx(expected, rel=1e-14)
    assert gamma(li, lf) == pytest.approx(round(expected, 3), abs=1e-3)


@given(st.floats(0, 500), st.floats(0, 500))
def test_gamma_reciprocal(a, b):
    assert gamma(a, b) * gamma(b, a) == pytest.approx(1.0, rel=1e-12)


def test_gamma_rejects_unstable_frequency():
    with pytest.raises(ScheduleError):
        gamma(-1.0, 3.0)


def test_quintic_matches_symbolic_solution():
    s, g = sp.symbols("s gamma")
    c = sp.symbols("c0:6")
    b = sum(ci * s ** i for i, ci in enumerate(c))
    eqs = [b.subs(s, 0) - 1, sp.diff(b, s).subs(s, 0), sp.diff(b, s, 2).subs(s, 0),
           b.subs(s, 1) - g, sp.diff(b, s).subs(s, 1), sp.diff(b, s, 2).subs(s, 1)]
    sol = sp.solve(eqs, c)
    gval = 0.37418
    expected = [float(sol[ci].subs(g, gval)) for ci in c]
    np.testing.assert_allclose(ScalingFunction(gval, 1.0).coefficients, expected, atol=1e-14)


def test_scaling_boundary_conditions_and_midpoint():
    sc = ScalingFunction(0.37418, 2.5)
    assert sc(0.0) == pytest.approx(1.0, abs=1e-12)
    assert sc(2.5) == pytest.approx(0.37418, abs=1e-12)
    for order in (1, 2):
        assert abs(sc.derivative(0.0, order)) <= 1e-12
        assert abs(sc.derivative(2.5, order)) <= 1e-12
    assert sc(1.25) == pytest.approx((1 + 0.37418) / 2, abs=1e-12)
    flat = ScalingFunction(1.0, 2.5)
    np.testing.assert_array_equal(flat(np.linspace(0, 2.5, 7)), 1.0)


def test_sta_constant_when_no_change():
    c = cfg(li=7.0, lf=7.0)
    tau = np.linspace(0, c.tau_final, 11)
    np.testing.assert_allclose(lambda_sta(tau, build_scaling(c), c), 7.0, atol=1e-12)


def test_sta_endpoints():
    c = cfg()
    sc = build_scaling(c)
    assert lambda_sta(0.0, sc, c) == pytest.approx(0.0, abs=1e-10)
    assert lambda_sta(c.tau_final, sc, c) == pytest.approx(50.0, abs=1e-10)


@pytest.mark.parametrize("tf", TF_GRID)
def test_sta_solves_ermakov(tf):
    c = cfg(tf=tf)
    sc = build_scaling(c)
    tau = np.linspace(0, c.tau_final, 101)
    b = sc(tau)
    w0 = float(omega(0.0))
    # omega^2 = 4 (1 + Lambda) may go negative mid-protocol for fast schedules
    omega_sq = 4.0 * (1.0 + lambda_sta(tau, sc, c))
    residual = sc.derivative(tau, 2) - w0 ** 2 / b ** 3 + omega_sq * b
    assert np.max(np.abs(residual)) <= 1e-9 * w0 ** 2


def test_adiabatic_ramp():
    c = cfg(lf=50.0)
    tf = c.tau_final
    assert lambda_adiabatic(0.0, c) == 0.0
    assert lambda_adiabatic(tf, c) == pytest.approx(50.0)
    assert lambda_adiabatic(tf / 2, c) == pytest.approx(25.0)
    vals = lambda_adiabatic(np.linspace(0, tf, 201), c)
    assert np.all(np.diff(vals) >= 0)


@pytest.mark.parametrize("tf", TF_GRID)
def test_sta_is_exact_for_harmonic_model(tf):
    c = cfg(tf=tf)
    sc = build_scaling(c)
    assert harmonic_transfer(c, lambda t: lambda_sta(t, sc, c)) >= 1 - 1e-6


def test_literal_b4_formula_is_not_a_shortcut():
    # Lambda(0)/b^4 in place of (1 + Lambda(0))/b^4 misses the target badly
    c = cfg(tf=0.1)
    sc = build_scaling(c)

    def typo(t):
        b = sc(t)
        return -1.0 + c.lambda_initial / b ** 4 - sc.derivative(t, 2) / (4 * b)

    assert harmonic_transfer(c, typo) < 0.9


def test_chi_ground_mode_at_start():
    c = cfg()
    p = LRBasisParams.from_config(c)
    g = make_grid(c)
    c0 = chi(0, 0.0, g, build_scaling(c), p)
    np.testing.assert_allclose(c0.imag, 0.0, atol=1e-15)
    expected = (math.pi * p.z0 ** 2) ** -0.25 * np.exp(-g.z ** 2 / (2 * p.z0 ** 2))
    np.testing.assert_allclose(c0.real, expected, atol=1e-14)
    assert g.inner(c0, c0).real == pytest.approx(1.0, abs=1e-12)


def test_chi_quadrupole_matrix_element_at_start():
    c = cfg()
    p = LRBasisParams.from_config(c)
    g = make_grid(c)
    sc = build_scaling(c)
    c0, c2 = chi(0, 0.0, g, sc, p), chi(2, 0.0, g, sc, p)
    assert g.inner(c2, g.z ** 2 * c0) == pytest.approx(p.z0 ** 2 / math.sqrt(2), rel=1e-10)


@pytest.mark.parametrize("n_particles,extent", [(100, None), (10, 4.0)])
@pytest.mark.parametrize("tf", [0.02, 0.2])
def test_chi_orthonormal_along_trajectory(n_particles, extent, tf):
    c = cfg(n=n_particles, tf=tf)
    p = LRBasisParams.from_config(c)
    g = make_grid(c, extent=extent)
    sc = build_scaling(c)
    for tau in np.linspace(0, c.tau_final, 5):
        modes = [chi(n, tau, g, sc, p) for n in range(5)]
        gram = np.array([[g.inner(a, b) for b in modes] for a in modes])
        np.testing.assert_allclose(gram, np.eye(5), atol=1e-8)


def test_chi_second_derivative_matches_finite_difference():
    c = cfg()
    p = LRBasisParams.from_config(c)
    g = make_grid(c, points_per_width=256)
    sc = build_scaling(c)
    tau = 0.3 * c.tau_final
    for n in range(4):
        f = chi(n, tau, g, sc, p)
        d2 = chi(n, tau, g, sc, p, derivative=2)
        fd = (f[2:] - 2 * f[1:-1] + f[:-2]) / g.dz ** 2
        assert np.max(np.abs(fd - d2[1:-1])) <= 1e-5 * np.max(np.abs(d2))


@pytest.mark.parametrize("tf", [0.05, 0.2])
def test_chi0_solves_harmonic_tdse(tf):
    c = cfg(tf=tf)
    p = LRBasisParams.from_config(c)
    g = make_grid(c)
    sc = build_scaling(c)
    h = c.h
    dt = 1e-4 * c.tau_final
    for tau in np.linspace(0.1, 0.9, 5) * c.tau_final:
        dpsi = (chi(0, tau + dt, g, sc, p) - chi(0, tau - dt, g, sc, p)) / (2 * dt)
        psi = chi(0, tau, g, sc, p)
        lam = float(lambda_sta(tau, sc, c))
        h0psi = -h ** 2 * chi(0, tau, g, sc, p, derivative=2) + (lam + 1) * g.z ** 2 * psi
        residual = np.linalg.norm(1j * h * dpsi - h0psi)
        assert residual <= 1e-6 * np.linalg.norm(h0psi)


def test_chi_rejects_coarse_grid():
    from bjj_control import GridError
    c = cfg()
    with pytest.raises(GridError):
        chi(0, 0.0, ZGrid(c.h, 1, 50), build_scaling(c), LRBasisParams.from_config(c))


@pytest.mark.parametrize("n_particles", [10, 100])
def test_parity_selection_rule(n_particles):
    assert selection_rule_residual(cfg(n=n_particles)) <= 1e-10
