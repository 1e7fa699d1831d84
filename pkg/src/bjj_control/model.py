"""Fock-basis model of an internal bosonic Josephson junction.

States are complex arrays ``c`` of length ``N + 1`` where ``c[k]`` is the
amplitude of the Ĵ_z eigenstate with ``m = k - N/2``.  Time is the
dimensionless ``tau`` (``t = 2 tau / Omega``), in which the generator reads

    i dc_m/dtau = -(beta_m c_{m+1} + beta_{m-1} c_{m-1}) + (2 Lambda / N) m^2 c_m
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConfigError, ConvergenceError


@dataclass(frozen=True)
class JunctionConfig:
    """Particle number, boundary interaction strengths and protocol duration."""

    n_particles: int
    lambda_initial: float
    lambda_final: float
    tau_final: float

    def __post_init__(self):
        n = self.n_particles
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
            raise ConfigError(f"n_particles must be an integer, got {n!r}")
        if n < 2 or n % 2:
            raise ConfigError(f"n_particles must be an even integer >= 2, got {n}")
        for name in ("lambda_initial", "lambda_final"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ConfigError(f"{name} must be finite and >= 0, got {value}")
        if not math.isfinite(self.tau_final) or self.tau_final <= 0:
            raise ConfigError(f"tau_final must be positive, got {self.tau_final}")

    @classmethod
    def from_rabi_units(cls, n_particles, lambda_initial, lambda_final, tf_over_tr):
        """Build a config from the final time expressed in Rabi times."""
        if not tf_over_tr > 0:
            raise ConfigError(f"tf_over_tr must be positive, got {tf_over_tr}")
        if isinstance(n_particles, float) and not n_particles.is_integer():
            raise ConfigError(f"n_particles must be an integer, got {n_particles}")
        return cls(int(n_particles), float(lambda_initial), float(lambda_final),
                   math.pi * float(tf_over_tr))

    @property
    def h(self) -> float:
        """Effective Planck constant 2/N."""
        return 2.0 / self.n_particles

    @property
    def tf_over_tr(self) -> float:
        return self.tau_final / math.pi

    @property
    def dim(self) -> int:
        return self.n_particles + 1


def tau_to_rabi(tau):
    """Convert dimensionless time to units of the Rabi time 2 pi / Omega."""
    return np.asarray(tau) / math.pi


def rabi_to_tau(t_over_tr):
    return np.asarray(t_over_tr) * math.pi


def m_values(n_particles: int) -> np.ndarray:
    half = n_particles // 2
    return np.arange(-half, half + 1, dtype=float)


def beta(n_particles: int, m: int) -> float:
    """Matrix element <m|J_-|m+1>; zero at the top of the ladder."""
    half = n_particles // 2
    if not -half <= m <= half:
        raise IndexError(f"m={m} outside [-{half}, {half}]")
    return math.sqrt((half + m + 1) * (half - m))


def beta_array(n_particles: int) -> np.ndarray:
    """beta_m for m = -N/2 .. N/2 - 1 (the nonzero off-diagonal entries)."""
    half = n_particles // 2
    m = np.arange(-half, half, dtype=float)
    return np.sqrt((half + m + 1) * (half - m))


@dataclass(frozen=True)
class TridiagonalOperator:
    """Real symmetric tridiagonal matrix in tau units."""

    diagonal: np.ndarray
    off_diagonal: np.ndarray

    def __post_init__(self):
        if len(self.off_diagonal) != len(self.diagonal) - 1:
            raise ValueError("off_diagonal must have one entry fewer than diagonal")

    @property
    def dim(self) -> int:
        return len(self.diagonal)

    def to_dense(self) -> np.ndarray:
        return (np.diag(self.diagonal) + np.diag(self.off_diagonal, 1)
                + np.diag(self.off_diagonal, -1))

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return tridiag_matvec(self.diagonal, self.off_diagonal, x)


def tridiag_matvec(d, e, x):
    y = d * x
    y[:-1] += e * x[1:]
    y[1:] += e * x[:-1]
    return y


def interaction_diagonal(n_particles: int) -> np.ndarray:
    """Diagonal of dH/dLambda, i.e. 2 m^2 / N."""
    return 2.0 * m_values(n_particles) ** 2 / n_particles


def build_hamiltonian(config: JunctionConfig, lam: float) -> TridiagonalOperator:
    if not math.isfinite(lam):
        raise ConfigError(f"lambda must be finite, got {lam}")
    n = config.n_particles
    return TridiagonalOperator(lam * interaction_diagonal(n), -beta_array(n))


def ground_state(config: JunctionConfig, lam: float) -> np.ndarray:
    """Lowest eigenvector of the junction Hamiltonian at interaction ``lam``.

    The phase is fixed so every amplitude is real and the m = 0 amplitude is
    positive.  Off-diagonals are nonpositive, so the ground state has a
    single sign and this choice is unambiguous.
    """
    op = build_hamiltonian(config, lam)
    try:
        _, vecs = eigh_tridiagonal(op.diagonal, op.off_diagonal,
                                   select="i", select_range=(0, 0))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(
            f"ground-state eigensolve failed for N={config.n_particles}, "
            f"lambda={lam}: diagonal range [{op.diagonal.min():.3g}, "
            f"{op.diagonal.max():.3g}], max |offdiag|={np.abs(op.off_diagonal).max():.3g}"
        ) from exc
    vec = vecs[:, 0]
    mid = config.n_particles // 2
    if vec[mid] < 0:
        vec = -vec
    vec = vec / np.linalg.norm(vec)
    return vec.astype(complex)


def fock_state(n_particles: int, m: int) -> np.ndarray:
    half = n_particles // 2
    if not -half <= m <= half:
        raise IndexError(f"m={m} outside [-{half}, {half}]")
    c = np.zeros(n_particles + 1, dtype=complex)
    c[m + half] = 1.0
    return c


def _n_from_state(state) -> int:
    return len(state) - 1


def expect_jx(state: np.ndarray) -> float:
    c = np.asarray(state)
    b = beta_array(_n_from_state(c))
    return float(np.sum(b * np.real(np.conj(c[1:]) * c[:-1])))


def expect_jz(state: np.ndarray) -> float:
    c = np.asarray(state)
    return float(np.sum(m_values(_n_from_state(c)) * np.abs(c) ** 2))


def expect_jz2(state: np.ndarray) -> float:
    c = np.asarray(state)
    return float(np.sum(m_values(_n_from_state(c)) ** 2 * np.abs(c) ** 2))

