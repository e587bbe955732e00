"""Qubit measurement by a rotating apparatus, in Bloch-vector form.

For ``M(t) = n(t) . sigma`` and the single-rate measurement coupling, the
induced state ``rho_hat = sigma_0/2 + r . sigma`` and the pointer distribution
obey::

    dr/dt   = -gamma (r - (n . r) n)
    dp_z/dt =  gamma (1/2 - (-1)**z (n . r) - p_z)

These are integrated directly here and cross-checked against the generic
tensor engine in :func:`crosscheck_generic`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .couplings import CouplingTensor, simple_projective_coupling
from .dynamics import _rk4_step, integrate, sample_steps, step_grid, write_csv
from .linalg import PAULI, lindblad_basis
from .state import HybridState, density_from_bloch

UNIT_TOL = 1e-9


def _check_unit(n):
    norm = float(np.linalg.norm(n))
    if abs(norm - 1) > UNIT_TOL:
        raise ValueError(f"apparatus direction must be a unit vector, |n| = {norm:.12g}")


@dataclass(frozen=True)
class RotatingApparatus:
    """Apparatus with orientation ``n(t)``; default rotation about the 3-axis at rate ``omega``."""

    omega: float
    gamma: float
    direction: Callable | None = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    def n(self, t: float) -> np.ndarray:
        if self.direction is not None:
            v = np.asarray(self.direction(t), dtype=float)
            _check_unit(v)
            return v
        wt = self.omega * t
        return np.array([np.cos(wt), np.sin(wt), 0.0])

    def measurement_operator(self, t: float) -> np.ndarray:
        """``M(t) = sum_m n^m(t) sigma_m``."""
        return np.einsum("m,mij->ij", self.n(t), PAULI)

    def coupling(self, basis=None) -> CouplingTensor:
        """Time-dependent measurement coupling built from ``M(t)`` at every requested time."""
        basis = basis or lindblad_basis(2)
        return CouplingTensor.time_dependent(
            2, 2, lambda t: simple_projective_coupling(self.measurement_operator(t), self.gamma, basis).at(t)
        )

    def rate_matrix(self, t: float) -> np.ndarray:
        """``A(t) = id - n n^T`` so that ``dr/dt = -gamma A(t) r``."""
        n = self.n(t)
        return np.eye(3) - np.outer(n, n)


def bloch_rhs(r, n, gamma: float) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    _check_unit(n)
    r = np.asarray(r, dtype=float)
    return -gamma * (r - np.dot(n, r) * n)


def probability_rhs(p, z: int, n_dot_r: float, gamma: float) -> float:
    """``dp_z/dt`` for ``z`` in ``{1, 2}``."""
    if z not in (1, 2):
        raise ValueError("qubit pointer value must be 1 or 2")
    return gamma * (0.5 - (-1) ** z * n_dot_r - p[z - 1])


@dataclass(frozen=True, eq=False)
class BlochTrajectory:
    times: np.ndarray
    r: np.ndarray  # (n, 3)
    p: np.ndarray  # (n, 2)

    @property
    def norm_r(self) -> np.ndarray:
        return np.linalg.norm(self.r, axis=1)

    @property
    def purity(self) -> np.ndarray:
        return 0.5 + 2 * self.norm_r**2

    def to_csv(self, path) -> None:
        header = ["t", "r1", "r2", "r3", "norm_r", "purity", "p1", "p2"]
        table = np.column_stack([self.times, self.r, self.norm_r, self.purity, self.p])
        write_csv(path, header, table)


def _check_initial(r0, p0):
    r0 = np.asarray(r0, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    if r0.shape != (3,) or np.linalg.norm(r0) > 0.5 + UNIT_TOL:
        raise ValueError("initial Bloch vector must be a 3-vector with |r| <= 1/2")
    if p0.shape != (2,) or np.any(p0 < -UNIT_TOL) or abs(p0.sum() - 1) > UNIT_TOL:
        raise ValueError("initial pointer distribution must be two probabilities summing to 1")
    return r0, p0


def simulate_noninertial(
    app: RotatingApparatus, r0, p0, t_end: float, dt: float = 1e-3, stride: int | None = None
) -> BlochTrajectory:
    """RK4 on the coupled ``(r, p)`` system, sampling ``n(t)`` at every RK stage."""
    r0, p0 = _check_initial(r0, p0)
    if t_end < 0 or not dt > 0:
        raise ValueError("need t_end >= 0 and dt > 0")
    x = np.concatenate([r0, p0])
    if t_end == 0:
        return BlochTrajectory(np.zeros(1), r0[None], p0[None])
    gamma = app.gamma

    def f(t, x):
        n = app.n(t)
        r = x[:3]
        nr = float(np.dot(n, r))
        dp = gamma * (0.5 + np.array([nr, -nr]) - x[3:])
        return np.concatenate([-gamma * (r - nr * n), dp])

    n_steps, h = step_grid(t_end, dt)
    keep = sample_steps(n_steps, stride)
    keep_set = set(int(k) for k in keep)
    out = [x]
    for k in range(1, n_steps + 1):
        x = _rk4_step(f, (k - 1) * h, x, h)
        if k in keep_set:
            out.append(x)
    out = np.array(out)
    return BlochTrajectory(keep * h, out[:, :3], out[:, 3:])


@dataclass(frozen=True)
class CrosscheckReport:
    max_r_deviation: float
    max_p_deviation: float

    @property
    def max_deviation(self) -> float:
        return max(self.max_r_deviation, self.max_p_deviation)


def noninertial_initial_state(r0, p0) -> HybridState:
    """Hybrid state with ``rho(z) = p0[z] rho_hat(r0)``."""
    return HybridState.from_induced(density_from_bloch(r0), p0)


def crosscheck_generic(
    app: RotatingApparatus, r0, p0, t_end: float, dt: float = 1e-3, stride: int | None = None
) -> CrosscheckReport:
    """Compare :func:`simulate_noninertial` with the generic tensor integrator on the same grid."""
    r0, p0 = _check_initial(r0, p0)
    special = simulate_noninertial(app, r0, p0, t_end, dt, stride)
    if t_end == 0:
        return CrosscheckReport(0.0, 0.0)
    basis = lindblad_basis(2)
    generic = integrate(app.coupling(basis), noninertial_initial_state(r0, p0), t_end, dt, basis=basis, stride=stride)
    return CrosscheckReport(
        float(np.max(np.abs(generic.bloch - special.r))),
        float(np.max(np.abs(generic.probabilities - special.p))),
    )
