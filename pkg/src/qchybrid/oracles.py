"""Closed-form solutions used as ground truth for the integrator.

Nothing here touches the generic right-hand side: the projective solution is
the explicit exponential relaxation toward ``P_z rho_hat(0) P_z`` and the
unitary solution conjugates each block with ``exp(-iHt)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import NotHermitianError, SpectralDecomposition, as_matrix, hermitian_eigendecomposition, is_hermitian
from .state import HybridState, require_valid


def _check_time(t):
    if t < 0:
        raise ValueError(f"closed forms are only valid for t >= 0, got {t}")


@dataclass(frozen=True, eq=False)
class ExactProjectiveSolution:
    gamma: float
    spec: SpectralDecomposition
    rho0: HybridState
    dephased: np.ndarray  # P_z rho_hat(0) P_z, shape (d, d, d)

    @classmethod
    def build(cls, m, gamma: float, rho0: HybridState) -> "ExactProjectiveSolution":
        if not gamma > 0:
            raise ValueError("gamma must be positive")
        spec = m if isinstance(m, SpectralDecomposition) else hermitian_eigendecomposition(m)
        require_valid(rho0)
        if rho0.classical_size != spec.dim or rho0.dim != spec.dim:
            raise ValueError("projective solution needs |Z| = d matching the measurement operator")
        rho_hat = rho0.blocks.sum(axis=0)
        p = spec.projectors
        dephased = p @ rho_hat @ p
        dephased.setflags(write=False)
        return cls(float(gamma), spec, rho0, dephased)

    def decay(self, t) -> float:
        _check_time(t)
        return float(np.exp(-self.gamma * t))


def exact_projective_state(sol: ExactProjectiveSolution, z: int, t: float) -> np.ndarray:
    """``rho(z, t) = e^{-gamma t} rho(z, 0) + (1 - e^{-gamma t}) P_z rho_hat(0) P_z``."""
    e = sol.decay(t)
    return e * sol.rho0.block(z) + (1 - e) * sol.dephased[z - 1]


def exact_projective_blocks(sol: ExactProjectiveSolution, t: float) -> np.ndarray:
    e = sol.decay(t)
    return e * sol.rho0.blocks + (1 - e) * sol.dephased


def exact_projective_probability(sol: ExactProjectiveSolution, z: int, t: float) -> float:
    e = sol.decay(t)
    p0 = float(np.real(np.trace(sol.rho0.block(z))))
    born = float(np.real(np.trace(sol.dephased[z - 1])))
    return e * p0 + (1 - e) * born


def exact_projective_induced(sol: ExactProjectiveSolution, t: float) -> np.ndarray:
    """``rho_hat(t) = e^{-gamma t} rho_hat(0) + (1 - e^{-gamma t}) sum_z P_z rho_hat(0) P_z``."""
    e = sol.decay(t)
    return e * sol.rho0.blocks.sum(axis=0) + (1 - e) * sol.dephased.sum(axis=0)


def propagator(h, t: float) -> np.ndarray:
    """``exp(-iHt)`` from the eigendecomposition of ``H``."""
    h = as_matrix(h, "H")
    if not is_hermitian(h):
        raise NotHermitianError("Hamiltonian must be Hermitian")
    vals, vecs = np.linalg.eigh(0.5 * (h + h.conj().T))
    return (vecs * np.exp(-1j * vals * t)) @ vecs.conj().T


def exact_unitary_state(h, rho0: HybridState, z: int, t: float) -> np.ndarray:
    u = propagator(h, t)
    return u @ rho0.block(z) @ u.conj().T


def exact_unitary_blocks(h, rho0: HybridState, t: float) -> np.ndarray:
    u = propagator(h, t)
    return u @ rho0.blocks @ u.conj().T
