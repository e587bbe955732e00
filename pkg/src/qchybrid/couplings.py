"""Coupling tensors ``W[alpha, beta, z, y]`` that parametrize hybrid dynamics.

Greek indices run over the full operator basis ``0..d**2-1``; pointer indices
``z, y`` are stored 0-based but reported 1-based. A tensor is either constant
or backed by a provider ``t -> ndarray`` that must be pure and thread-safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .linalg import (
    DimensionError,
    NotHermitianError,
    OperatorBasis,
    SpectralDecomposition,
    as_matrix,
    hermitian_eigendecomposition,
    hermitian_residual,
    is_hermitian,
)

POSITIVITY_TOL = 1e-9
V_TOL = 1e-12


class PositivityError(ValueError):
    pass


class CouplingTensor:
    """Coupling tensor of shape ``(d**2, d**2, |Z|, |Z|)``, constant or time dependent."""

    def __init__(self, dim: int, classical_size: int, entries=None, provider: Callable | None = None):
        if (entries is None) == (provider is None):
            raise ValueError("give exactly one of entries or provider")
        self.dim = int(dim)
        self.classical_size = int(classical_size)
        self.shape = (self.dim**2, self.dim**2, self.classical_size, self.classical_size)
        self._provider = provider
        self._entries = None
        if entries is not None:
            self._entries = self._checked(entries)

    def _checked(self, w) -> np.ndarray:
        w = np.array(w, dtype=complex)
        if w.shape != self.shape:
            raise DimensionError(f"coupling entries have shape {w.shape}, expected {self.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("coupling entries are not finite")
        w.setflags(write=False)
        return w

    @classmethod
    def zeros(cls, dim: int, classical_size: int) -> "CouplingTensor":
        return cls(dim, classical_size, np.zeros((dim**2, dim**2, classical_size, classical_size)))

    @classmethod
    def time_dependent(cls, dim: int, classical_size: int, provider: Callable) -> "CouplingTensor":
        return cls(dim, classical_size, provider=provider)

    @property
    def is_constant(self) -> bool:
        return self._entries is not None

    def at(self, t: float = 0.0) -> np.ndarray:
        if self._entries is not None:
            return self._entries
        return self._checked(self._provider(t))

    def __add__(self, other: "CouplingTensor") -> "CouplingTensor":
        return add(self, other)

    def __repr__(self):
        kind = "constant" if self.is_constant else "time-dependent"
        return f"CouplingTensor(d={self.dim}, |Z|={self.classical_size}, {kind})"


def add(w1: CouplingTensor, w2: CouplingTensor) -> CouplingTensor:
    """Entrywise sum; constant if both summands are."""
    if w1.shape != w2.shape:
        raise DimensionError(f"cannot add couplings of shapes {w1.shape} and {w2.shape}")
    if w1.is_constant and w2.is_constant:
        return CouplingTensor(w1.dim, w1.classical_size, w1.at() + w2.at())
    return CouplingTensor.time_dependent(w1.dim, w1.classical_size, lambda t: w1.at(t) + w2.at(t))


def unitary_coupling(h, basis: OperatorBasis, classical_size: int) -> CouplingTensor:
    """Coupling generating ``d rho(z)/dt = -i [H, rho(z)]`` on every block.

    Only ``W[a, 0, z, z] = -i sqrt(d) <L_a, H>`` and its conjugate ``W[0, a, z, z]``
    are nonzero.
    """
    h = as_matrix(h, "H")
    if h.shape[0] != basis.dim:
        raise DimensionError(f"H has dimension {h.shape[0]}, basis {basis.dim}")
    if not is_hermitian(h):
        raise NotHermitianError(f"Hamiltonian is not Hermitian (residual {hermitian_residual(h):.3g})")
    d = basis.dim
    coeff = np.einsum("aij,ij->a", basis.operators.conj(), h)
    w = np.zeros((d * d, d * d, classical_size, classical_size), dtype=complex)
    for z in range(classical_size):
        w[1:, 0, z, z] = -1j * np.sqrt(d) * coeff[1:]
        w[0, 1:, z, z] = np.conj(w[1:, 0, z, z])
    return CouplingTensor(d, classical_size, w)


def lindblad_coupling(lam, classical_size: int, tol: float = POSITIVITY_TOL) -> CouplingTensor:
    """``W[a, b, z, y] = delta_zy lam[a-1, b-1]`` for ``a, b >= 1``; the 0-row/column vanish."""
    lam = as_matrix(lam, "lambda")
    n = lam.shape[0] + 1
    d = int(round(np.sqrt(n)))
    if d * d != n or d < 2:
        raise DimensionError(f"Lindblad matrix must be (d^2-1)x(d^2-1), got {lam.shape}")
    min_eig = _min_eig(lam)
    if hermitian_residual(lam) > tol or min_eig < -tol:
        raise PositivityError(f"Lindblad coefficient matrix is not PSD (min eigenvalue {min_eig:.3g})")
    w = np.zeros((n, n, classical_size, classical_size), dtype=complex)
    for z in range(classical_size):
        w[1:, 1:, z, z] = lam
    return CouplingTensor(d, classical_size, w)


def _projector_overlaps(spec: SpectralDecomposition, basis: OperatorBasis) -> np.ndarray:
    """``c[a, alpha] = <L_alpha, P_a>``."""
    return np.einsum("kij,aij->ak", basis.operators.conj(), spec.projectors)


@dataclass(frozen=True, eq=False)
class VFunction:
    """Rates ``V[a, z, y]`` (all indices stored 0-based, shape ``(d, |Z|, |Z|)``)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 3 or v.shape[1] != v.shape[2]:
            raise DimensionError(f"V must have shape (d, |Z|, |Z|), got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def simple(cls, d: int, gamma: float) -> "VFunction":
        """``V^a(z, y) = gamma delta_{az}``."""
        v = np.zeros((d, d, d))
        for a in range(d):
            v[a, a, :] = gamma
        return cls(v)

    def __call__(self, a: int, z: int, y: int) -> float:
        return float(self.values[a - 1, z - 1, y - 1])


def coupling_from_V(v: VFunction, spec: SpectralDecomposition, basis: OperatorBasis) -> CouplingTensor:
    """``W[alpha, beta, z, y] = sum_a V^a(z, y) <L_alpha, P_a> <P_a, L_beta>``."""
    d = basis.dim
    if spec.dim != d or v.values.shape != (d, d, d):
        raise DimensionError(
            f"V shape {v.values.shape}, spectrum size {spec.dim} and basis dimension {d} must agree with |Z| = d"
        )
    c = _projector_overlaps(spec, basis)
    w = np.einsum("azy,ak,al->klzy", v.values, c, c.conj())
    return CouplingTensor(d, d, w)


def simple_projective_coupling(m, gamma: float, basis: OperatorBasis) -> CouplingTensor:
    """Measurement coupling ``W[alpha, beta, z, y] = gamma <L_alpha, P_z><P_z, L_beta>``.

    ``m`` may be a Hermitian operator or a precomputed :class:`SpectralDecomposition`.
    """
    if not gamma > 0:
        raise ValueError(f"measurement rate must be positive, got {gamma}")
    spec = m if isinstance(m, SpectralDecomposition) else hermitian_eigendecomposition(m)
    d = basis.dim
    if spec.dim != d:
        raise DimensionError(f"measurement operator dimension {spec.dim} vs basis {d}")
    c = _projector_overlaps(spec, basis)
    block = gamma * np.einsum("zk,zl->klz", c, c.conj())
    w = np.repeat(block[..., None], d, axis=3)
    return CouplingTensor(d, d, w)


@dataclass(frozen=True)
class BlockCheck:
    condition: str  # "P1" (z != y, full matrix) or "P2" (z == y, traceless sector)
    z: int
    y: int
    min_eigenvalue: float
    ok: bool


@dataclass(frozen=True)
class PositivityReport:
    t: float
    blocks: tuple
    ok: bool

    def __bool__(self):
        return self.ok

    @property
    def min_eigenvalue(self) -> float:
        return min(b.min_eigenvalue for b in self.blocks)

    def failures(self) -> list:
        return [b for b in self.blocks if not b.ok]


def _min_eig(a: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (a + a.conj().T))[0])


def validate_positivity(w: CouplingTensor, t: float = 0.0, tol: float = POSITIVITY_TOL) -> PositivityReport:
    """Check both positivity conditions at time ``t``.

    A block that is not Hermitian within ``tol`` is reported with
    ``min_eigenvalue = -inf``.
    """
    entries = w.at(t)
    checks = []
    for z in range(w.classical_size):
        for y in range(w.classical_size):
            if z == y:
                condition, mat = "P2", entries[1:, 1:, z, z]
            else:
                condition, mat = "P1", entries[:, :, z, y]
            if hermitian_residual(mat) > tol:
                e = -np.inf
            else:
                e = _min_eig(mat)
            checks.append(BlockCheck(condition, z + 1, y + 1, e, e >= -tol))
    return PositivityReport(t, tuple(checks), all(c.ok for c in checks))


@dataclass(frozen=True)
class VReport:
    ok: bool
    violations: tuple = field(default=())

    def __bool__(self):
        return self.ok


def validate_V(v: VFunction, tol: float = V_TOL) -> VReport:
    """Check the projective-measurement conditions on ``V``.

    For every outcome ``m`` (1-based):

    * ``V^m(z, m) = 0`` for ``z != m``;
    * ``V^m(z, i) = 0`` for ``z not in {m, i}``, ``i != m``;
    * ``V^m(m, i) > tol`` for ``i != m``.

    Diagonal entries ``V^m(z, z)`` are unconstrained here.
    """
    vals = v.values
    d, n, _ = vals.shape
    violations = []
    if n != d:
        return VReport(False, (f"|Z| = {n} must equal d = {d}",))
    for m in range(d):
        for z in range(d):
            if z != m and abs(vals[m, z, m]) > tol:
                violations.append(f"V^{m+1}({z+1},{m+1}) = {vals[m, z, m]:g} must vanish")
        for i in range(d):
            if i == m:
                continue
            for z in range(d):
                if z not in (m, i) and abs(vals[m, z, i]) > tol:
                    violations.append(f"V^{m+1}({z+1},{i+1}) = {vals[m, z, i]:g} must vanish")
            if not vals[m, m, i] > tol:
                violations.append(f"V^{m+1}({m+1},{i+1}) = {vals[m, m, i]:g} must be positive")
    return VReport(not violations, tuple(violations))
