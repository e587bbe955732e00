"""Dense operator algebra on a d-dimensional Hilbert space.

Hilbert-Schmidt inner product, the orthonormal generalized Gell-Mann operator
basis (with ``L_0 = id/sqrt(d)``), coefficient expansion and the spectral
decomposition of non-degenerate Hermitian operators.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_3 = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = np.stack([SIGMA_1, SIGMA_2, SIGMA_3])

HERMITIAN_TOL = 1e-10
DEGENERACY_TOL = 1e-9


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class NotHermitianError(ValueError):
    pass


class DegenerateSpectrumError(ValueError):
    """Two eigenvalues coincide within the degeneracy tolerance."""


def as_matrix(a, name="matrix") -> np.ndarray:
    """Return ``a`` as a finite square complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimensionError(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def hermitian_residual(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - dagger(a)), initial=0.0))


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    return hermitian_residual(np.asarray(a, dtype=complex)) <= tol


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product ``tr(a^* b)``, conjugate-linear in ``a``."""
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


@dataclass(frozen=True, eq=False)
class OperatorBasis:
    """Orthonormal operator basis ``L_0, ..., L_{d^2-1}`` with ``L_0 = id/sqrt(d)``.

    ``operators`` has shape ``(d**2, d, d)``.
    """

    dim: int
    operators: np.ndarray

    def __post_init__(self):
        ops = np.array(self.operators, dtype=complex)
        d = self.dim
        if ops.shape != (d * d, d, d):
            raise DimensionError(f"expected basis shape {(d * d, d, d)}, got {ops.shape}")
        ops.setflags(write=False)
        object.__setattr__(self, "operators", ops)

    @classmethod
    def from_operators(cls, operators, tol: float = 1e-12) -> "OperatorBasis":
        """Wrap user-supplied operators after checking orthonormality and ``L_0``."""
        ops = np.asarray(operators, dtype=complex)
        if ops.ndim != 3:
            raise DimensionError("operators must be a stack of square matrices")
        d = ops.shape[-1]
        basis = cls(d, ops)
        gram_err = np.max(np.abs(basis.gram() - np.eye(d * d)))
        if gram_err > tol:
            raise ValueError(f"operators are not orthonormal (Gram residual {gram_err:.3g})")
        if np.max(np.abs(ops[0] - np.eye(d) / np.sqrt(d))) > tol:
            raise ValueError("first basis operator must be id/sqrt(d)")
        return basis

    def __len__(self):
        return self.dim * self.dim

    def __getitem__(self, i):
        return self.operators[i]

    @cached_property
    def adjoints(self) -> np.ndarray:
        return dagger(self.operators)

    @cached_property
    def products(self) -> np.ndarray:
        """``products[a, b] = L_b^* L_a``."""
        return np.matmul(self.adjoints[None, :], self.operators[:, None])

    def gram(self) -> np.ndarray:
        ops = self.operators
        return np.einsum("aij,bij->ab", ops.conj(), ops)

    def conjugated(self, unitary) -> "OperatorBasis":
        """Basis ``U L_a U^*``; still orthonormal with the same ``L_0``."""
        u = as_matrix(unitary, "unitary")
        return OperatorBasis(self.dim, u @ self.operators @ dagger(u))


def lindblad_basis(d: int) -> OperatorBasis:
    """Generalized Gell-Mann basis normalized to ``<L_a, L_b> = delta_ab``.

    Order: ``id/sqrt(d)``, symmetric ``(j, k)`` pairs (lexicographic, ``j < k``),
    antisymmetric pairs in the same order, then the ``d - 1`` diagonal operators.
    For ``d = 2`` this is ``(id, sigma_1, sigma_2, sigma_3) / sqrt(2)``.
    """
    if int(d) != d or d < 2:
        raise ValueError(f"basis dimension must be an integer >= 2, got {d!r}")
    d = int(d)
    ops = [np.eye(d, dtype=complex) / np.sqrt(d)]
    pairs = [(j, k) for j in range(d) for k in range(j + 1, d)]
    for j, k in pairs:
        m = np.zeros((d, d), dtype=complex)
        m[j, k] = m[k, j] = 1 / np.sqrt(2)
        ops.append(m)
    for j, k in pairs:
        m = np.zeros((d, d), dtype=complex)
        m[j, k] = -1j / np.sqrt(2)
        m[k, j] = 1j / np.sqrt(2)
        ops.append(m)
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        ops.append(np.diag(diag / np.sqrt(l * (l + 1))).astype(complex))
    return OperatorBasis(d, np.array(ops))


def expand(a, basis: OperatorBasis) -> np.ndarray:
    """Coefficients ``c_alpha = <L_alpha, A>`` so that ``A = sum_alpha c_alpha L_alpha``."""
    a = as_matrix(a, "A")
    if a.shape[0] != basis.dim:
        raise DimensionError(f"matrix of dimension {a.shape[0]} vs basis of dimension {basis.dim}")
    return np.einsum("aij,ij->a", basis.operators.conj(), a)


def reconstruct(coefficients, basis: OperatorBasis) -> np.ndarray:
    c = np.asarray(coefficients, dtype=complex)
    if c.shape != (len(basis),):
        raise DimensionError(f"expected {len(basis)} coefficients, got shape {c.shape}")
    return np.einsum("a,aij->ij", c, basis.operators)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenvalues in strictly decreasing order and the matching rank-one projectors."""

    eigenvalues: np.ndarray
    projectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def operator(self) -> np.ndarray:
        return np.einsum("z,zij->ij", self.eigenvalues, self.projectors)


def hermitian_eigendecomposition(m, degeneracy_tol: float = DEGENERACY_TOL) -> SpectralDecomposition:
    """Spectral decomposition ``M = sum_z m_z P_z`` with ``m_1 > ... > m_d``.

    ``degeneracy_tol`` is relative to the spectral radius (absolute when the
    radius is below one). Degenerate spectra raise instead of being grouped.
    """
    m = as_matrix(m, "M")
    res = hermitian_residual(m)
    if res > HERMITIAN_TOL:
        raise NotHermitianError(f"operator is not Hermitian (residual {res:.3g})")
    m = 0.5 * (m + dagger(m))
    vals, vecs = np.linalg.eigh(m)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    if len(vals) > 1:
        gap = float(np.min(vals[:-1] - vals[1:]))
        scale = max(1.0, float(np.max(np.abs(vals))))
        if gap <= degeneracy_tol * scale:
            raise DegenerateSpectrumError(
                f"spectrum is degenerate: minimum eigenvalue gap {gap:.3g}"
            )
    projectors = np.einsum("iz,jz->zij", vecs, vecs.conj())
    vals = np.array(vals, dtype=float)
    vals.setflags(write=False)
    projectors.setflags(write=False)
    return SpectralDecomposition(vals, projectors)


def is_psd(a, tol: float = 1e-9) -> tuple[bool, float]:
    """Return ``(min_eig >= -tol, min_eig)`` for a Hermitian matrix."""
    a = as_matrix(a, "A")
    res = hermitian_residual(a)
    if res > tol:
        raise NotHermitianError(f"matrix is not Hermitian within {tol:g} (residual {res:.3g})")
    min_eig = float(np.linalg.eigvalsh(0.5 * (a + dagger(a)))[0])
    return min_eig >= -tol, min_eig
