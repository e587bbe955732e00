"""Hybrid states: maps from pointer values ``z`` to PSD blocks with unit total trace."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    PAULI,
    SIGMA_0,
    DimensionError,
    SpectralDecomposition,
    dagger,
    hermitian_residual,
)

STATE_TOL = 1e-9
COLLAPSE_TOL = 1e-12


class InvalidStateError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class HybridState:
    """Blocks ``rho(1), ..., rho(|Z|)`` stored as an array of shape ``(|Z|, d, d)``.

    Pointer values are 1-based in the public API (``block(1)`` is ``rho(1)``).
    Construction only checks shape and finiteness; use :func:`validate` for the
    positivity and normalization invariants.
    """

    blocks: np.ndarray

    def __post_init__(self):
        b = np.array(self.blocks, dtype=complex)
        if b.ndim == 2:
            b = b[None]
        if b.ndim != 3 or b.shape[1] != b.shape[2] or b.shape[0] < 1 or b.shape[1] < 1:
            raise DimensionError(f"blocks must have shape (|Z|, d, d), got {b.shape}")
        if not np.all(np.isfinite(b)):
            raise ValueError("blocks contain non-finite entries")
        b.setflags(write=False)
        object.__setattr__(self, "blocks", b)

    @property
    def dim(self) -> int:
        return self.blocks.shape[1]

    @property
    def classical_size(self) -> int:
        return self.blocks.shape[0]

    def block(self, z: int) -> np.ndarray:
        _check_pointer(z, self.classical_size)
        return self.blocks[z - 1]

    @classmethod
    def from_induced(cls, rho_hat, probabilities) -> "HybridState":
        """Product-form state ``rho(z) = p(z) * rho_hat``."""
        rho_hat = np.asarray(rho_hat, dtype=complex)
        p = np.asarray(probabilities, dtype=float)
        return cls(p[:, None, None] * rho_hat[None])

    def to_dict(self) -> dict:
        return {
            "dimension": self.dim,
            "classical_size": self.classical_size,
            "blocks": [matrix_to_pairs(b) for b in self.blocks],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HybridState":
        blocks = np.array([matrix_from_pairs(b) for b in data["blocks"]])
        state = cls(blocks)
        for key, actual in (("dimension", state.dim), ("classical_size", state.classical_size)):
            if key in data and int(data[key]) != actual:
                raise DimensionError(f"{key} is {data[key]} but blocks imply {actual}")
        return state


def _check_pointer(z, size):
    if not 1 <= z <= size:
        raise IndexError(f"pointer value {z} outside 1..{size}")


def matrix_to_pairs(m) -> list:
    """Row-major nested list of ``[re, im]`` pairs."""
    m = np.asarray(m, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


def matrix_from_pairs(data) -> np.ndarray:
    """Inverse of :func:`matrix_to_pairs`.

    Entries may be ``[re, im]`` pairs or plain reals; a flat list of ``n**2``
    entries is read row-major.
    """

    def entry(v):
        if isinstance(v, (int, float)):
            return complex(v)
        if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
            return complex(v[0], v[1])
        raise ValueError(f"matrix entry must be a number or an [re, im] pair, got {v!r}")

    if not isinstance(data, (list, tuple)) or len(data) == 0:
        raise ValueError("matrix must be a non-empty list")
    n = len(data)
    if all(isinstance(r, (list, tuple)) and len(r) == n for r in data):
        rows = [[entry(v) for v in r] for r in data]
    else:
        flat = [entry(v) for v in data]
        k = int(round(np.sqrt(len(flat))))
        if k * k != len(flat):
            raise ValueError(f"flat matrix has {len(flat)} entries, not a square number")
        rows = [flat[i * k:(i + 1) * k] for i in range(k)]
    if any(len(r) != len(rows) for r in rows):
        raise ValueError("matrix must be square")
    return np.array(rows, dtype=complex)


@dataclass(frozen=True)
class StateReport:
    ok: bool
    min_eigenvalues: tuple
    block_traces: tuple
    trace_sum: float
    trace_residual: float
    hermitian_residual: float
    problems: tuple = field(default=())

    def __bool__(self):
        return self.ok


def block_min_eigenvalues(blocks: np.ndarray) -> np.ndarray:
    herm = 0.5 * (blocks + dagger(blocks))
    return np.linalg.eigvalsh(herm)[..., 0]


def validate(state: HybridState, tol: float = STATE_TOL) -> StateReport:
    """Check Hermiticity, block positivity and unit total trace within ``tol``."""
    blocks = state.blocks
    herm = max(hermitian_residual(b) for b in blocks)
    mins = block_min_eigenvalues(blocks)
    traces = np.real(np.trace(blocks, axis1=1, axis2=2))
    total = float(np.sum(traces))
    problems = []
    if herm > tol:
        problems.append(f"blocks not Hermitian (residual {herm:.3g})")
    for z, e in enumerate(mins, start=1):
        if e < -tol:
            problems.append(f"block z={z} has negative eigenvalue {e:.6g}")
    if abs(total - 1) > tol:
        listing = ", ".join(f"z={z}: {t:.6g}" for z, t in enumerate(traces, start=1))
        problems.append(f"trace sum {total:.6g} != 1 (block traces {listing})")
    return StateReport(
        ok=not problems,
        min_eigenvalues=tuple(float(e) for e in mins),
        block_traces=tuple(float(t) for t in traces),
        trace_sum=total,
        trace_residual=abs(total - 1),
        hermitian_residual=herm,
        problems=tuple(problems),
    )


def require_valid(state: HybridState, tol: float = STATE_TOL) -> None:
    report = validate(state, tol)
    if not report.ok:
        raise InvalidStateError("; ".join(report.problems))


def induced_quantum_state(state: HybridState, tol: float = STATE_TOL) -> np.ndarray:
    """``rho_hat = sum_z rho(z)``."""
    require_valid(state, tol)
    return state.blocks.sum(axis=0)


def induced_probabilities(state: HybridState, tol: float = STATE_TOL) -> np.ndarray:
    """``p(z) = tr rho(z)`` as a real vector indexed ``z - 1``."""
    require_valid(state, tol)
    return np.real(np.trace(state.blocks, axis1=1, axis2=2))


def collapsed_state(state: HybridState, z: int, collapse_tol: float = COLLAPSE_TOL) -> np.ndarray:
    """``rho(z) / tr rho(z)``; undefined (raises) when ``p(z) <= collapse_tol``."""
    require_valid(state)
    block = state.block(z)
    p = float(np.real(np.trace(block)))
    if p <= collapse_tol:
        raise InvalidStateError(f"pointer value z={z} has probability {p:.3g}; collapsed state undefined")
    return block / p


def collapsed_states(state: HybridState, collapse_tol: float = COLLAPSE_TOL) -> dict:
    """Collapsed states for every pointer value with ``p(z) > collapse_tol``."""
    p = induced_probabilities(state)
    return {z: state.blocks[z - 1] / p[z - 1] for z in range(1, state.classical_size + 1) if p[z - 1] > collapse_tol}


def projector_family_state(spec: SpectralDecomposition, i: int, m: int) -> HybridState:
    """``rho(z) = delta_{iz} P_m``: input eigenstate ``m`` with the pointer at ``i``."""
    d = spec.dim
    _check_pointer(i, d)
    _check_pointer(m, d)
    blocks = np.zeros((d, d, d), dtype=complex)
    blocks[i - 1] = spec.projectors[m - 1]
    return HybridState(blocks)


def bloch_vector(rho_hat) -> np.ndarray:
    """Bloch vector for ``rho_hat = sigma_0/2 + sum_m r_m sigma_m``, i.e. ``r_m = tr(sigma_m rho_hat)/2``."""
    rho_hat = np.asarray(rho_hat, dtype=complex)
    if rho_hat.shape[-2:] != (2, 2):
        raise DimensionError(f"Bloch vector needs a qubit operator, got shape {rho_hat.shape}")
    return 0.5 * np.real(np.einsum("mij,...ji->...m", PAULI, rho_hat))


def purity(rho_hat) -> float:
    rho_hat = np.asarray(rho_hat, dtype=complex)
    return float(np.real(np.einsum("ij,ji->", rho_hat, rho_hat)))


def density_from_bloch(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise DimensionError("Bloch vector must have 3 components")
    return 0.5 * SIGMA_0 + np.einsum("m,mij->ij", r, PAULI)
