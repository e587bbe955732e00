"""Right-hand side of the hybrid master equation and a fixed-step RK4 integrator."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .couplings import CouplingTensor
from .linalg import DimensionError, OperatorBasis, lindblad_basis
from .state import HybridState, block_min_eigenvalues, bloch_vector, validate

logger = logging.getLogger(__name__)

TRACE_HARD_LIMIT = 1e-6
TRACE_SOFT_LIMIT = 1e-8
NEGATIVITY_SOFT_LIMIT = 1e-8
DEFAULT_SAMPLES = 1000


class IntegrationError(RuntimeError):
    """Raised when a monitored invariant breaks beyond the hard limit."""


def poulin_rhs(w, state, basis: OperatorBasis, t: float = 0.0) -> np.ndarray:
    """Time derivative of every block, shape ``(|Z|, d, d)``.

    ``w`` is either a :class:`CouplingTensor` (sampled at ``t``) or its entry
    array. Evaluates::

        drho(z)/dt = sum_{alpha, beta, y} W[alpha, beta, z, y] L_alpha rho(y) L_beta^*
                     - 1/2 W[alpha, beta, y, z] {L_beta^* L_alpha, rho(z)}
    """
    entries = w.at(t) if isinstance(w, CouplingTensor) else np.asarray(w, dtype=complex)
    rho = state.blocks if isinstance(state, HybridState) else np.asarray(state, dtype=complex)
    n_ops = basis.dim**2
    if rho.ndim != 3 or rho.shape[1:] != (basis.dim, basis.dim):
        raise DimensionError(f"state blocks {rho.shape} do not match basis dimension {basis.dim}")
    if entries.shape != (n_ops, n_ops, rho.shape[0], rho.shape[0]):
        raise DimensionError(f"coupling shape {entries.shape} inconsistent with state {rho.shape}")
    ops_dag = basis.adjoints
    n_z = rho.shape[0]
    l_rho = np.matmul(basis.operators[None], rho[:, None])  # (y, a, d, d): L_a rho(y)
    # mix over a with W[a, b, z, y], then right-multiply by L_b^* and sum over (y, b)
    w_zy = entries.transpose(2, 3, 1, 0)  # (z, y, b, a)
    mixed = np.matmul(w_zy, l_rho.reshape(n_z, n_ops, -1)[None]).reshape(n_z, n_z, n_ops, basis.dim, basis.dim)
    gain = np.matmul(mixed, ops_dag).sum(axis=(1, 2))
    # sum_y W[a, b, y, z] L_b^* L_a
    column_sums = entries.sum(axis=2)  # (a, b, z)
    loss_op = np.tensordot(column_sums, basis.products, axes=([0, 1], [0, 1]))
    return gain - 0.5 * (loss_op @ rho + rho @ loss_op)


def generator_matrix(w: CouplingTensor, basis: OperatorBasis, t: float = 0.0) -> np.ndarray:
    """Matrix of the (complex-linear) right-hand side acting on flattened blocks."""
    shape = (w.classical_size, basis.dim, basis.dim)
    n = int(np.prod(shape))
    entries = w.at(t)
    cols = [poulin_rhs(entries, unit.reshape(shape), basis).ravel() for unit in np.eye(n, dtype=complex)]
    return np.array(cols).T


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled hybrid-state curve. Monitors are derived from ``blocks`` on access."""

    times: np.ndarray
    blocks: np.ndarray  # (n_samples, |Z|, d, d)
    flagged: bool = False
    diagnostics: tuple = field(default=())
    error_estimate: float | None = None

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    @property
    def dim(self) -> int:
        return self.blocks.shape[-1]

    @property
    def classical_size(self) -> int:
        return self.blocks.shape[1]

    def state(self, k: int) -> HybridState:
        return HybridState(self.blocks[k])

    @property
    def final_state(self) -> HybridState:
        return self.state(-1)

    @cached_property
    def probabilities(self) -> np.ndarray:
        return np.real(np.trace(self.blocks, axis1=2, axis2=3))

    @cached_property
    def induced_states(self) -> np.ndarray:
        return self.blocks.sum(axis=1)

    @cached_property
    def trace_residual(self) -> np.ndarray:
        return np.abs(self.probabilities.sum(axis=1) - 1)

    @cached_property
    def min_eigenvalue(self) -> np.ndarray:
        return block_min_eigenvalues(self.blocks).min(axis=1)

    @cached_property
    def bloch(self) -> np.ndarray:
        if self.dim != 2:
            raise DimensionError("Bloch vectors are only defined for qubits")
        return bloch_vector(self.induced_states)

    @cached_property
    def purity(self) -> np.ndarray:
        rho = self.induced_states
        return np.real(np.einsum("nij,nji->n", rho, rho))

    def columns(self, include_rho: bool = False) -> tuple[list, np.ndarray]:
        """Header and table used by :meth:`to_csv`."""
        header = ["t"] + [f"p_{z}" for z in range(1, self.classical_size + 1)] + ["trace_residual", "min_eig"]
        cols = [self.times, *self.probabilities.T, self.trace_residual, self.min_eigenvalue]
        if self.dim == 2:
            header += ["r1", "r2", "r3", "purity"]
            cols += [*self.bloch.T, self.purity]
        if include_rho:
            d = self.dim
            for i in range(d):
                for j in range(d):
                    header += [f"rho_{i+1}{j+1}_re", f"rho_{i+1}{j+1}_im"]
                    cols += [self.induced_states[:, i, j].real, self.induced_states[:, i, j].imag]
        return header, np.column_stack(cols)

    def to_csv(self, path, include_rho: bool = False) -> None:
        header, table = self.columns(include_rho)
        write_csv(path, header, table)


def write_csv(path, header, table) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in table:
            writer.writerow([repr(float(v)) for v in row])


def _rk4_step(f, t, x, h):
    k1 = f(t, x)
    k2 = f(t + h / 2, x + h / 2 * k1)
    k3 = f(t + h / 2, x + h / 2 * k2)
    k4 = f(t + h, x + h * k3)
    return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def step_grid(t_end: float, dt: float) -> tuple[int, float]:
    """Number of steps and the (possibly slightly shortened) step landing exactly on ``t_end``."""
    n = max(1, int(np.ceil(t_end / dt - 1e-9)))
    return n, t_end / n


def sample_steps(n_steps: int, stride: int | None) -> np.ndarray:
    if stride is None:
        stride = max(1, n_steps // DEFAULT_SAMPLES)
    if stride < 1:
        raise ValueError("output stride must be >= 1")
    idx = np.arange(0, n_steps + 1, stride)
    if idx[-1] != n_steps:
        idx = np.append(idx, n_steps)
    return idx


def integrate(
    w: CouplingTensor,
    rho0: HybridState,
    t_end: float,
    dt: float = 1e-3,
    method: str = "rk4",
    basis: OperatorBasis | None = None,
    stride: int | None = None,
    estimate_error: bool = False,
) -> Trajectory:
    """Integrate the hybrid master equation from ``t = 0`` to ``t_end``.

    Fixed-step classical RK4 (``method="rk4"``); the step is shortened by at most
    one part in ``t_end/dt`` so the grid ends on ``t_end``. Samples are stored
    every ``stride`` steps (default: about 1000 samples) plus the final step.
    ``estimate_error`` repeats the run at half the step and records the
    step-doubling estimate ``16/15 max|x_h - x_{h/2}|`` of the returned samples' error.

    Raises :class:`IntegrationError` if the trace drifts by more than 1e-6;
    smaller breaches of the final-state tolerances set ``flagged``.
    """
    if method != "rk4":
        raise ValueError(f"unknown integration method {method!r}")
    if not dt > 0 or not t_end > 0:
        raise ValueError("dt and t_end must be positive")
    report = validate(rho0)
    if not report.ok:
        raise ValueError("invalid initial state: " + "; ".join(report.problems))
    if (rho0.dim, rho0.classical_size) != (w.dim, w.classical_size):
        raise DimensionError(
            f"state (d={rho0.dim}, |Z|={rho0.classical_size}) vs coupling (d={w.dim}, |Z|={w.classical_size})"
        )
    basis = basis or lindblad_basis(w.dim)
    n_steps, h = step_grid(t_end, dt)
    keep = sample_steps(n_steps, stride)
    times, blocks = _run(w, rho0, basis, n_steps, h, keep)

    err = None
    if estimate_error:
        _, fine = _run(w, rho0, basis, 2 * n_steps, h / 2, 2 * keep)
        err = float(np.max(np.abs(blocks - fine))) * 16 / 15

    traj = Trajectory(times, blocks, error_estimate=err)
    diagnostics = []
    final_res = traj.trace_residual[-1]
    final_min = traj.min_eigenvalue[-1]
    if final_res > TRACE_SOFT_LIMIT:
        diagnostics.append(f"final trace residual {final_res:.3g} exceeds {TRACE_SOFT_LIMIT:g}")
    if final_min < -NEGATIVITY_SOFT_LIMIT:
        diagnostics.append(f"final minimum block eigenvalue {final_min:.3g} below {-NEGATIVITY_SOFT_LIMIT:g}")
    if diagnostics:
        for msg in diagnostics:
            logger.warning(msg)
        traj = Trajectory(times, blocks, True, tuple(diagnostics), err)
    return traj


def _run(w, rho0, basis, n_steps, h, keep):
    shape = rho0.blocks.shape
    if w.is_constant:
        gen = generator_matrix(w, basis)

        def f(t, x):
            return gen @ x

    else:
        cache = {}

        def f(t, x):
            entries = cache.get(t)
            if entries is None:
                if len(cache) > 4:
                    cache.clear()
                entries = cache[t] = w.at(t)
            return poulin_rhs(entries, x.reshape(shape), basis).ravel()

    x = rho0.blocks.ravel().copy()
    keep_set = set(int(k) for k in keep)
    out = [x.copy()]
    for k in range(1, n_steps + 1):
        x = _rk4_step(f, (k - 1) * h, x, h)
        if k in keep_set:
            if not np.all(np.isfinite(x)):
                raise IntegrationError(f"non-finite state at t = {k * h:g}")
            residual = abs(np.real(np.trace(x.reshape(shape), axis1=1, axis2=2)).sum() - 1)
            if residual > TRACE_HARD_LIMIT:
                raise IntegrationError(
                    f"trace residual {residual:.3g} at t = {k * h:g} exceeds hard limit {TRACE_HARD_LIMIT:g}"
                )
            out.append(x.copy())
    return keep * h, np.array(out).reshape((len(keep),) + shape)


@dataclass(frozen=True)
class FrozenReport:
    max_deviation: float
    per_pointer: tuple
    frozen: bool

    def __bool__(self):
        return self.frozen


def induced_rhs_checks(trajectory: Trajectory, tol: float = 1e-8) -> FrozenReport:
    """Check that the pointer distribution stays at its initial value."""
    p = trajectory.probabilities
    dev = np.max(np.abs(p - p[0]), axis=0)
    return FrozenReport(float(dev.max()), tuple(float(v) for v in dev), bool(dev.max() <= tol))
