"""Scenario documents: JSON description of an initial state, coupling and run settings.

A scenario is parsed into a normalized plain-data dict (every default filled
in, sweep values resolved) and then built into engine objects per sweep member.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import couplings as cp
from .bloch import RotatingApparatus, noninertial_initial_state
from .linalg import NotHermitianError, DegenerateSpectrumError, DimensionError, lindblad_basis
from .state import HybridState, matrix_from_pairs, matrix_to_pairs, validate

COUPLING_KINDS = ("hamiltonian", "lindblad", "measurement", "rotating_measurement", "tensor", "sum")
PLOT_KINDS = ("probability", "equator", "purity")


class ScenarioParseError(ValueError):
    """Malformed document: bad JSON, wrong types, unknown or missing keys (exit 2)."""


class ScenarioValidationError(ValueError):
    """Well-formed document describing an invalid physical setup (exit 3)."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


def bundled_scenarios() -> list[str]:
    root = resources.files("qchybrid") / "scenarios"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".json"))


def resolve_path(name) -> Path:
    """Existing file path, or the name of a bundled scenario (with or without ``.json``)."""
    p = Path(name)
    if p.exists():
        return p
    fname = p.name if p.name.endswith(".json") else p.name + ".json"
    bundled = resources.files("qchybrid") / "scenarios" / fname
    if bundled.is_file():
        return Path(str(bundled))
    raise ScenarioParseError(f"scenario file not found: {name}")


def load(path) -> dict:
    """Read and normalize a scenario file."""
    try:
        text = resolve_path(path).read_text()
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"invalid JSON in {path}: {exc}") from exc
    return normalize(doc)


def _expect(cond, where, msg):
    if not cond:
        raise ScenarioParseError(f"{where}: {msg}")


def _number(v, where, positive=False):
    _expect(isinstance(v, (int, float)) and not isinstance(v, bool), where, f"expected a number, got {v!r}")
    if positive:
        _expect(v > 0, where, f"must be positive, got {v}")
    return float(v)


def _matrix(v, where):
    try:
        return matrix_to_pairs(matrix_from_pairs(v))
    except (ValueError, TypeError) as exc:
        raise ScenarioParseError(f"{where}: {exc}") from exc


def _no_extra(d, allowed, where):
    extra = set(d) - set(allowed)
    _expect(not extra, where, f"unknown keys {sorted(extra)}")


def _normalize_coupling(c, where):
    _expect(isinstance(c, dict) and len(c) == 1, where, "coupling must be an object with exactly one key")
    (kind, body), = c.items()
    _expect(kind in COUPLING_KINDS, where, f"unknown coupling kind {kind!r}; expected one of {COUPLING_KINDS}")
    w = f"{where}.{kind}"
    if kind in ("hamiltonian", "lindblad"):
        return {kind: _matrix(body, w)}
    if kind == "measurement":
        _expect(isinstance(body, dict), w, "expected an object with operator and gamma")
        _no_extra(body, ("operator", "gamma"), w)
        _expect("operator" in body and "gamma" in body, w, "needs operator and gamma")
        return {kind: {"operator": _matrix(body["operator"], w + ".operator"), "gamma": _number(body["gamma"], w + ".gamma")}}
    if kind == "rotating_measurement":
        _expect(isinstance(body, dict), w, "expected an object with omega and gamma")
        _no_extra(body, ("omega", "gamma"), w)
        _expect("gamma" in body, w, "needs gamma")
        return {kind: {"omega": _number(body.get("omega", 0.0), w + ".omega"), "gamma": _number(body["gamma"], w + ".gamma")}}
    if kind == "tensor":
        _expect(isinstance(body, list), w, "expected a list of nonzero entries")
        entries = []
        for k, e in enumerate(body):
            we = f"{w}[{k}]"
            _expect(isinstance(e, dict), we, "entry must be an object")
            _no_extra(e, ("alpha", "beta", "z", "y", "value"), we)
            _expect(all(key in e for key in ("alpha", "beta", "z", "y", "value")), we, "needs alpha, beta, z, y, value")
            for key in ("alpha", "beta", "z", "y"):
                _expect(isinstance(e[key], int) and not isinstance(e[key], bool), we, f"{key} must be an integer")
            value = e["value"]
            if isinstance(value, (list, tuple)):
                _expect(len(value) == 2, we, "value must be a number or [re, im]")
                value = [_number(value[0], we), _number(value[1], we)]
            else:
                value = [_number(value, we), 0.0]
            entries.append({"alpha": e["alpha"], "beta": e["beta"], "z": e["z"], "y": e["y"], "value": value})
        return {kind: entries}
    _expect(isinstance(body, list) and body, w, "sum needs a non-empty list of couplings")
    return {kind: [_normalize_coupling(sub, f"{w}[{k}]") for k, sub in enumerate(body)]}


def _walk(c):
    (kind, body), = c.items()
    if kind == "sum":
        for sub in body:
            yield from _walk(sub)
    else:
        yield kind, body


def _normalize_state(s, where):
    _expect(isinstance(s, dict), where, "initial_state must be an object")
    if "blocks" in s:
        _no_extra(s, ("blocks",), where)
        _expect(isinstance(s["blocks"], list) and s["blocks"], where, "blocks must be a non-empty list")
        return {"blocks": [_matrix(b, f"{where}.blocks[{k}]") for k, b in enumerate(s["blocks"])]}
    _expect("pure_bloch" in s, where, "needs either blocks or pure_bloch")
    _no_extra(s, ("pure_bloch", "pointer"), where)
    r = s["pure_bloch"]
    _expect(isinstance(r, list) and len(r) == 3, where + ".pure_bloch", "expected 3 numbers")
    pointer = s.get("pointer", [0.5, 0.5])
    _expect(isinstance(pointer, list) and len(pointer) == 2, where + ".pointer", "expected 2 numbers")
    return {
        "pure_bloch": [_number(x, where + ".pure_bloch") for x in r],
        "pointer": [_number(x, where + ".pointer") for x in pointer],
    }


def normalize(doc) -> dict:
    """Fill defaults and check structure; returns a plain-data dict."""
    _expect(isinstance(doc, dict), "scenario", "top level must be an object")
    _no_extra(doc, ("name", "dimension", "classical_size", "initial_state", "coupling", "integration", "sweep", "outputs"), "scenario")
    for key in ("dimension", "initial_state", "coupling"):
        _expect(key in doc, "scenario", f"missing required key {key!r}")
    d = doc["dimension"]
    _expect(isinstance(d, int) and not isinstance(d, bool) and d >= 2, "dimension", "must be an integer >= 2")
    n_z = doc.get("classical_size", d)
    _expect(isinstance(n_z, int) and not isinstance(n_z, bool) and n_z >= 1, "classical_size", "must be a positive integer")

    integ = doc.get("integration", {})
    _expect(isinstance(integ, dict), "integration", "must be an object")
    _no_extra(integ, ("t_end", "dt", "stride"), "integration")
    stride = integ.get("stride")
    if stride is not None:
        _expect(isinstance(stride, int) and stride >= 1, "integration.stride", "must be a positive integer")

    sweep = doc.get("sweep", {})
    _expect(isinstance(sweep, dict), "sweep", "must be an object")
    _no_extra(sweep, ("omega",), "sweep")
    omegas = sweep.get("omega")
    if omegas is not None:
        _expect(isinstance(omegas, list) and omegas, "sweep.omega", "must be a non-empty list")
        omegas = [_number(o, "sweep.omega") for o in omegas]

    outputs = doc.get("outputs", {})
    _expect(isinstance(outputs, dict), "outputs", "must be an object")
    _no_extra(outputs, ("csv", "svg", "plot", "include_rho"), "outputs")
    plot = outputs.get("plot", "probability")
    _expect(plot in PLOT_KINDS, "outputs.plot", f"expected one of {PLOT_KINDS}")
    for key in ("csv", "svg"):
        if outputs.get(key) is not None:
            _expect(isinstance(outputs[key], str), f"outputs.{key}", "must be a string path")

    name = doc.get("name", "scenario")
    _expect(isinstance(name, str), "name", "must be a string")
    return {
        "name": name,
        "dimension": d,
        "classical_size": n_z,
        "initial_state": _normalize_state(doc["initial_state"], "initial_state"),
        "coupling": _normalize_coupling(doc["coupling"], "coupling"),
        "integration": {
            "t_end": _number(integ.get("t_end", 10.0), "integration.t_end", positive=True),
            "dt": _number(integ.get("dt", 1e-3), "integration.dt", positive=True),
            "stride": stride,
        },
        "sweep": {"omega": omegas},
        "outputs": {
            "csv": outputs.get("csv"),
            "svg": outputs.get("svg"),
            "plot": plot,
            "include_rho": bool(outputs.get("include_rho", False)),
        },
    }


def dumps(scenario: dict) -> str:
    return json.dumps(scenario, indent=2, sort_keys=True)


def apply_overrides(scenario: dict, dt=None, t_end=None, omega=None, gamma=None) -> dict:
    """Copy of ``scenario`` with command-line overrides applied and re-normalized."""
    s = copy.deepcopy(scenario)
    if dt is not None:
        s["integration"]["dt"] = dt
    if t_end is not None:
        s["integration"]["t_end"] = t_end
    if omega is not None:
        s["sweep"]["omega"] = list(omega)
    if gamma is not None:
        for kind, body in _walk(s["coupling"]):
            if kind in ("measurement", "rotating_measurement"):
                body["gamma"] = gamma
    return normalize(s)


def has_rotation(scenario: dict) -> bool:
    return any(kind == "rotating_measurement" for kind, _ in _walk(scenario["coupling"]))


def members(scenario: dict) -> list[tuple[float | None, dict]]:
    """Sweep members ``(omega, scenario)`` with the swept omega written into the coupling."""
    omegas = scenario["sweep"]["omega"]
    if not omegas:
        return [(None, scenario)]
    if not has_rotation(scenario):
        raise ScenarioValidationError("sweep.omega", "an omega sweep needs a rotating_measurement coupling")
    out = []
    for om in omegas:
        s = copy.deepcopy(scenario)
        for kind, body in _walk(s["coupling"]):
            if kind == "rotating_measurement":
                body["omega"] = om
        s["sweep"]["omega"] = None
        out.append((om, s))
    return out


@dataclass
class Built:
    scenario: dict
    state: HybridState
    coupling: cp.CouplingTensor


def build_state(scenario: dict) -> HybridState:
    d, n_z = scenario["dimension"], scenario["classical_size"]
    s = scenario["initial_state"]
    if "blocks" in s:
        blocks = [matrix_from_pairs(b) for b in s["blocks"]]
        for k, b in enumerate(blocks, start=1):
            if b.shape != (d, d):
                raise ScenarioValidationError(f"initial_state.blocks[{k - 1}]", f"block z={k} is {b.shape[0]}x{b.shape[0]}, expected {d}x{d}")
        if len(blocks) != n_z:
            raise ScenarioValidationError("initial_state.blocks", f"{len(blocks)} blocks but classical_size is {n_z}")
        state = HybridState(np.array(blocks))
    else:
        if d != 2 or n_z != 2:
            raise ScenarioValidationError("initial_state.pure_bloch", "Bloch shorthand requires dimension 2 and classical_size 2")
        r = np.array(s["pure_bloch"])
        if np.linalg.norm(r) > 0.5 + 1e-9:
            raise ScenarioValidationError("initial_state.pure_bloch", f"|r| = {np.linalg.norm(r):.6g} exceeds 1/2")
        state = noninertial_initial_state(r, s["pointer"])
    report = validate(state)
    if not report.ok:
        raise ScenarioValidationError("initial_state", "; ".join(report.problems))
    return state


def build_coupling(c: dict, d: int, n_z: int, basis) -> cp.CouplingTensor:
    (kind, body), = c.items()
    field = f"coupling.{kind}"
    try:
        if kind == "hamiltonian":
            return cp.unitary_coupling(matrix_from_pairs(body), basis, n_z)
        if kind == "lindblad":
            return cp.lindblad_coupling(matrix_from_pairs(body), n_z)
        if kind in ("measurement", "rotating_measurement") and n_z != d:
            raise ScenarioValidationError(field, f"measurement couplings need classical_size = dimension ({d})")
        if kind == "measurement":
            return cp.simple_projective_coupling(matrix_from_pairs(body["operator"]), body["gamma"], basis)
        if kind == "rotating_measurement":
            if d != 2:
                raise ScenarioValidationError(field, "rotating measurement is defined for qubits only")
            return RotatingApparatus(body["omega"], body["gamma"]).coupling(basis)
        if kind == "tensor":
            w = np.zeros((d * d, d * d, n_z, n_z), dtype=complex)
            for k, e in enumerate(body):
                a, b, z, y = e["alpha"], e["beta"], e["z"], e["y"]
                if not (0 <= a < d * d and 0 <= b < d * d and 1 <= z <= n_z and 1 <= y <= n_z):
                    raise ScenarioValidationError(f"{field}[{k}]", f"index out of range (alpha, beta in 0..{d*d-1}; z, y in 1..{n_z})")
                w[a, b, z - 1, y - 1] += complex(*e["value"])
            return cp.CouplingTensor(d, n_z, w)
        parts = [build_coupling(sub, d, n_z, basis) for sub in body]
        total = parts[0]
        for p in parts[1:]:
            total = cp.add(total, p)
        return total
    except (NotHermitianError, DegenerateSpectrumError, DimensionError, cp.PositivityError, ValueError) as exc:
        if isinstance(exc, ScenarioValidationError):
            raise
        raise ScenarioValidationError(field, str(exc)) from exc


def build(scenario: dict) -> Built:
    d, n_z = scenario["dimension"], scenario["classical_size"]
    basis = lindblad_basis(d)
    return Built(scenario, build_state(scenario), build_coupling(scenario["coupling"], d, n_z, basis))


def oracle_kind(scenario: dict):
    """``"hamiltonian"`` or ``"measurement"`` if a closed form exists for the coupling, else ``None``."""
    (kind, _), = scenario["coupling"].items()
    return kind if kind in ("hamiltonian", "measurement") else None
