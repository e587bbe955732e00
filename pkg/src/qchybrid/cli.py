"""Command-line scenario runner.

Exit codes: 0 success, 1 check failed (tolerance or positivity), 2 parse
error, 3 validation error, 4 integration monitor breach, 5 no oracle.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import oracles, scenario as sc
from .couplings import validate_positivity
from .dynamics import IntegrationError, integrate
from .linalg import lindblad_basis
from .svg import line_chart

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_INVALID, EXIT_BREACH, EXIT_NO_ORACLE = 0, 1, 2, 3, 4, 5

log = logging.getLogger("qchybrid")


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("scenario_pos", nargs="?", metavar="SCENARIO", help="scenario file or bundled scenario name")
    common.add_argument("--scenario", help="scenario file or bundled scenario name")
    common.add_argument("--dt", type=float, help="override integration step")
    common.add_argument("--t-end", type=float, help="override final time")
    common.add_argument("--omega", type=_floats, help="override omega (comma-separated list for a sweep)")
    common.add_argument("--gamma", type=float, help="override measurement rate")
    common.add_argument("--dump-normalized", action="store_true", help="print the normalized scenario and exit")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="qchybrid", description=__doc__.splitlines()[0])
    p.add_argument("--list", action="store_true", help="list bundled scenarios")
    sub = p.add_subparsers(dest="command")

    run = sub.add_parser("run", parents=[common], help="integrate a scenario and write CSV/SVG")
    run.add_argument("--out", default=".", help="output directory for CSV files (default: current directory)")
    run.add_argument("--svg", help="SVG plot path (overrides the scenario)")
    run.add_argument("--workers", type=int, default=4, help="concurrent sweep members")

    ver = sub.add_parser("verify", parents=[common], help="compare the integrator with the closed form")
    ver.add_argument("--tol", type=float, default=1e-7)
    ver.add_argument("--order-study", action="store_true", help="also run at dt/2 and report the error ratio")

    val = sub.add_parser("validate-coupling", parents=[common], help="check the coupling positivity conditions")
    val.add_argument("--times", type=_floats, default=[0.0], help="comma-separated sample times")
    val.add_argument("--tol", type=float, default=1e-9)
    return p


def _load(args):
    path = args.scenario or args.scenario_pos
    if path is None:
        raise sc.ScenarioParseError("no scenario given (use --scenario PATH)")
    s = sc.load(path)
    return sc.apply_overrides(s, dt=args.dt, t_end=args.t_end, omega=args.omega, gamma=args.gamma)


def _label(omega):
    return "" if omega is None else f"omega={omega:g}"


def _csv_path(s, omega, out_dir, n_members):
    template = s["outputs"]["csv"] or f"{s['name']}.csv"
    if "{" in template:
        name = template.format(name=s["name"], omega=omega if omega is not None else "")
    elif n_members > 1:
        stem, dot, ext = template.rpartition(".")
        name = f"{stem}_omega{omega:g}.{ext}" if dot else f"{template}_omega{omega:g}"
    else:
        name = template
    return Path(out_dir) / name


def _plot(s, results, path):
    kind = s["outputs"]["plot"]
    series = []
    for omega, traj in results:
        label = _label(omega) or s["name"]
        if kind == "equator":
            series.append((label, traj.bloch[:, 0], traj.bloch[:, 1]))
        elif kind == "purity":
            series.append((label, traj.times, traj.purity))
        else:
            series.append((label, traj.times, traj.probabilities[:, 0]))
    if kind == "equator":
        doc = line_chart(series, f"{s['name']}: Bloch vector, equatorial plane", "r1", "r2", equal_aspect=True)
    elif kind == "purity":
        doc = line_chart(series, f"{s['name']}: purity", "t", "tr rho^2")
    else:
        doc = line_chart(series, f"{s['name']}: pointer probability", "t", "p(1, t)")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(doc)


def _build_members(s):
    built = []
    for omega, member in sc.members(s):
        b = sc.build(member)
        rep = validate_positivity(b.coupling, 0.0)
        if not rep.ok:
            bad = ", ".join(f"{f.condition} block (z={f.z}, y={f.y}) min eig {f.min_eigenvalue:.3g}" for f in rep.failures())
            print(f"warning: coupling violates positivity at t=0: {bad}", file=sys.stderr)
        built.append((omega, b))
    return built


def cmd_run(args, s):
    built = _build_members(s)
    integ = s["integration"]

    def work(item):
        omega, b = item
        return omega, integrate(b.coupling, b.state, integ["t_end"], integ["dt"], stride=integ["stride"])

    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
        results = list(pool.map(work, built))

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    status = EXIT_OK
    print(f"scenario {s['name']}: d={s['dimension']}, |Z|={s['classical_size']}, t_end={integ['t_end']:g}, dt={integ['dt']:g}")
    for omega, traj in results:
        path = _csv_path(s, omega, out_dir, len(results))
        path.parent.mkdir(parents=True, exist_ok=True)
        traj.to_csv(path, include_rho=s["outputs"]["include_rho"])
        p_final = ", ".join(f"{v:.10f}" for v in traj.probabilities[-1])
        line = (
            f"{_label(omega) or 'run':>12}  p(z, t_end) = [{p_final}]  purity = {traj.purity[-1]:.10f}  "
            f"max trace residual = {traj.trace_residual.max():.3g}  min eig = {traj.min_eigenvalue.min():.3g}  -> {path}"
        )
        print(line.strip())
        if traj.flagged:
            print("  FLAGGED: " + "; ".join(traj.diagnostics))
            status = EXIT_BREACH
    svg = args.svg or s["outputs"]["svg"]
    if svg:
        svg_path = Path(svg) if args.svg else out_dir / svg
        _plot(s, results, svg_path)
        print(f"plot -> {svg_path}")
    return status


def _oracle_blocks(kind, s, b, t):
    body = s["coupling"][kind]
    if kind == "hamiltonian":
        return oracles.exact_unitary_blocks(sc.matrix_from_pairs(body), b.state, t)
    sol = oracles.ExactProjectiveSolution.build(sc.matrix_from_pairs(body["operator"]), body["gamma"], b.state)
    return oracles.exact_projective_blocks(sol, t)


def _deviation(kind, s, b, dt):
    integ = s["integration"]
    traj = integrate(b.coupling, b.state, integ["t_end"], dt, stride=integ["stride"])
    return max(float(np.max(np.abs(traj.blocks[k] - _oracle_blocks(kind, s, b, t)))) for k, t in enumerate(traj.times))


def cmd_verify(args, s):
    kind = sc.oracle_kind(s)
    if kind is None or s["sweep"]["omega"]:
        (name, _), = s["coupling"].items()
        print(f"no closed-form solution available for coupling {name!r}")
        return EXIT_NO_ORACLE
    b = sc.build(s)
    dt = s["integration"]["dt"]
    dev = _deviation(kind, s, b, dt)
    ok = dev <= args.tol
    print(f"{s['name']}: max |integrator - closed form| = {dev:.3e} (dt = {dt:g}, tol = {args.tol:g}) {'PASS' if ok else 'FAIL'}")
    if args.order_study:
        dev2 = _deviation(kind, s, b, dt / 2)
        ratio = dev / dev2 if dev2 > 0 else float("inf")
        print(f"dt/2 = {dt / 2:g}: max deviation = {dev2:.3e}, ratio = {ratio:.2f}, observed order = {np.log2(ratio):.2f}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_validate_coupling(args, s):
    status = EXIT_OK
    for omega, member in sc.members(s):
        b = sc.build(member)
        for t in args.times:
            rep = validate_positivity(b.coupling, t, args.tol)
            tag = f"{_label(omega)} t={t:g}".strip()
            print(f"{tag}: {'PASS' if rep.ok else 'FAIL'} (min eigenvalue {rep.min_eigenvalue:.3e})")
            for blk in rep.blocks:
                flag = "" if blk.ok else "  <-- violated"
                print(f"  {blk.condition} (z={blk.z}, y={blk.y}): min eig {blk.min_eigenvalue:.3e}{flag}")
            if not rep.ok:
                status = EXIT_FAIL
    return status


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "validate-coupling": cmd_validate_coupling}


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    if args.list:
        print("\n".join(sc.bundled_scenarios()))
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_PARSE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        s = _load(args)
        if args.dump_normalized:
            print(sc.dumps(s))
            return EXIT_OK
        return COMMANDS[args.command](args, s)
    except sc.ScenarioParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except sc.ScenarioValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except IntegrationError as exc:
        print(f"integration aborted: {exc}", file=sys.stderr)
        return EXIT_BREACH


if __name__ == "__main__":
    sys.exit(main())
