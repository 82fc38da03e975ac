"""Command-line front end: ``compile``, ``verify``, ``stats``, ``steiner``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .basis import DEFAULT_MAX_LEN, ConstraintBasis, find_constraint_basis
from .device import DeviceGraph
from .errors import (
    DeviceError,
    DisconnectedDeviceError,
    ParityError,
    PlacementError,
    ProblemError,
    ResourceLimitError,
)
from .layout import (
    COST_MODES,
    DEFAULT_BUDGET,
    DEFAULT_RESTARTS,
    CompilationState,
    Layout,
    local_search,
)
from .oracle import MAX_QUBITS, TOLERANCE, assert_equiv, check_code_space, circuit_unitary, z_values
from .problem import Constraint, HCBOProblem, ParityQubit
from .qaoa import QAOASchedule, assemble
from .qasm import emit_program, parse
from .steiner import steiner_tree
from .synthesis import EXCHANGE, RX_, Circuit, synth_constraint, synth_swap_baseline

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PLACEMENT = 3
EXIT_VERIFY = 4
EXIT_RESOURCE = 5
EXIT_DISCONNECTED = 6

DEFAULT_GAMMA = 0.4
DEFAULT_BETA = 0.3


class InputError(ParityError):
    pass


# -- helpers --------------------------------------------------------------


def _angles(text: str | None, p: int, default: float, name: str) -> list[float]:
    if text is None:
        return [default] * p
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"--{name}: expected comma-separated numbers, got {text!r}") from None
    if len(vals) == 1 and p > 1:
        vals = vals * p
    if len(vals) != p:
        raise InputError(f"--{name}: expected {p} values, got {len(vals)}")
    return vals


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _load_problem(path: str) -> HCBOProblem:
    return HCBOProblem.load(path)


def _load_device(spec: str) -> DeviceGraph:
    return DeviceGraph.from_spec(spec)


# -- compile --------------------------------------------------------------


def compile_problem(problem: HCBOProblem, device: DeviceGraph, args) -> tuple[CompilationState, dict]:
    """Basis, layout search and per-constraint accounting."""
    if args.max_constraint_len < 3:
        raise InputError("--max-constraint-len must be at least 3")
    basis = find_constraint_basis(problem, args.max_constraint_len)
    trace_fh = open(args.trace, "w") if getattr(args, "trace", None) else None
    try:
        on_accept = (lambda e: trace_fh.write(json.dumps(e, sort_keys=True) + "\n")) if trace_fh else None
        result = local_search(
            problem,
            device,
            basis,
            seed=args.seed,
            budget=args.budget,
            restarts=args.restarts,
            mode=args.cost,
            on_accept=on_accept,
        )
    finally:
        if trace_fh:
            trace_fh.close()
    state = result.state
    report = build_report(state, result)
    return state, report


def build_report(state: CompilationState, result=None) -> dict:
    qubits = state.basis.qubits
    rows = []
    swap_cnots = swap_depth = 0
    for i, c in enumerate(state.basis.constraints):
        nodes = state.constraint_nodes(i)
        circ, tree = synth_constraint(state.device, nodes, 1.0)
        if len(c) > 1:
            base = synth_swap_baseline(state.device, nodes, 1.0, tree)
        else:
            base = circ
        swap_cnots += base.cnot_count
        swap_depth += base.cnot_depth
        rows.append(
            {
                "qubits": [str(qubits[q]) for q in c.sorted()],
                "qubit_ids": list(c.sorted()),
                "sign": c.sign,
                "nodes": sorted(nodes),
                "tree_size": tree.size,
                "local": state.is_local(i),
                "cnots": circ.cnot_count,
                "depth": circ.cnot_depth,
                "swap_cnots": base.cnot_count,
                "swap_depth": base.cnot_depth,
            }
        )
    total_cnots = sum(r["cnots"] for r in rows)
    report = {
        "problem": state.problem.name,
        "device": state.device.name,
        "constraints": rows,
        "totals": {
            "constraints": len(rows),
            "cnots": total_cnots,
            "depth": state.cost[1],
            "depth_sum": sum(r["depth"] for r in rows),
            "ancillas": len(state.basis.ancillas),
            "physical_qubits": len(state.layout.assignment),
        },
        "comparison": {
            "bridged": {"cnots": total_cnots, "depth_sum": sum(r["depth"] for r in rows)},
            "swap_baseline": {"cnots": swap_cnots, "depth_sum": swap_depth},
        },
    }
    if result is not None:
        report["optimization"] = {
            "evaluations": result.evaluations,
            "accepted_moves": len(result.trace),
            "initial_cost": {"cnots": result.initial_cost[0], "depth": result.initial_cost[1]},
            "final_cost": {"cnots": state.cost[0], "depth": state.cost[1]},
        }
    return report


def layout_doc(state: CompilationState, schedule: QAOASchedule) -> dict:
    return {
        "version": __version__,
        "device": state.device.to_dict(),
        "ancillas": [{"id": a.id, "label": sorted(a.label)} for a in state.basis.ancillas],
        "basis": [{"qubits": list(c.sorted()), "sign": c.sign} for c in state.basis.constraints],
        "layout": {str(q): n for q, n in sorted(state.layout.assignment.items())},
        "schedule": {
            "gammas": schedule.gammas,
            "betas": schedule.betas,
            "constraint_angles": [
                schedule.angles_for(k, len(state.basis.constraints)) for k in range(schedule.layers)
            ],
        },
    }


def _schedule(args) -> QAOASchedule:
    if args.layers < 0:
        raise InputError("--layers must be non-negative")
    return QAOASchedule(
        _angles(args.gamma, args.layers, DEFAULT_GAMMA, "gamma"),
        _angles(args.beta, args.layers, DEFAULT_BETA, "beta"),
    )


def cmd_compile(args) -> int:
    problem = _load_problem(args.problem)
    device = _load_device(args.device)
    schedule = _schedule(args)
    state, report = compile_problem(problem, device, args)
    prog = assemble(state, schedule)
    body = prog.body
    report["circuit"] = {
        "layers": schedule.layers,
        "cnots": body.cnot_count,
        "gates": len(body.gates),
        "depth": body.depth,
    }
    out = Path(args.out_dir)
    _write_atomic(out / "circuit.qasm", emit_program(prog, device))
    _write_atomic(out / "report.json", _dumps(report))
    _write_atomic(out / "layout.json", _dumps(layout_doc(state, schedule)))
    t = report["totals"]
    print(
        f"compiled {problem.name or args.problem}: {t['constraints']} constraints, "
        f"{t['cnots']} CNOTs/layer (swap baseline {report['comparison']['swap_baseline']['cnots']}), "
        f"{t['ancillas']} ancillas -> {out}"
    )
    return EXIT_OK


def cmd_stats(args) -> int:
    problem = _load_problem(args.problem)
    device = _load_device(args.device)
    _, report = compile_problem(problem, device, args)
    sys.stdout.write(_dumps(report))
    return EXIT_OK


def cmd_steiner(args) -> int:
    device = _load_device(args.device)
    try:
        terms = sorted({int(t) for t in args.terminals.split(",") if t.strip()})
    except ValueError:
        raise InputError("--terminals: expected comma-separated node ids") from None
    if not terms:
        raise InputError("--terminals: need at least one node")
    tree = steiner_tree(device, terms)
    doc = {
        "terminals": terms,
        "size": tree.size,
        "nodes": sorted(tree.nodes),
        "edges": [list(e) for e in sorted(tree.tree_edges)],
    }
    sys.stdout.write(_dumps(doc))
    return EXIT_OK


# -- verify ---------------------------------------------------------------


def restore_state(problem: HCBOProblem, doc: dict) -> tuple[CompilationState, QAOASchedule]:
    """Rebuild the compiled state recorded in a ``layout.json`` document."""
    try:
        device = DeviceGraph.from_dict(doc["device"])
        qubits = list(problem.qubits)
        ancillas = []
        for a in doc["ancillas"]:
            if a["id"] != len(qubits):
                raise InputError("ancilla ids must follow the problem's qubits")
            anc = ParityQubit(a["id"], frozenset(a["label"]), is_ancilla=True)
            qubits.append(anc)
            ancillas.append(anc)
        constraints = [Constraint(frozenset(c["qubits"]), c["sign"]) for c in doc["basis"]]
        basis = ConstraintBasis(constraints, tuple(qubits), ancillas)
        layout = Layout({int(q): n for q, n in doc["layout"].items()})
        sched = doc["schedule"]
        schedule = QAOASchedule(sched["gammas"], sched["betas"], sched["constraint_angles"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed layout file: {exc}") from None
    return CompilationState.build(problem, device, basis, layout), schedule


def _expected_problem_layer(state, gamma, angles, axis, n) -> np.ndarray:
    z = z_values(n)
    phase = np.zeros(2**n)
    for k, term in enumerate(state.problem.terms):
        phase += gamma * term.coefficient * z[:, axis[state.layout[k]]]
    for c, a in zip(state.basis.constraints, angles):
        cols = [axis[state.layout[q]] for q in c.qubits]
        phase += a * c.sign * np.prod(z[:, cols], axis=1)
    return np.diag(np.exp(1j * phase))


def _expected_driver(state, beta) -> Circuit:
    groups = state.problem.polynomial_groups()
    in_group = {q for g in groups for q in g}
    gates = [RX_(n, -2.0 * beta) for q, n in sorted(state.layout.assignment.items()) if q not in in_group]
    for g in groups:
        gates += [EXCHANGE(state.layout[a], state.layout[b], beta) for a, b in zip(g[:-1], g[1:])]
    return Circuit(gates)


def verify_files(circuit_text: str, problem: HCBOProblem, layout: dict, tol: float = TOLERANCE) -> tuple[bool, list[str]]:
    """Oracle check of an emitted program against its recorded compilation.

    Returns:
        ``(passed, messages)``.

    Raises:
        ResourceLimitError: the register exceeds the dense-simulation cap.
    """
    state, schedule = restore_state(problem, layout)
    prog = parse(circuit_text)
    reg = state.device.index
    node_of = {i: n for n, i in reg.items()}
    msgs = []
    ok = True

    if problem.n_spins > MAX_QUBITS:
        raise ResourceLimitError(f"{problem.n_spins} spins exceeds the code-space check cap of {MAX_QUBITS}")
    cs = check_code_space(problem, state.basis)
    msgs.append(f"code space: {'ok' if cs else 'FAIL'}")
    ok &= cs

    gates = [g.__class__(g.kind, tuple(node_of[q] for q in g.qubits), g.angle) for g in prog.gates]
    touched = set(state.layout.assignment.values())
    for g in gates:
        touched.update(g.qubits)
    register = sorted(touched)
    if len(register) > MAX_QUBITS:
        raise ResourceLimitError(f"{len(register)} active qubits exceeds the oracle cap of {MAX_QUBITS}")
    axis = {q: k for k, q in enumerate(register)}
    n = len(register)

    markers = prog.layers
    if len(markers) != 2 * schedule.layers:
        msgs.append(f"layer markers: expected {2 * schedule.layers}, found {len(markers)}")
        return False, msgs
    bounds = [m["start"] for m in markers] + [len(gates)]
    total = np.eye(2**n, dtype=complex)
    expected_total = np.eye(2**n, dtype=complex)
    n_c = len(state.basis.constraints)
    for k in range(schedule.layers):
        g, b = schedule.gammas[k], schedule.betas[k]
        prob = circuit_unitary(Circuit(gates[bounds[2 * k] : bounds[2 * k + 1]]), register)
        drv = circuit_unitary(Circuit(gates[bounds[2 * k + 1] : bounds[2 * k + 2]]), register)
        want_p = _expected_problem_layer(state, g, schedule.angles_for(k, n_c), axis, n)
        want_d = circuit_unitary(_expected_driver(state, b), register)
        for part, got, want in (("problem", prob, want_p), ("driver", drv, want_d)):
            eq, dev = assert_equiv(got, want, tol)
            msgs.append(f"layer {k + 1} {part}: max deviation {dev:.3e} {'ok' if eq else 'FAIL'}")
            ok &= eq
        total = drv @ prob @ total
        expected_total = want_d @ want_p @ expected_total
    eq, dev = assert_equiv(total, expected_total, tol)
    msgs.append(f"program: max deviation {dev:.3e} {'ok' if eq else 'FAIL'}")
    ok &= eq
    return bool(ok), msgs


def cmd_verify(args) -> int:
    problem = _load_problem(args.problem)
    try:
        text = Path(args.circuit).read_text()
        layout = json.loads(Path(args.layout).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(str(exc)) from None
    try:
        ok, msgs = verify_files(text, problem, layout, args.tol)
    except ValueError as exc:
        raise InputError(f"cannot read circuit: {exc}") from None
    for m in msgs:
        print(m)
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_VERIFY


# -- entry point ----------------------------------------------------------


def _add_compile_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--problem", required=True, help="problem JSON file")
    p.add_argument("--device", required=True, help="chain:N, grid:WxH or a device JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="move evaluations")
    p.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
    p.add_argument("--cost", choices=COST_MODES, default="cnot-first")
    p.add_argument("--trace", metavar="PATH", help="write accepted moves as JSON lines")
    p.add_argument("--max-constraint-len", type=int, default=DEFAULT_MAX_LEN)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="paritycc", description="Parity-architecture QAOA compiler")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a problem and emit circuit.qasm, report.json, layout.json")
    _add_compile_flags(p)
    p.add_argument("--layers", type=int, default=1)
    p.add_argument("--gamma", help=f"comma-separated, one per layer (default {DEFAULT_GAMMA})")
    p.add_argument("--beta", help=f"comma-separated, one per layer (default {DEFAULT_BETA})")
    p.add_argument("--out-dir", default="out")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("stats", help="print the cost report without emitting a circuit")
    _add_compile_flags(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("verify", help="check an emitted circuit with the dense oracle")
    p.add_argument("--circuit", required=True)
    p.add_argument("--problem", required=True)
    p.add_argument("--layout", required=True)
    p.add_argument("--tol", type=float, default=TOLERANCE)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("steiner", help="print the Steiner tree used for a set of nodes")
    p.add_argument("--device", required=True)
    p.add_argument("--terminals", required=True, help="comma-separated node ids")
    p.set_defaults(func=cmd_steiner)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except DisconnectedDeviceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DISCONNECTED
    except PlacementError as exc:
        print(f"error: infeasible placement: {exc}", file=sys.stderr)
        return EXIT_PLACEMENT
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (InputError, ProblemError, DeviceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
