from pathlib import Path

import numpy as np
import pytest

from conftest import make_problem
from paritycc.basis import find_constraint_basis
from paritycc.device import DeviceGraph
from paritycc.layout import CompilationState, Layout, initial_layout, local_search
from paritycc.oracle import assert_equiv, circuit_unitary, z_values
from paritycc.problem import HCBOProblem, LogicalTerm, PolynomialConstraint
from paritycc.qaoa import QAOASchedule, assemble, build_driver_layer, build_problem_layer
from paritycc.qasm import emit_circuit, emit_program, fmt_angle, parse
from paritycc.synthesis import CX, EXCH, RX, RZ, Circuit

GOLDEN = Path(__file__).parent / "golden"


def compiled(problem, device, search=True):
    basis = find_constraint_basis(problem)
    if search:
        return local_search(problem, device, basis).state
    return CompilationState.build(problem, device, basis, initial_layout(problem, device, basis))


def register(state, circ):
    return sorted(set(state.layout.assignment.values()) | circ.qubits)


def diag_phase_oracle(state, gamma, angles, reg):
    """exp(i gamma sum J z + i sum a s prod z), evaluated basis state by basis state."""
    axis = {n: k for k, n in enumerate(reg)}
    z = z_values(len(reg))
    ph = np.zeros(len(z))
    for k, t in enumerate(state.problem.terms):
        ph += gamma * t.coefficient * z[:, axis[state.layout[k]]]
    for c, a in zip(state.basis.constraints, angles):
        ph += a * c.sign * np.prod(z[:, [axis[state.layout[q]] for q in c.qubits]], axis=1)
    return np.diag(np.exp(1j * ph))


def small_constrained():
    return HCBOProblem(
        3,
        [LogicalTerm((1, 2), 0.5), LogicalTerm((2, 3), -1.0), LogicalTerm((1, 3), 0.25), LogicalTerm((1,), 1.0)],
        polynomial_constraints=[PolynomialConstraint([(1, 2), (2, 3)], 0, (1, 0))],
    )


def test_schedule_validation():
    with pytest.raises(ValueError):
        QAOASchedule([0.1, 0.2], [0.3])
    with pytest.raises(ValueError):
        QAOASchedule([0.1], [0.3], [[0.1], [0.2]])
    s = QAOASchedule([0.1, 0.2], [0.3, 0.4])
    assert s.layers == 2 and s.angles_for(1, 3) == [-0.2] * 3


def test_chain_demo_layer_counts(chain_demo):
    state = compiled(chain_demo, DeviceGraph.chain(8))
    layer = build_problem_layer(state, 0.3, [-0.3] * 4)
    assert layer.count(RZ) == 8 + 4
    assert layer.cnot_count == 22


def test_problem_layer_matches_oracle(six_terms):
    state = compiled(six_terms, DeviceGraph.grid(3, 3))
    angles = [0.21, -0.4]
    layer = build_problem_layer(state, 0.37, angles)
    reg = register(state, layer)
    ok, dev = assert_equiv(circuit_unitary(layer, reg), diag_phase_oracle(state, 0.37, angles, reg))
    assert ok, dev


def test_problem_layer_commutes_with_constraints(six_terms):
    state = compiled(six_terms, DeviceGraph.grid(3, 3))
    layer = build_problem_layer(state, 0.9, [0.5, 0.1])
    reg = register(state, layer)
    u = circuit_unitary(layer, reg)
    axis = {n: k for k, n in enumerate(reg)}
    z = z_values(len(reg))
    for c in state.basis.constraints:
        op = np.diag(np.prod(z[:, [axis[state.layout[q]] for q in c.qubits]], axis=1)).astype(complex)
        assert np.max(np.abs(u @ op - op @ u)) < 1e-9


def test_zero_angles_identity(six_terms):
    state = compiled(six_terms, DeviceGraph.grid(3, 3))
    layer = build_problem_layer(state, 0.0, [0.0, 0.0])
    reg = register(state, layer)
    assert assert_equiv(circuit_unitary(layer, reg), np.eye(2 ** len(reg)))[0]
    drv = build_driver_layer(state, 0.0)
    assert assert_equiv(circuit_unitary(drv, reg), np.eye(2 ** len(reg)))[0]


def test_no_constraints_rz_only():
    p = make_problem(3, [(1,), (2,), (1, 3)])
    state = compiled(p, DeviceGraph.chain(3))
    layer = build_problem_layer(state, 0.5, [])
    assert layer.count(RZ) == 3 and layer.cnot_count == 0 and layer.depth == 1
    with pytest.raises(ValueError):
        build_problem_layer(state, 0.5, [0.1])


def test_driver_without_polynomial_constraints(six_terms):
    state = compiled(six_terms, DeviceGraph.grid(3, 3))
    drv = build_driver_layer(state, 0.4)
    assert drv.count(RX) == 6 and drv.count(EXCH) == 0
    assert {g.qubits[0] for g in drv.gates} == set(state.layout.assignment.values())


def test_driver_with_exchange(constrained):
    state = compiled(constrained, DeviceGraph.grid(4, 4))
    drv = build_driver_layer(state, 0.4)
    groups = constrained.polynomial_groups()
    in_group = {state.layout[q] for g in groups for q in g}
    assert drv.count(EXCH) == sum(len(g) - 1 for g in groups)
    assert drv.count(RX) == len(state.layout.assignment) - len(in_group)
    for g in drv.gates:
        if g.kind == RX:
            assert g.qubits[0] not in in_group
        else:
            assert state.device.has_edge(*g.qubits)
    blue = [state.layout[q] for q in groups[0]]
    exch = [g.qubits for g in drv.gates if g.kind == EXCH][:2]
    assert exch == [(blue[0], blue[1]), (blue[1], blue[2])]


def test_driver_preserves_polynomial_value():
    p = small_constrained()
    state = compiled(p, DeviceGraph.chain(6))
    drv = build_driver_layer(state, 0.63)
    reg = register(state, drv)
    u = circuit_unitary(drv, reg)
    axis = {n: k for k, n in enumerate(reg)}
    z = z_values(len(reg))
    for grp in p.polynomial_groups():
        obs = np.diag(sum(z[:, axis[state.layout[q]]] for q in grp)).astype(complex)
        assert np.max(np.abs(u @ obs - obs @ u)) < 1e-9


def test_assemble_structure():
    p = small_constrained()
    state = compiled(p, DeviceGraph.chain(6))
    one = assemble(state, QAOASchedule([0.1], [0.2]))
    three = assemble(state, QAOASchedule([0.1, 0.2, 0.3], [0.4, 0.5, 0.6]))
    assert len(three.layers) == 3
    for kind in (CX, RZ, RX, EXCH):
        assert three.body.count(kind) == 3 * one.body.count(kind)
    zero = assemble(state, QAOASchedule([], []))
    assert zero.body.gates == () and zero.plus_nodes
    grp_nodes = [state.layout[q] for q in p.polynomial_groups()[0]]
    assert one.poly_init == [(grp_nodes, (1, 0))]
    assert not set(grp_nodes) & set(one.plus_nodes)


def test_emitted_angles_roundtrip():
    p = small_constrained()
    dev = DeviceGraph.chain(6)
    state = compiled(p, dev)
    gammas, betas = [0.1, -0.25, 1.0 / 3], [0.7, 0.0, -2.5]
    prog = assemble(state, QAOASchedule(gammas, betas))
    text = emit_program(prog, dev)
    parsed = parse(text)
    assert [m["angle"] for m in parsed.layers if m["part"] == "problem"] == gammas
    assert [m["angle"] for m in parsed.layers if m["part"] == "driver"] == betas
    node = {i: n for n, i in dev.index.items()}
    back = [g.__class__(g.kind, tuple(node[q] for q in g.qubits), g.angle) for g in parsed.gates]
    assert back == list(prog.body.gates)
    assert ("x", dev.index[prog.poly_init[0][0][0]]) in parsed.prep
    assert "first-order product" in text


def test_fmt_angle():
    assert fmt_angle(-0.0) == "0.0"
    assert float(fmt_angle(1 / 3)) == 1 / 3


def test_parse_errors():
    with pytest.raises(ValueError):
        parse("OPENQASM 2.0;\nqreg q[2];\ncz q[0],q[1];\n")
    with pytest.raises(ValueError):
        parse("OPENQASM 2.0;\ncx q[0],q[1];\n")


def test_emit_circuit_roundtrip():
    dev = DeviceGraph.chain(3)
    from paritycc.synthesis import CNOT, EXCHANGE, RZ_

    c = Circuit([CNOT(0, 1), RZ_(1, -0.0), EXCHANGE(1, 2, 0.5)])
    text = emit_circuit(c, dev)
    assert "rz(0.0) q[1];" in text and "opaque exch" in text
    assert parse(text).gates == [c.gates[0], c.gates[1].__class__(RZ, (1,), 0.0), c.gates[2]]


def test_golden_program(six_terms):
    dev = DeviceGraph.grid(3, 3)
    state = compiled(six_terms, dev, search=False)
    prog = assemble(state, QAOASchedule([0.4, 0.8], [0.3, 0.15]))
    assert emit_program(prog, dev) == (GOLDEN / "six_terms_grid3x3.qasm").read_text()
