import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from paritycc.basis import find_constraint_basis
from paritycc.errors import ResourceLimitError
from paritycc.oracle import (
    MAX_QUBITS,
    assert_equiv,
    check_code_space,
    circuit_unitary,
    constraint_target,
    is_unitary,
)
from paritycc.problem import Constraint
from paritycc.synthesis import CNOT, EXCHANGE, RX_, RZ_, Circuit

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)


def kron(*ms):
    out = np.eye(1)
    for m in ms:
        out = np.kron(out, m)
    return out


def embed(op, pos, n):
    """Single-qubit ``op`` at axis ``pos`` (axis 0 is the most significant)."""
    return kron(*[op if k == pos else I2 for k in range(n)])


def test_empty_circuit_identity():
    assert np.allclose(circuit_unitary(Circuit(), 3), np.eye(8))


def test_cnot_maps_10_to_11():
    u = circuit_unitary(Circuit([CNOT(0, 1)]), 2)
    e10 = np.zeros(4)
    e10[0b10] = 1
    assert np.argmax(np.abs(u @ e10)) == 0b11


@settings(max_examples=30)
@given(st.floats(-4, 4), st.integers(0, 2))
def test_single_qubit_gates_match_expm(t, q):
    n = 3
    rz = circuit_unitary(Circuit([RZ_(q, t)]), n)
    rx = circuit_unitary(Circuit([RX_(q, t)]), n)
    assert np.allclose(rz, expm(-0.5j * t * embed(Z, q, n)), atol=1e-12)
    assert np.allclose(rx, expm(-0.5j * t * embed(X, q, n)), atol=1e-12)


@settings(max_examples=30)
@given(st.floats(-4, 4), st.sampled_from([(0, 1), (2, 0), (1, 2)]))
def test_exchange_matches_expm(t, pair):
    n = 3
    a, b = pair
    h = embed(X, a, n) @ embed(X, b, n) + embed(Y, a, n) @ embed(Y, b, n)
    u = circuit_unitary(Circuit([EXCHANGE(a, b, t)]), n)
    assert np.allclose(u, expm(0.5j * t * h), atol=1e-12)


def test_cnot_matches_projector_form():
    n = 3
    p0 = np.diag([1, 0]).astype(complex)
    p1 = np.diag([0, 1]).astype(complex)
    want = embed(p0, 2, n) + embed(p1, 2, n) @ embed(X, 0, n)
    assert np.allclose(circuit_unitary(Circuit([CNOT(2, 0)]), n), want)


def test_register_order_is_respected():
    u = circuit_unitary(Circuit([RX_(7, 0.3)]), [7, 3])
    assert np.allclose(u, expm(-0.15j * embed(X, 0, 2)))
    with pytest.raises(ValueError):
        circuit_unitary(Circuit([RX_(5, 0.3)]), [7, 3])


def test_rz_group_property():
    a = circuit_unitary(Circuit([RZ_(0, 0.4), RZ_(0, 0.4)]), 1)
    b = circuit_unitary(Circuit([RZ_(0, 0.8)]), 1)
    assert assert_equiv(a, b)[0]


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("czxe"), st.integers(0, 3), st.integers(0, 3), st.floats(-3, 3)), max_size=20))
def test_inverse_gives_identity(spec):
    gates = []
    for kind, a, b, t in spec:
        if kind in "ce" and a == b:
            continue
        gates.append({"c": lambda: CNOT(a, b), "z": lambda: RZ_(a, t), "x": lambda: RX_(a, t), "e": lambda: EXCHANGE(a, b, t)}[kind]())
    c = Circuit(gates)
    u = circuit_unitary(c, 4)
    assert is_unitary(u)
    ok, dev = assert_equiv(circuit_unitary(c + c.inverse(), 4), np.eye(16))
    assert ok and dev < 1e-9


def test_resource_cap():
    with pytest.raises(ResourceLimitError):
        circuit_unitary(Circuit(), MAX_QUBITS + 1)
    with pytest.raises(ResourceLimitError):
        constraint_target([0], MAX_QUBITS + 1, 0.1)


def test_constraint_target_examples():
    assert np.allclose(constraint_target([0, 1], 3, 0.0), np.eye(8))
    a = 0.37
    assert np.allclose(constraint_target([0], 1, a), np.diag([np.exp(1j * a), np.exp(-1j * a)]))
    d = np.diag(constraint_target([0, 1], 2, np.pi / 4))
    want = [np.exp(1j * np.pi / 4 * s) for s in (1, -1, -1, 1)]
    assert np.allclose(d, want)
    assert np.allclose(constraint_target([0, 2], 3, a, -1), expm(-1j * a * embed(Z, 0, 3) @ embed(Z, 2, 3)))


def test_assert_equiv_semantics():
    rng = np.random.default_rng(0)
    q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    assert assert_equiv(q, np.exp(1j * np.pi / 7) * q)[0]
    assert assert_equiv(q, q)[0]
    cx = circuit_unitary(Circuit([CNOT(0, 1)]), 2)
    assert not assert_equiv(cx, np.eye(4))[0]
    assert not assert_equiv(np.eye(4), cx)[0]
    with pytest.raises(ValueError):
        assert_equiv(np.eye(2), np.eye(4))


def test_code_space_examples(six_terms, five_cycle):
    b = find_constraint_basis(six_terms)
    assert check_code_space(six_terms, b)
    c0 = b.constraints[0]
    flipped = Constraint(c0.qubits ^ {4}, c0.sign)
    assert not check_code_space(six_terms, b.replace([flipped] + b.constraints[1:]))
    assert not check_code_space(six_terms, b.replace([c0.__class__(c0.qubits, -1)] + b.constraints[1:]))
    # dependent rows do not make a basis
    assert not check_code_space(six_terms, b.replace([c0, c0 * b.constraints[1], b.constraints[1]]))
    b5 = find_constraint_basis(five_cycle)
    assert check_code_space(five_cycle, b5)
    assert not check_code_space(five_cycle, b5.replace(b5.constraints[:1]))


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 5), st.data())
def test_code_space_agrees_with_generator_check(n, data):
    from conftest import make_problem
    from paritycc.basis import ConstraintBasis
    from paritycc.gf2 import BitMatrix, rank
    from paritycc.problem import build_generator_matrix, generator_check

    masks = data.draw(st.lists(st.integers(1, 2**n - 1), min_size=2, max_size=7, unique=True))
    p = make_problem(n, [[i + 1 for i in range(n) if m >> i & 1] for m in masks])
    k = p.n_terms
    rows = data.draw(st.lists(st.integers(1, 2**k - 1), max_size=4))
    basis = ConstraintBasis([Constraint.from_mask(r) for r in rows], p.qubits)
    g = build_generator_matrix(p)
    want = (
        generator_check(g, rows)
        and rank(BitMatrix(k, tuple(rows))) == len(rows)
        and len(rows) == k - rank(g)
    )
    assert check_code_space(p, basis) == want


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.booleans(), st.integers(0, 3), st.integers(0, 3), st.floats(-3, 3)), max_size=20))
def test_phase_network_matches_dense(spec):
    from paritycc.oracle import phase_network_action

    gates = [CNOT(a, b) if cx else RZ_(a, t) for cx, a, b, t in spec if not (cx and a == b)]
    c = Circuit(gates)
    image, phase = phase_network_action(c, [0, 1, 2, 3])
    want = np.zeros((16, 16), dtype=complex)
    want[image, np.arange(16)] = np.exp(1j * phase)
    assert np.allclose(circuit_unitary(c, 4), want)


def test_phase_network_equiv_and_limits():
    from paritycc.oracle import PHASE_NETWORK_MAX_QUBITS, phase_network_action, phase_network_equiv

    c = Circuit([CNOT(0, 1), RZ_(1, -0.6), CNOT(0, 1)])
    assert phase_network_equiv(c, [0, 1], [0, 1], 0.3)[0]
    assert not phase_network_equiv(c, [0, 1], [0, 1], -0.3)[0]
    assert not phase_network_equiv(Circuit([CNOT(0, 1)]), [0, 1], [0], 0.0)[0]
    with pytest.raises(ValueError):
        phase_network_action(Circuit([RX_(0, 0.1)]), [0])
    with pytest.raises(ResourceLimitError):
        phase_network_action(Circuit(), range(PHASE_NETWORK_MAX_QUBITS + 1))
