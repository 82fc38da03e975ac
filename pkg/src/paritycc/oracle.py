"""Dense statevector/unitary oracle for small circuits.

Qubit ``k`` of an ``n``-qubit register is tensor axis ``k`` (most
significant bit of the basis index).  Bit value 0 means ``Z = +1``.
"""

from __future__ import annotations

from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .basis import ConstraintBasis, eliminate_ancillas
from .errors import ResourceLimitError
from .gf2 import BitMatrix, rank
from .problem import HCBOProblem, build_generator_matrix
from .synthesis import CX, EXCH, RX, RZ, Circuit, Gate

MAX_QUBITS = 12
TOLERANCE = 1e-9


def _check_size(n: int):
    if n > MAX_QUBITS:
        raise ResourceLimitError(f"{n} qubits exceeds the dense-simulation cap of {MAX_QUBITS}")


def _idx(n: int, fixed: dict[int, int]) -> tuple:
    idx: list = [slice(None)] * (n + 1)
    for ax, v in fixed.items():
        idx[ax] = v
    return tuple(idx)


def _apply(psi: np.ndarray, g: Gate, axes: Sequence[int]) -> None:
    """Apply ``g`` in place to a ``(2,)*n + (m,)`` array of column states."""
    n = psi.ndim - 1
    if g.kind == CX:
        c, t = axes
        i10, i11 = _idx(n, {c: 1, t: 0}), _idx(n, {c: 1, t: 1})
        psi[i10], psi[i11] = psi[i11].copy(), psi[i10].copy()
    elif g.kind == RZ:
        (q,) = axes
        psi[_idx(n, {q: 0})] *= np.exp(-0.5j * g.angle)
        psi[_idx(n, {q: 1})] *= np.exp(0.5j * g.angle)
    elif g.kind == RX:
        (q,) = axes
        c, s = np.cos(g.angle / 2), -1j * np.sin(g.angle / 2)
        i0, i1 = _idx(n, {q: 0}), _idx(n, {q: 1})
        a0, a1 = psi[i0].copy(), psi[i1].copy()
        psi[i0] = c * a0 + s * a1
        psi[i1] = s * a0 + c * a1
    elif g.kind == EXCH:
        p, q = axes
        c, s = np.cos(g.angle), 1j * np.sin(g.angle)
        i01, i10 = _idx(n, {p: 0, q: 1}), _idx(n, {p: 1, q: 0})
        a01, a10 = psi[i01].copy(), psi[i10].copy()
        psi[i01] = c * a01 + s * a10
        psi[i10] = s * a01 + c * a10
    else:  # pragma: no cover - Gate validates kinds
        raise ValueError(g.kind)


def circuit_unitary(c: Circuit, qubits: Sequence[int] | int) -> np.ndarray:
    """Unitary of ``c`` on the register ``qubits`` (ids in axis order, or a count).

    Raises:
        ResourceLimitError: more than ``MAX_QUBITS`` qubits.
    """
    if isinstance(qubits, int):
        qubits = list(range(qubits))
    qubits = list(qubits)
    n = len(qubits)
    _check_size(n)
    axis = {q: k for k, q in enumerate(qubits)}
    missing = c.qubits - set(axis)
    if missing:
        raise ValueError(f"circuit touches qubits outside the register: {sorted(missing)}")
    dim = 2**n
    u = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    for g in c.gates:
        _apply(u, g, [axis[q] for q in g.qubits])
    return u.reshape(dim, dim)


def z_values(n: int) -> np.ndarray:
    """``(2^n, n)`` array of Z eigenvalues (+1/-1) per basis state and qubit."""
    bits = np.array(list(product((0, 1), repeat=n)), dtype=np.int8).reshape(2**n, n)
    return 1 - 2 * bits


def constraint_target(qubits: Iterable[int], n: int, angle: float, sign: int = 1) -> np.ndarray:
    """Diagonal ``exp(i sign angle prod_{k in qubits} Z_k)`` on ``n`` qubits (axis indices)."""
    _check_size(n)
    qubits = list(qubits)
    z = z_values(n)
    par = np.prod(z[:, qubits], axis=1) if qubits else np.ones(2**n)
    return np.diag(np.exp(1j * sign * angle * par))


def assert_equiv(a: np.ndarray, b: np.ndarray, tol: float = TOLERANCE) -> tuple[bool, float]:
    """Equality up to global phase.

    The phase is read off the largest-magnitude entry of ``b^dagger a``.

    Returns:
        ``(equal, max_abs_deviation)`` after phase alignment.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    m = b.conj().T @ a
    k = np.unravel_index(np.argmax(np.abs(m)), m.shape)
    z = m[k]
    phase = z / abs(z) if abs(z) > 0 else 1.0
    dev = float(np.max(np.abs(a - phase * b))) if a.size else 0.0
    return dev <= tol, dev


def is_unitary(u: np.ndarray, tol: float = TOLERANCE) -> bool:
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


def check_code_space(problem: HCBOProblem, basis: ConstraintBasis) -> bool:
    """Brute-force check that every basis constraint holds on the code space.

    Enumerates all ``2^N`` spin assignments allowed by the product
    constraints, evaluates each parity qubit (ancillas at their forced
    values) and each constraint product, and checks the dimension count
    against the generator-matrix rank.
    """
    n = problem.n_spins
    _check_size(n)
    s = z_values(n) if n else np.ones((1, 0), dtype=np.int8)
    ok_rows = np.ones(len(s), dtype=bool)
    for pc in problem.product_constraints:
        ok_rows &= np.prod(s[:, [i - 1 for i in pc.spins]], axis=1) == pc.sign
    s = s[ok_rows]
    if len(s) == 0:
        return False
    val = {}
    for q in basis.qubits:
        idx = [i - 1 for i in q.label]
        val[q.id] = np.prod(s[:, idx], axis=1) if idx else np.ones(len(s), dtype=np.int8)
    for c in basis.constraints:
        prod = np.ones(len(s), dtype=np.int64)
        for q in c.qubits:
            if basis.qubits[q].is_virtual:
                return False
            prod *= val[q]
        if not np.all(prod == c.sign):
            return False
    g = build_generator_matrix(problem)
    k_all = len(problem.qubits)
    virt = [q.mask for q in problem.virtual_qubits]
    virt_deps = len(virt) - rank(BitMatrix(max(n, 0), tuple(virt))) if virt else 0
    rows = basis.rows()
    if rank(BitMatrix(basis.n_cols, tuple(rows))) != len(rows):
        return False
    eliminated = eliminate_ancillas(rows, [a.id for a in basis.ancillas], basis.n_cols)
    return eliminated.n_rows + virt_deps == k_all - rank(g)


PHASE_NETWORK_MAX_QUBITS = 22


def phase_network_action(c: Circuit, qubits: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Exact action of a CNOT + RZ circuit on every computational basis state.

    Such circuits map each basis state to one basis state times a phase, so
    the permutation and phase vector are the whole unitary.  This reaches
    larger registers than :func:`circuit_unitary`.

    Returns:
        ``(image, phase)``: basis index each input is sent to and the phase
        angle it picks up.

    Raises:
        ValueError: the circuit has gates other than CNOT and RZ.
        ResourceLimitError: more than ``PHASE_NETWORK_MAX_QUBITS`` qubits.
    """
    qubits = list(qubits)
    n = len(qubits)
    if n > PHASE_NETWORK_MAX_QUBITS:
        raise ResourceLimitError(f"{n} qubits exceeds the phase-network cap of {PHASE_NETWORK_MAX_QUBITS}")
    axis = {q: k for k, q in enumerate(qubits)}
    idx = np.arange(2**n, dtype=np.int64)
    bits = [((idx >> (n - 1 - k)) & 1).astype(bool) for k in range(n)]
    phase = np.zeros(2**n)
    for g in c.gates:
        if g.kind == CX:
            ctl, tgt = axis[g.qubits[0]], axis[g.qubits[1]]
            bits[tgt] = bits[tgt] ^ bits[ctl]
        elif g.kind == RZ:
            phase += np.where(bits[axis[g.qubits[0]]], 0.5, -0.5) * g.angle
        else:
            raise ValueError(f"{g.kind} is not a CNOT/RZ gate")
    image = np.zeros(2**n, dtype=np.int64)
    for k in range(n):
        image |= bits[k].astype(np.int64) << (n - 1 - k)
    return image, phase


def phase_network_equiv(
    c: Circuit, qubits: Sequence[int], constraint: Iterable[int], angle: float, tol: float = TOLERANCE
) -> tuple[bool, float]:
    """``c`` equals ``exp(i angle prod_{q in constraint} Z_q)`` up to global phase."""
    qubits = list(qubits)
    image, phase = phase_network_action(c, qubits)
    n = len(qubits)
    if not np.array_equal(image, np.arange(2**n)):
        return False, float("inf")
    axis = {q: k for k, q in enumerate(qubits)}
    idx = np.arange(2**n, dtype=np.int64)
    par = np.ones(2**n)
    for q in constraint:
        par *= 1 - 2 * ((idx >> (n - 1 - axis[q])) & 1)
    got = np.exp(1j * phase)
    want = np.exp(1j * angle * par)
    ratio = got[0] / want[0]
    dev = float(np.max(np.abs(got - ratio * want)))
    return dev <= tol, dev
