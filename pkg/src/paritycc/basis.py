"""Short-constraint basis search and ancilla break-down of long constraints."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterable, Sequence

from .gf2 import BitMatrix, IncrementalBasis, canonical, support, weight
from .problem import (
    Constraint,
    HCBOProblem,
    ParityQubit,
    folded_sign,
    physical_constraint_space,
)

DEFAULT_MAX_LEN = 4


@dataclass
class ConstraintBasis:
    """Constraints to implement plus the ancillas they introduced.

    ``qubits`` lists every parity qubit indexed by id (term qubits, virtual
    qubits, ancillas) so that constraint ids can be resolved.
    """

    constraints: list[Constraint]
    qubits: tuple[ParityQubit, ...]
    ancillas: list[ParityQubit] = field(default_factory=list)

    @property
    def n_cols(self) -> int:
        return len(self.qubits)

    def rows(self) -> list[int]:
        return [c.mask for c in self.constraints]

    def physical_qubits(self) -> list[ParityQubit]:
        """Qubits that need a hardware node (terms and ancillas, not virtual)."""
        return [q for q in self.qubits if not q.is_virtual]

    def __len__(self) -> int:
        return len(self.constraints)

    def replace(self, constraints: list[Constraint]) -> "ConstraintBasis":
        return ConstraintBasis(list(constraints), self.qubits, list(self.ancillas))


def _label_parity(ids: Iterable[int], qubits: Sequence[ParityQubit]) -> int:
    lab = 0
    for q in ids:
        lab ^= qubits[q].mask
    return lab


def is_valid_constraint(
    ids: Iterable[int],
    qubits: Sequence[ParityQubit],
    problem: HCBOProblem | None = None,
) -> bool:
    """Every logical spin index occurs an even number of times across the labels.

    Ancillas count with the parity they are forced to.  When ``problem`` has
    product constraints, a leftover that equals a product of fixed virtual
    qubits is accepted too (those qubits were folded out).

    Raises:
        ValueError: if an id repeats or names no qubit.
    """
    ids = list(ids)
    if len(set(ids)) != len(ids):
        raise ValueError(f"constraint qubits must be distinct: {ids}")
    for q in ids:
        if not 0 <= q < len(qubits):
            raise ValueError(f"unknown qubit id {q}")
    lab = _label_parity(ids, qubits)
    if lab == 0:
        return True
    if problem is None or not problem.product_constraints:
        return False
    return problem.virtual_span.explain(lab) is not None


def enumerate_short_constraints(
    qubits: Sequence[ParityQubit],
    max_len: int,
    problem: HCBOProblem | None = None,
    candidates: Sequence[int] | None = None,
) -> list[Constraint]:
    """All valid constraints with 2..max_len physical qubits.

    The search is the plain O(K^L) enumeration of qubit subsets.  Output is
    ordered lexicographically by the sorted id tuple.
    """
    if max_len < 2:
        raise ValueError("max_len must be at least 2")
    if candidates is None:
        candidates = [q.id for q in qubits if not q.is_virtual]
    ids = sorted(candidates)
    masks = [qubits[q].mask for q in ids]
    span = problem.virtual_span if problem is not None and problem.product_constraints else None
    found: list[tuple[tuple[int, ...], int]] = []

    def rec(start: int, chosen: list[int], lab: int):
        if len(chosen) >= 2:
            if lab == 0:
                found.append((tuple(chosen), 1))
            elif span is not None and span.explain(lab) is not None:
                found.append((tuple(chosen), 0))
        if len(chosen) == max_len:
            return
        for k in range(start, len(ids)):
            chosen.append(ids[k])
            rec(k + 1, chosen, lab ^ masks[k])
            chosen.pop()

    rec(0, [], 0)
    found.sort(key=lambda t: t[0])
    out = []
    for tup, trivially_plus in found:
        if trivially_plus:
            sign = 1
        else:
            m = 0
            for q in tup:
                m |= 1 << q
            sign = folded_sign(problem, m, qubits)
        out.append(Constraint(frozenset(tup), sign))
    return out


def grow_short_basis(
    target: BitMatrix, candidates: Sequence[Constraint]
) -> tuple[list[Constraint], BitMatrix]:
    """Greedy basis of short constraints inside ``target``'s row space.

    Candidates are taken by increasing length, ties by sorted id tuple, and
    kept when independent of what has been chosen so far.  For a matroid this
    greedy choice minimizes the total constraint length.

    Returns:
        The chosen constraints and the (canonical) target rows that the
        chosen constraints do not span.
    """
    tspace = IncrementalBasis(target.n_cols)
    for r in target.rows:
        tspace.add(r)
    dim = len(tspace)
    chosen: list[Constraint] = []
    span = IncrementalBasis(target.n_cols)
    for c in sorted(candidates, key=lambda c: (len(c), c.sorted())):
        if len(span) == dim:
            break
        v = c.mask
        if v >> target.n_cols or not tspace.contains(v):
            continue
        if span.add(v):
            chosen.append(c)
    uncovered = []
    for r in canonical(target).rows:
        if span.add(r):
            uncovered.append(r)
    return chosen, BitMatrix(target.n_cols, tuple(uncovered))


def shorten(v: int, basis_rows: Sequence[int]) -> int:
    """Greedily lower the weight of ``v`` by adding rows from ``basis_rows``."""
    improved = True
    while improved:
        improved = False
        for r in basis_rows:
            if weight(v ^ r) < weight(v):
                v ^= r
                improved = True
    return v


def break_long_constraint(
    c: Constraint,
    max_len: int,
    qubits: Sequence[ParityQubit],
    next_id: int | None = None,
    order: Callable[[int], object] | None = None,
) -> tuple[list[Constraint], list[ParityQubit]]:
    """Split ``c`` into a chain of constraints of length <= ``max_len``.

    The qubits (sorted by ``order``, default by id) are cut into consecutive
    chunks; neighbouring chunks share one fresh ancilla.  The first and last
    links hold ``max_len - 1`` real qubits at most, inner links
    ``max_len - 2``.  Each ancilla is forced to the parity of everything
    before it in the chain, which is recorded as its label.  Summing the
    chain and eliminating the ancillas gives back ``c``.

    Returns:
        The chain constraints (``c.sign`` is carried by the last link) and
        the new ancilla qubits, numbered from ``next_id``.
    """
    n = len(c)
    if n <= max_len:
        return [c], []
    if max_len < 3:
        raise ValueError("max_len must be at least 3 to chain with ancillas")
    if next_id is None:
        next_id = len(qubits)
    members = sorted(c.qubits, key=order if order is not None else (lambda q: q))
    links = math.ceil((n - 2) / (max_len - 2))
    sizes = [max_len - 1] + [max_len - 2] * (links - 2)
    sizes.append(n - sum(sizes))
    chunks = []
    pos = 0
    for s in sizes:
        chunks.append(members[pos : pos + s])
        pos += s

    ancillas: list[ParityQubit] = []
    out: list[Constraint] = []
    carried = 0
    prev = None
    for k, chunk in enumerate(chunks):
        ids = set(chunk)
        if prev is not None:
            ids.add(prev.id)
        carried ^= _label_parity(chunk, qubits)
        if k < len(chunks) - 1:
            anc = ParityQubit(
                next_id + len(ancillas),
                frozenset(i + 1 for i in support(carried)),
                is_ancilla=True,
            )
            ancillas.append(anc)
            ids.add(anc.id)
            prev = anc
            out.append(Constraint(frozenset(ids), 1))
        else:
            out.append(Constraint(frozenset(ids), c.sign))
    return out, ancillas


def eliminate_ancillas(rows: Iterable[int], ancilla_ids: Iterable[int], n_cols: int) -> BitMatrix:
    """Row space of ``rows`` restricted to vectors free of ancilla columns."""
    rows = [r for r in rows]
    for a in ancilla_ids:
        bit = 1 << a
        pivot = next((i for i, r in enumerate(rows) if r & bit), None)
        if pivot is None:
            continue
        prow = rows.pop(pivot)
        rows = [r ^ prow if r & bit else r for r in rows]
    return canonical(BitMatrix(n_cols, tuple(rows)))


def find_constraint_basis(
    problem: HCBOProblem,
    max_len: int = DEFAULT_MAX_LEN,
    order: Callable[[int], object] | None = None,
) -> ConstraintBasis:
    """Short-constraint basis of the problem's physical constraint space.

    Enumerates all valid constraints up to ``max_len``, keeps a smallest
    spanning subset, then chains every remaining long constraint with
    ancillas.
    """
    qubits = list(problem.qubits)
    target = physical_constraint_space(problem)
    candidates = enumerate_short_constraints(qubits, max_len, problem)
    chosen, uncovered = grow_short_basis(target, candidates)
    constraints = list(chosen)
    ancillas: list[ParityQubit] = []
    short_rows = [c.mask for c in chosen]
    span = IncrementalBasis(target.n_cols)
    for r in short_rows:
        span.add(r)
    for r in uncovered.rows:
        if span.contains(r):
            continue
        v = shorten(r, short_rows)
        span.add(v)
        sign = folded_sign(problem, v, qubits)
        long_c = Constraint.from_mask(v, sign)
        links, new = break_long_constraint(long_c, max_len, qubits, next_id=len(qubits), order=order)
        qubits.extend(new)
        ancillas.extend(new)
        constraints.extend(links)
    return ConstraintBasis(constraints, tuple(qubits), ancillas)


def basis_spans_target(basis: ConstraintBasis, problem: HCBOProblem) -> bool:
    """Eliminating ancillas from the basis recovers exactly the target space."""
    got = eliminate_ancillas(basis.rows(), [a.id for a in basis.ancillas], basis.n_cols)
    want = physical_constraint_space(problem)
    keep = (1 << problem.n_terms) - 1
    if any(r & ~keep for r in got.rows):
        return False
    return BitMatrix(problem.n_terms, got.rows) == want
