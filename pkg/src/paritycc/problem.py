"""HCBO problems, parity qubits, and the target constraint space.

Parity qubit ids are assigned in a fixed order: one qubit per problem term
(``0..K-1``, same order as the input), then one *virtual* qubit per product
constraint (``K..K+V-1``).  Virtual qubits carry a fixed sign and are never
placed on hardware.  Ancillas created later by basis construction take the
ids after that.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import jsonschema

from .errors import ProblemError
from .gf2 import BitMatrix, IncrementalBasis, canonical, nullspace_basis, support

PROBLEM_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "HCBO problem",
    "type": "object",
    "required": ["n_spins", "terms"],
    "additionalProperties": False,
    "properties": {
        "n_spins": {"type": "integer", "minimum": 0},
        "terms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["spins", "coefficient"],
                "additionalProperties": False,
                "properties": {
                    "spins": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                    "coefficient": {"type": "number"},
                },
            },
        },
        "product_constraints": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["spins"],
                "additionalProperties": False,
                "properties": {
                    "spins": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                    "sign": {"enum": [1, -1]},
                },
            },
        },
        "polynomial_constraints": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["members", "value"],
                "additionalProperties": False,
                "properties": {
                    "members": {
                        "type": "array",
                        "minItems": 2,
                        "items": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                    },
                    "value": {"type": "integer"},
                    "initial_bits": {"type": "array", "items": {"enum": [0, 1]}},
                },
            },
        },
    },
}


def _spin_set(spins: Iterable[int]) -> frozenset[int]:
    spins = list(spins)
    s = frozenset(spins)
    if len(s) != len(spins):
        raise ProblemError(f"duplicate spin index in {spins}")
    if not s:
        raise ProblemError("empty spin set")
    return s


def label_mask(spins: Iterable[int]) -> int:
    """Bit mask of a logical spin set (spin ``i`` -> bit ``i - 1``)."""
    m = 0
    for i in spins:
        m |= 1 << (i - 1)
    return m


def fmt_label(spins: Iterable[int]) -> str:
    return "(" + ",".join(str(i) for i in sorted(spins)) + ")"


@dataclass(frozen=True)
class LogicalTerm:
    spins: frozenset[int]
    coefficient: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "spins", _spin_set(self.spins))


@dataclass(frozen=True)
class ProductConstraint:
    """Side condition ``prod_{i in spins} sigma_z^(i) = sign``."""

    spins: frozenset[int]
    sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, "spins", _spin_set(self.spins))
        if self.sign not in (1, -1):
            raise ProblemError(f"product constraint sign must be +-1, got {self.sign}")


@dataclass(frozen=True)
class PolynomialConstraint:
    """Side condition ``sum_m sigma_z^(m) = value`` over parity qubits.

    ``members`` name parity qubits by their term spin sets.  Consecutive
    members form the exchange pairs of the driver, so they must sit on
    adjacent device nodes.  ``initial_bits`` (one per member, ``1`` meaning
    ``sigma_z = -1``) is the user-chosen starting configuration.
    """

    members: tuple[frozenset[int], ...]
    value: int
    initial_bits: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(_spin_set(m) for m in self.members))
        if self.initial_bits is not None:
            object.__setattr__(self, "initial_bits", tuple(int(b) for b in self.initial_bits))

    @property
    def pairs(self) -> list[tuple[frozenset[int], frozenset[int]]]:
        return list(zip(self.members[:-1], self.members[1:]))


@dataclass(frozen=True)
class ParityQubit:
    """A parity qubit.

    ``label`` is the set of logical spins whose product the qubit holds.  For
    an ancilla it is the parity the ancilla is forced to by its constraint
    chain (possibly empty); ``is_ancilla`` marks it as an extra qubit without
    a problem term.  ``fixed_sign`` is set only for virtual qubits standing in
    for product constraints.
    """

    id: int
    label: frozenset[int]
    is_ancilla: bool = False
    fixed_sign: int | None = None

    @property
    def is_virtual(self) -> bool:
        return self.fixed_sign is not None

    @property
    def mask(self) -> int:
        return label_mask(self.label)

    def __str__(self) -> str:
        if self.is_ancilla:
            return f"a{self.id}"
        return fmt_label(self.label)


@dataclass(frozen=True)
class Constraint:
    """Fixed sigma_z product ``prod_{m in qubits} sigma_z^(m) = sign``."""

    qubits: frozenset[int]
    sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, "qubits", frozenset(self.qubits))
        if self.sign not in (1, -1):
            raise ValueError(f"constraint sign must be +-1, got {self.sign}")
        if not self.qubits:
            raise ValueError("constraint needs at least one qubit")

    def __len__(self) -> int:
        return len(self.qubits)

    @property
    def mask(self) -> int:
        m = 0
        for q in self.qubits:
            m |= 1 << q
        return m

    @classmethod
    def from_mask(cls, mask: int, sign: int = 1) -> "Constraint":
        return cls(frozenset(support(mask)), sign)

    def sorted(self) -> tuple[int, ...]:
        return tuple(sorted(self.qubits))

    def __mul__(self, other: "Constraint") -> "Constraint":
        """GF(2) sum of the qubit sets; signs multiply."""
        return Constraint(self.qubits ^ other.qubits, self.sign * other.sign)


class _VirtualSpan:
    """Elimination over the labels of virtual qubits, tracking combinations."""

    def __init__(self, virtual: Sequence[ParityQubit]):
        self._rows: list[tuple[int, int, int]] = []  # (label, combo of virtual ids, pivot bit)
        self.inconsistent: list[int] = []
        for q in virtual:
            lab, combo = self._reduce(q.mask, 1 << q.id)
            if lab == 0:
                self.inconsistent.append(combo)
                continue
            p = lab & -lab
            self._rows = [
                (r ^ lab, c ^ combo, pv) if r & p else (r, c, pv) for r, c, pv in self._rows
            ]
            self._rows.append((lab, combo, p))

    def _reduce(self, lab: int, combo: int = 0) -> tuple[int, int]:
        for r, c, p in self._rows:
            if lab & p:
                lab ^= r
                combo ^= c
        return lab, combo

    def explain(self, lab: int) -> int | None:
        """Virtual-qubit combination (id mask) whose labels XOR to ``lab``."""
        res, combo = self._reduce(lab)
        return combo if res == 0 else None


@dataclass(frozen=True)
class HCBOProblem:
    """Higher-order constrained binary optimization problem."""

    n_spins: int
    terms: tuple[LogicalTerm, ...]
    product_constraints: tuple[ProductConstraint, ...] = ()
    polynomial_constraints: tuple[PolynomialConstraint, ...] = ()
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "product_constraints", tuple(self.product_constraints))
        object.__setattr__(self, "polynomial_constraints", tuple(self.polynomial_constraints))
        self._validate()

    def _validate(self):
        seen: set[frozenset[int]] = set()
        for t in self.terms:
            if max(t.spins) > self.n_spins:
                raise ProblemError(f"term {fmt_label(t.spins)} uses a spin > n_spins={self.n_spins}")
            if t.spins in seen:
                raise ProblemError(f"duplicate term {fmt_label(t.spins)}")
            seen.add(t.spins)
        pc_seen: set[frozenset[int]] = set()
        for pc in self.product_constraints:
            if max(pc.spins) > self.n_spins:
                raise ProblemError(f"product constraint {fmt_label(pc.spins)} uses a spin > n_spins")
            if pc.spins in seen:
                raise ProblemError(
                    f"product constraint {fmt_label(pc.spins)} coincides with a problem term"
                )
            if pc.spins in pc_seen:
                raise ProblemError(f"duplicate product constraint {fmt_label(pc.spins)}")
            pc_seen.add(pc.spins)
        used: set[frozenset[int]] = set()
        for k, poly in enumerate(self.polynomial_constraints):
            n = len(poly.members)
            for m in poly.members:
                if m not in seen:
                    raise ProblemError(
                        f"polynomial constraint {k}: member {fmt_label(m)} is not a problem term"
                    )
                if m in used:
                    raise ProblemError(f"parity qubit {fmt_label(m)} is in two polynomial constraints")
                used.add(m)
            if abs(poly.value) > n or (n - poly.value) % 2:
                raise ProblemError(f"polynomial constraint {k}: value {poly.value} unreachable")
            if poly.initial_bits is not None:
                if len(poly.initial_bits) != n:
                    raise ProblemError(f"polynomial constraint {k}: need {n} initial bits")
                if n - 2 * sum(poly.initial_bits) != poly.value:
                    raise ProblemError(f"polynomial constraint {k}: initial bits violate the value")
        span = _VirtualSpan(self.virtual_qubits)
        for combo in span.inconsistent:
            sign = 1
            for v in support(combo):
                sign *= self.qubits[v].fixed_sign
            if sign == -1:
                raise ProblemError("product constraints are contradictory")
        for q in self.term_qubits:
            if span.explain(q.mask) is not None:
                raise ProblemError(
                    f"term {fmt_label(q.label)} is fixed by the product constraints; drop it"
                )

    # -- qubits -----------------------------------------------------------

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @cached_property
    def qubits(self) -> tuple[ParityQubit, ...]:
        out = [ParityQubit(k, t.spins) for k, t in enumerate(self.terms)]
        for j, pc in enumerate(self.product_constraints):
            out.append(ParityQubit(self.n_terms + j, pc.spins, fixed_sign=pc.sign))
        return tuple(out)

    @property
    def term_qubits(self) -> tuple[ParityQubit, ...]:
        return self.qubits[: self.n_terms]

    @property
    def virtual_qubits(self) -> tuple[ParityQubit, ...]:
        return self.qubits[self.n_terms :]

    @cached_property
    def _term_ids(self) -> dict[frozenset[int], int]:
        return {t.spins: k for k, t in enumerate(self.terms)}

    def qubit_id(self, spins: Iterable[int]) -> int:
        """Id of the term qubit labelled by ``spins``."""
        try:
            return self._term_ids[frozenset(spins)]
        except KeyError:
            raise ProblemError(f"no term {fmt_label(spins)}") from None

    def polynomial_groups(self) -> list[list[int]]:
        """Qubit ids of each polynomial constraint, in member order."""
        return [[self.qubit_id(m) for m in p.members] for p in self.polynomial_constraints]

    @cached_property
    def virtual_span(self) -> _VirtualSpan:
        return _VirtualSpan(self.virtual_qubits)

    # -- serialization ----------------------------------------------------

    @classmethod
    def from_dict(cls, doc: dict, name: str = "") -> "HCBOProblem":
        try:
            jsonschema.validate(doc, PROBLEM_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ProblemError(f"invalid problem file: {exc.message}") from None
        return cls(
            n_spins=doc["n_spins"],
            terms=[LogicalTerm(t["spins"], float(t["coefficient"])) for t in doc["terms"]],
            product_constraints=[
                ProductConstraint(p["spins"], p.get("sign", 1))
                for p in doc.get("product_constraints", [])
            ],
            polynomial_constraints=[
                PolynomialConstraint(p["members"], p["value"], p.get("initial_bits"))
                for p in doc.get("polynomial_constraints", [])
            ],
            name=name,
        )

    @classmethod
    def load(cls, path) -> "HCBOProblem":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ProblemError(f"cannot read problem file {path}: {exc}") from None
        return cls.from_dict(doc, name=path.stem)

    def to_dict(self) -> dict:
        doc: dict = {
            "n_spins": self.n_spins,
            "terms": [{"spins": sorted(t.spins), "coefficient": t.coefficient} for t in self.terms],
        }
        if self.product_constraints:
            doc["product_constraints"] = [
                {"spins": sorted(p.spins), "sign": p.sign} for p in self.product_constraints
            ]
        if self.polynomial_constraints:
            polys = []
            for p in self.polynomial_constraints:
                d = {"members": [sorted(m) for m in p.members], "value": p.value}
                if p.initial_bits is not None:
                    d["initial_bits"] = list(p.initial_bits)
                polys.append(d)
            doc["polynomial_constraints"] = polys
        return doc


def build_generator_matrix(p: HCBOProblem) -> BitMatrix:
    """``N x (K + V)`` incidence matrix; product-constraint columns come last."""
    rows = []
    for i in range(1, p.n_spins + 1):
        r = 0
        for q in p.qubits:
            if i in q.label:
                r |= 1 << q.id
        rows.append(r)
    return BitMatrix(len(p.qubits), tuple(rows))


def target_constraint_space(p: HCBOProblem) -> BitMatrix:
    """Canonical basis of the nullspace of the generator matrix.

    Columns are all parity qubits including virtual ones.
    """
    return nullspace_basis(build_generator_matrix(p))


def fold_virtual_qubits(c: Constraint, qubits: Sequence[ParityQubit]) -> Constraint:
    """Drop virtual qubits from ``c``, multiplying their fixed signs into its sign."""
    by_id = {q.id: q for q in qubits}
    sign = c.sign
    keep = set()
    for q in c.qubits:
        pq = by_id[q]
        if pq.is_virtual:
            sign *= pq.fixed_sign
        else:
            keep.add(q)
    return Constraint(frozenset(keep), sign)


def physical_constraint_space(p: HCBOProblem) -> BitMatrix:
    """Target space with virtual columns eliminated, over the ``K`` term qubits."""
    t = target_constraint_space(p)
    keep = (1 << p.n_terms) - 1
    return canonical(BitMatrix(p.n_terms, tuple(r & keep for r in t.rows)))


def folded_sign(p: HCBOProblem, qubit_mask: int, qubits: Sequence[ParityQubit]) -> int | None:
    """Sign of the physical constraint on ``qubit_mask`` (ids into ``qubits``).

    Returns ``None`` when the product of the labels is not fixed by the
    product constraints, i.e. the qubit set is not a valid constraint.
    """
    lab = 0
    for q in support(qubit_mask):
        lab ^= qubits[q].mask
    combo = p.virtual_span.explain(lab)
    if combo is None:
        return None
    sign = 1
    for v in support(combo):
        sign *= p.qubits[v].fixed_sign
    return sign


def generator_check(g: BitMatrix, constraints: Iterable[int]) -> bool:
    """``G @ P^T == 0`` for packed constraint rows over G's columns."""
    ps = BitMatrix(g.n_cols, tuple(constraints))
    return (g @ ps.transpose()).is_zero()


def independent(rows: Iterable[int], n_cols: int) -> bool:
    b = IncrementalBasis(n_cols)
    return all(b.add(r) for r in rows)
