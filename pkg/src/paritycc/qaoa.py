"""Full QAOA circuits in the parity architecture.

One layer realizes ``exp(i gamma H_P)`` followed by the driver.  With
``H_P = sum_k J_k Z_k - sum_l C_l prod Z``, a parity qubit gets
``RZ(-2 gamma J_k)`` and a constraint with sign ``s`` gets
``exp(i a s prod Z)`` where ``a`` is its constraint angle (default
``-gamma``, i.e. unit constraint strength).  The driver applies
``exp(i beta X)`` as ``RX(-2 beta)`` to free qubits and one exchange gate
``exp(i beta (XX + YY) / 2)`` per adjacent pair of each polynomial
constraint, in pair-list order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .errors import PlacementError
from .layout import CompilationState, locality_violations
from .synthesis import EXCHANGE, RX_, RZ_, Circuit, synth_constraint

EXCHANGE_NOTE = "exchange gates: first-order product over each polynomial constraint's pair list"


@dataclass
class QAOASchedule:
    gammas: list[float]
    betas: list[float]
    constraint_angles: list[list[float]] | None = None

    def __post_init__(self):
        if len(self.gammas) != len(self.betas):
            raise ValueError("gammas and betas must have the same length")
        if self.constraint_angles is not None and len(self.constraint_angles) != len(self.gammas):
            raise ValueError("need one list of constraint angles per layer")

    @property
    def layers(self) -> int:
        return len(self.gammas)

    def angles_for(self, layer: int, n_constraints: int) -> list[float]:
        if self.constraint_angles is None:
            return [-self.gammas[layer]] * n_constraints
        got = list(self.constraint_angles[layer])
        if len(got) != n_constraints:
            raise ValueError(f"layer {layer}: expected {n_constraints} constraint angles")
        return got


def build_problem_layer(state: CompilationState, gamma: float, constraint_angles: Sequence[float]) -> Circuit:
    """Single-qubit field rotations, then every constraint circuit."""
    p = state.problem
    gates = []
    for k, term in enumerate(p.terms):
        gates.append(RZ_(state.layout[k], -2.0 * gamma * term.coefficient))
    if len(constraint_angles) != len(state.basis.constraints):
        raise ValueError("one angle per constraint required")
    for c, a in zip(state.basis.constraints, constraint_angles):
        circ, _ = synth_constraint(state.device, state.layout.nodes_of(c.qubits), a * c.sign)
        gates.extend(circ.gates)
    return Circuit(gates)


def build_driver_layer(state: CompilationState, beta: float) -> Circuit:
    """Mixer: ``RX`` on free qubits, exchange gates inside polynomial constraints.

    Raises:
        PlacementError: an exchange pair is not on a device edge.
    """
    groups = state.problem.polynomial_groups()
    bad = locality_violations(state.layout, groups, state.device)
    if bad:
        raise PlacementError(f"exchange pairs {bad} are not adjacent")
    in_group = {q for g in groups for q in g}
    gates = [
        RX_(state.layout[q], -2.0 * beta)
        for q in sorted(state.layout.assignment)
        if q not in in_group
    ]
    for g in groups:
        for a, b in zip(g[:-1], g[1:]):
            gates.append(EXCHANGE(state.layout[a], state.layout[b], beta))
    return Circuit(gates)


@dataclass
class QAOAProgram:
    """Assembled program: preparation plus alternating layers."""

    plus_nodes: list[int]
    poly_init: list[tuple[list[int], tuple[int, ...] | None]]
    layers: list[tuple[Circuit, Circuit]] = field(default_factory=list)
    gammas: list[float] = field(default_factory=list)
    betas: list[float] = field(default_factory=list)

    @property
    def body(self) -> Circuit:
        out = Circuit()
        for prob, drv in self.layers:
            out = out + prob + drv
        return out


def assemble(state: CompilationState, schedule: QAOASchedule) -> QAOAProgram:
    """``p`` alternations of problem and driver layer after state preparation."""
    groups = state.problem.polynomial_groups()
    in_group = {q for g in groups for q in g}
    plus = sorted(state.layout[q] for q in state.layout.assignment if q not in in_group)
    init = []
    for g, poly in zip(groups, state.problem.polynomial_constraints):
        init.append(([state.layout[q] for q in g], poly.initial_bits))
    prog = QAOAProgram(plus, init, gammas=list(schedule.gammas), betas=list(schedule.betas))
    n_c = len(state.basis.constraints)
    for layer in range(schedule.layers):
        prob = build_problem_layer(state, schedule.gammas[layer], schedule.angles_for(layer, n_c))
        drv = build_driver_layer(state, schedule.betas[layer])
        prog.layers.append((prob, drv))
    return prog
