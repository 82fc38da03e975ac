"""OpenQASM 2.0 subset writer and reader.

Gates map to ``cx``, ``rz``, ``rx`` and the opaque two-qubit ``exch``.
Preparation uses ``h`` and ``x``; comment lines carry layer markers and
polynomial-constraint initial-state directives.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .device import DeviceGraph
from .qaoa import EXCHANGE_NOTE, QAOAProgram
from .synthesis import CX, EXCH, RX, RZ, Circuit, Gate

HEADER = 'OPENQASM 2.0;\ninclude "qelib1.inc";\n'


def fmt_angle(x: float) -> str:
    x = float(x)
    if x == 0:
        x = 0.0
    return repr(x)


def gate_line(g: Gate, reg: dict[int, int]) -> str:
    qs = ",".join(f"q[{reg[q]}]" for q in g.qubits)
    if g.kind == CX:
        return f"cx {qs};"
    return f"{g.kind}({fmt_angle(g.angle)}) {qs};"


def circuit_lines(c: Circuit, reg: dict[int, int]) -> list[str]:
    return [gate_line(g, reg) for g in c.gates]


def emit_circuit(c: Circuit, device: DeviceGraph) -> str:
    """Stand-alone QASM text for a bare circuit on ``device``."""
    lines = [HEADER.rstrip("\n")]
    if any(g.kind == EXCH for g in c.gates):
        lines.append("opaque exch(theta) a,b;")
    lines.append(f"qreg q[{len(device)}];")
    lines.extend(circuit_lines(c, device.index))
    return "\n".join(lines) + "\n"


def emit_program(prog: QAOAProgram, device: DeviceGraph) -> str:
    reg = device.index
    has_exch = any(g.kind == EXCH for p, d in prog.layers for g in d.gates) or any(
        True for _ in prog.poly_init
    )
    lines = [HEADER.rstrip("\n")]
    if has_exch:
        lines.append(f"// {EXCHANGE_NOTE}")
        lines.append("opaque exch(theta) a,b;")
    lines.append(f"qreg q[{len(device)}];")
    lines.append("// prepare")
    for n in prog.plus_nodes:
        lines.append(f"h q[{reg[n]}];")
    for k, (nodes, bits) in enumerate(prog.poly_init):
        qs = ",".join(f"q[{reg[n]}]" for n in nodes)
        if bits is None:
            lines.append(f"// poly-init {k} {qs} user-supplied")
        else:
            lines.append(f"// poly-init {k} {qs} bits {''.join(str(b) for b in bits)}")
            for n, b in zip(nodes, bits):
                if b:
                    lines.append(f"x q[{reg[n]}];")
    for layer, (prob, drv) in enumerate(prog.layers):
        lines.append(f"// layer {layer + 1} problem gamma={fmt_angle(prog.gammas[layer])}")
        lines.extend(circuit_lines(prob, reg))
        lines.append(f"// layer {layer + 1} driver beta={fmt_angle(prog.betas[layer])}")
        lines.extend(circuit_lines(drv, reg))
    return "\n".join(lines) + "\n"


@dataclass
class ParsedProgram:
    n_qubits: int
    prep: list[tuple[str, int]] = field(default_factory=list)
    layers: list[dict] = field(default_factory=list)
    gates: list[Gate] = field(default_factory=list)

    @property
    def body(self) -> Circuit:
        return Circuit(self.gates)


_GATE = re.compile(r"^(cx|rz|rx|exch|h|x)(?:\(([^)]*)\))?\s+(.+);$")
_QUBIT = re.compile(r"q\[(\d+)\]")
_LAYER = re.compile(r"^// layer (\d+) (problem|driver) (gamma|beta)=(\S+)$")


def parse(text: str) -> ParsedProgram:
    """Read back a program written by :func:`emit_program` (or :func:`emit_circuit`).

    Gate qubits are register indices.
    """
    n = None
    out = ParsedProgram(0)
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        m = _LAYER.match(line)
        if m:
            out.layers.append(
                {"layer": int(m.group(1)), "part": m.group(2), "angle": float(m.group(4)), "start": len(out.gates)}
            )
            continue
        if line.startswith("//") or line.startswith("OPENQASM") or line.startswith("include") or line.startswith("opaque"):
            continue
        if line.startswith("qreg"):
            n = int(re.search(r"\[(\d+)\]", line).group(1))
            continue
        m = _GATE.match(line)
        if not m:
            raise ValueError(f"cannot parse line: {raw!r}")
        kind, arg, rest = m.groups()
        qs = tuple(int(x) for x in _QUBIT.findall(rest))
        if kind in ("h", "x"):
            out.prep.append((kind, qs[0]))
            continue
        angle = float(arg) if arg is not None else None
        out.gates.append(Gate({"cx": CX, "rz": RZ, "rx": RX, "exch": EXCH}[kind], qs, angle))
    if n is None:
        raise ValueError("missing qreg declaration")
    out.n_qubits = n
    return out
