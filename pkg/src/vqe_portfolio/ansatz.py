"""Parameterized circuit families used by the variational solver.

``two_local``: an RY+RZ rotation layer on every qubit, then L repetitions
of [linear CNOT chain; rotation layer]. 2n(L+1) distinct angles.

``block_ansatz``: layers of two-qubit bricks. Each brick on qubits (a, b)
is RY(a), RY(b), CNOT(a->b), RY(a), RY(b), CNOT(a->b) - four angles and
two CNOTs, enough to steer the pair while staying cheap to reproduce.
Bricks cover even pairs (0,1),(2,3),... then odd pairs (1,2),(3,4),...
within each layer.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from .statevector import Gate, cnot, ry, rz


class AnsatzError(ValueError):
    pass


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...]
    n_params: int

    def __post_init__(self):
        used = set()
        for g in self.gates:
            if not 0 <= g.target < self.n_qubits:
                raise AnsatzError(f"gate target {g.target} out of range")
            if g.control is not None and not 0 <= g.control < self.n_qubits:
                raise AnsatzError(f"gate control {g.control} out of range")
            if g.param_slot is not None:
                if not 0 <= g.param_slot < self.n_params:
                    raise AnsatzError(f"parameter slot {g.param_slot} out of range")
                used.add(g.param_slot)
        if len(used) != self.n_params:
            missing = sorted(set(range(self.n_params)) - used)
            raise AnsatzError(f"unused parameter slots: {missing}")


def two_local(n: int, layers: int) -> Circuit:
    """Rotation layer + L x [CNOT chain; rotation layer]; 2n(L+1) parameters."""
    if n < 2 or layers < 1:
        raise AnsatzError(f"two_local needs n >= 2 and layers >= 1, got n={n}, layers={layers}")
    gates: list[Gate] = []
    slot = 0

    def rotation_layer():
        nonlocal slot
        for q in range(n):
            gates.append(ry(q, slot))
            gates.append(rz(q, slot + 1))
            slot += 2

    rotation_layer()
    for _ in range(layers):
        for q in range(n - 1):
            gates.append(cnot(q, q + 1))
        rotation_layer()
    return Circuit(n_qubits=n, gates=tuple(gates), n_params=slot)


def block_ansatz(n: int, layers: int) -> Circuit:
    """Brick pattern of 4-parameter, 2-CNOT two-qubit blocks; L layers."""
    if n < 2 or layers < 1:
        raise AnsatzError(f"block_ansatz needs n >= 2 and layers >= 1, got n={n}, layers={layers}")
    gates: list[Gate] = []
    slot = 0

    def block(a: int, b: int):
        nonlocal slot
        gates.append(ry(a, slot))
        gates.append(ry(b, slot + 1))
        gates.append(cnot(a, b))
        gates.append(ry(a, slot + 2))
        gates.append(ry(b, slot + 3))
        gates.append(cnot(a, b))
        slot += 4

    for _ in range(layers):
        for a in range(0, n - 1, 2):
            block(a, a + 1)
        for a in range(1, n - 1, 2):
            block(a, a + 1)
    return Circuit(n_qubits=n, gates=tuple(gates), n_params=slot)


ANSATZ_FAMILIES = {"two_local": two_local, "block": block_ansatz}


def build_ansatz(family: str, n: int, layers: int) -> Circuit:
    if family not in ANSATZ_FAMILIES:
        raise AnsatzError(f"unknown ansatz family {family!r}; choose from {sorted(ANSATZ_FAMILIES)}")
    return ANSATZ_FAMILIES[family](n, layers)


def param_count(c: Circuit) -> int:
    return c.n_params


def gates_json(c: Circuit) -> str:
    """JSON gate list for diffing circuit layouts."""
    rows = []
    for g in c.gates:
        row: dict = {"kind": g.kind, "target": g.target}
        if g.control is not None:
            row["control"] = g.control
        if g.param_slot is not None:
            row["param"] = g.param_slot
        rows.append(row)
    return json.dumps({"n_qubits": c.n_qubits, "n_params": c.n_params, "gates": rows}, indent=2)


def circuit_diagram(c: Circuit) -> str:
    """Plain-text wire diagram, one column per gate."""
    lanes = [[] for _ in range(c.n_qubits)]
    for g in c.gates:
        if g.kind == "cnot":
            lo, hi = min(g.control, g.target), max(g.control, g.target)
            width = 3
            for q in range(c.n_qubits):
                if q == g.control:
                    cell = "-o-"
                elif q == g.target:
                    cell = "-X-"
                elif lo < q < hi:
                    cell = "-|-"
                else:
                    cell = "-" * width
                lanes[q].append(cell)
        else:
            label = f"{g.kind.upper()}({g.param_slot})"
            width = len(label)
            for q in range(c.n_qubits):
                lanes[q].append(label if q == g.target else "-" * width)
    return "\n".join(f"q{q}: " + "".join(lanes[q]) for q in range(c.n_qubits))
