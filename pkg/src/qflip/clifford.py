"""The 24-element single-qubit Clifford group and random identity circuits.

The group is generated by closure from the Hadamard and phase gates,
quotienting global phase, with elements numbered in order of first
appearance. Gate ids index a fixed canonical table; composition and
inversion are table lookups. Circuits are m random layers of per-qubit
gates followed by one inverse layer that undoes each qubit's sequence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

import numpy as np

__all__ = [
    "GROUP_ORDER",
    "IDENTITY_ID",
    "HADAMARD_ID",
    "PHASE_ID",
    "compose",
    "inverse",
    "unitary",
    "sample_identity_circuit",
    "empty_circuit",
    "IdentityCircuit",
    "circuit_to_json",
    "circuit_from_json",
    "write_circuits",
    "read_circuits",
]

GROUP_ORDER = 24

_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_PHASE = np.array([[1, 0], [0, 1j]], dtype=complex)


def _canonical(matrix: np.ndarray) -> np.ndarray:
    """Quotient global phase: scale so the first nonzero entry (row-major)
    is real positive."""
    flat = matrix.reshape(-1)
    idx = int(np.argmax(np.abs(flat) > 1e-9))
    entry = flat[idx]
    return matrix * (abs(entry) / entry)


def _key(matrix: np.ndarray) -> bytes:
    # nonzero Clifford entries are >= 1/2 in magnitude and distinct values
    # differ by >= ~0.29, so 6 decimals absorbs all float drift;
    # +0.0 normalizes -0.0 so keys are unique
    return (np.round(_canonical(matrix), 6) + 0.0).tobytes()


def _build_group() -> tuple[list[np.ndarray], dict[bytes, int]]:
    elements: list[np.ndarray] = [np.eye(2, dtype=complex)]
    index = {_key(elements[0]): 0}
    frontier = 0
    while frontier < len(elements):
        current = elements[frontier]
        frontier += 1
        for generator in (_HADAMARD, _PHASE):
            product = _canonical(current @ generator)
            key = _key(product)
            if key not in index:
                index[key] = len(elements)
                elements.append(product)
    if len(elements) != GROUP_ORDER:
        raise RuntimeError(f"group closure produced {len(elements)} elements")
    return elements, index


_ELEMENTS, _INDEX = _build_group()

IDENTITY_ID = 0
HADAMARD_ID = _INDEX[_key(_HADAMARD)]
PHASE_ID = _INDEX[_key(_PHASE)]


def _build_tables() -> tuple[np.ndarray, np.ndarray]:
    compose_table = np.empty((GROUP_ORDER, GROUP_ORDER), dtype=np.int8)
    for g in range(GROUP_ORDER):
        for h in range(GROUP_ORDER):
            key = _key(_ELEMENTS[g] @ _ELEMENTS[h])
            compose_table[g, h] = _INDEX[key]
    inverse_table = np.empty(GROUP_ORDER, dtype=np.int8)
    for g in range(GROUP_ORDER):
        matches = np.nonzero(compose_table[g] == IDENTITY_ID)[0]
        inverse_table[g] = matches[0]
    return compose_table, inverse_table


_COMPOSE, _INVERSE = _build_tables()


def _check_id(gate_id: int) -> int:
    gate_id = int(gate_id)
    if not 0 <= gate_id < GROUP_ORDER:
        raise ValueError(f"gate id {gate_id} out of range [0, {GROUP_ORDER})")
    return gate_id


def compose(g: int, h: int) -> int:
    """Group product g . h (h acts first on states)."""
    return int(_COMPOSE[_check_id(g), _check_id(h)])


def inverse(g: int) -> int:
    """The id satisfying compose(g, inverse(g)) == IDENTITY_ID."""
    return int(_INVERSE[_check_id(g)])


def unitary(gate_id: int) -> np.ndarray:
    """Canonical 2x2 unitary for a gate id (phase-normalized, read-only copy)."""
    return _ELEMENTS[_check_id(gate_id)].copy()


@dataclass(frozen=True)
class IdentityCircuit:
    """m random single-qubit Clifford layers plus one per-qubit inverse layer.

    layers[t][q] is the gate on qubit q at time step t; inverse_layer[q]
    undoes qubit q's whole sequence, so the net circuit is the identity.
    """

    n: int
    depth: int
    layers: tuple[tuple[int, ...], ...]
    inverse_layer: tuple[int, ...]
    seed: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if len(self.layers) != self.depth:
            raise ValueError("layer count does not match depth")
        if any(len(layer) != self.n for layer in self.layers):
            raise ValueError("layer width does not match qubit count")
        if len(self.inverse_layer) != self.n:
            raise ValueError("inverse layer width does not match qubit count")

    def qubit_sequence(self, qubit: int) -> list[int]:
        """Time-ordered gate ids on one qubit, inverse gate last."""
        seq = [layer[qubit] for layer in self.layers]
        seq.append(self.inverse_layer[qubit])
        return seq


def sample_identity_circuit(
    n: int, depth: int, rng: np.random.Generator, seed: int | None = None
) -> IdentityCircuit:
    """Draw m*n gates uniformly and append the per-qubit inverse layer."""
    if n < 1:
        raise ValueError("need at least one qubit")
    if depth < 1:
        raise ValueError("depth must be >= 1 (use empty_circuit for depth 0)")
    grid = rng.integers(0, GROUP_ORDER, size=(depth, n))
    inverse_layer = []
    for q in range(n):
        net = IDENTITY_ID
        for t in range(depth):
            net = compose(int(grid[t, q]), net)
        inverse_layer.append(inverse(net))
    return IdentityCircuit(
        n=n,
        depth=depth,
        layers=tuple(tuple(int(g) for g in row) for row in grid),
        inverse_layer=tuple(inverse_layer),
        seed=seed,
    )


def empty_circuit(n: int) -> IdentityCircuit:
    """The gate-free depth-0 circuit (prepare and immediately measure)."""
    if n < 1:
        raise ValueError("need at least one qubit")
    return IdentityCircuit(n=n, depth=0, layers=(), inverse_layer=(IDENTITY_ID,) * n)


def circuit_to_json(circuit: IdentityCircuit) -> str:
    record = {
        "n": circuit.n,
        "depth": circuit.depth,
        "layers": [list(layer) for layer in circuit.layers],
        "inverse": list(circuit.inverse_layer),
        "seed": circuit.seed,
    }
    return json.dumps(record, separators=(",", ":"))


def circuit_from_json(line: str) -> IdentityCircuit:
    record = json.loads(line)
    return IdentityCircuit(
        n=record["n"],
        depth=record["depth"],
        layers=tuple(tuple(layer) for layer in record["layers"]),
        inverse_layer=tuple(record["inverse"]),
        seed=record.get("seed"),
    )


def write_circuits(circuits: Iterable[IdentityCircuit], stream: IO[str]) -> None:
    for circuit in circuits:
        stream.write(circuit_to_json(circuit) + "\n")


def read_circuits(stream: IO[str]) -> Iterator[IdentityCircuit]:
    for line in stream:
        line = line.strip()
        if line:
            yield circuit_from_json(line)
