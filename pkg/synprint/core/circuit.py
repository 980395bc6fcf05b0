"""
========
Circuits
========

Noise-annotated Clifford circuits over physical qubit indices, and the
:py:class:`SyndromeLayout` that names the syndrome bits a circuit
produces.

Circuits are immutable. Builders in :py:mod:`synprint.codes` emit them
over circuit-local indices ``0..n-1``; :py:func:`Circuit.relabeled`
rewrites indices when a circuit is placed on hardware.
"""

import enum
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Set, Tuple

from synprint.core.types import Bits, Document, Edge


class GateKind(str, enum.Enum):
    H = 'H'
    S = 'S'
    X = 'X'
    Z = 'Z'
    CNOT = 'CNOT'
    MEASURE_Z = 'MEASURE_Z'
    RESET = 'RESET'

    @property
    def arity(self) -> int:
        return 2 if self is GateKind.CNOT else 1

    @property
    def is_unitary(self) -> bool:
        return self not in (GateKind.MEASURE_Z, GateKind.RESET)


SINGLE_QUBIT_GATES = (GateKind.H, GateKind.S, GateKind.X, GateKind.Z)


@dataclass(frozen=True)
class GateOp:
    """One gate application.

    Args:
        kind: The gate.
        targets: Qubit indices; CNOT takes ``(control, target)``.
        duration: Gate duration in seconds. Zero means the backend's
            calibrated duration for ``kind`` is used at run time.
        label: Name of the classical bit written by a ``MEASURE_Z``.
    """
    kind: GateKind
    targets: Tuple[int, ...]
    duration: float = 0.0
    label: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, 'kind', GateKind(self.kind))
        object.__setattr__(self, 'targets', tuple(int(t) for t in self.targets))
        if len(self.targets) != self.kind.arity:
            raise ValueError(
                f'{self.kind.value} takes {self.kind.arity} target(s), '
                f'got {self.targets}')
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(
                f'{self.kind.value} targets must be distinct: {self.targets}')
        if any(t < 0 for t in self.targets):
            raise ValueError(f'negative qubit index in {self.targets}')
        if self.duration < 0:
            raise ValueError(f'negative duration {self.duration}')
        if self.kind is GateKind.MEASURE_Z and not self.label:
            raise ValueError('measurements must carry a bit label')

    def to_dict(self) -> Document:
        document: Document = {
            'kind': self.kind.value,
            'targets': list(self.targets),
            'duration': self.duration,
        }
        if self.label is not None:
            document['label'] = self.label
        return document

    @classmethod
    def from_dict(cls, document: Mapping[str, Any]) -> 'GateOp':
        return cls(
            kind=GateKind(document['kind']),
            targets=tuple(document['targets']),
            duration=float(document.get('duration', 0.0)),
            label=document.get('label'))


@dataclass(frozen=True)
class Circuit:
    """An ordered list of gate applications.

    >>> c = Circuit.from_ops([
    ...     GateOp(GateKind.H, (0,)),
    ...     GateOp(GateKind.CNOT, (0, 1)),
    ...     GateOp(GateKind.MEASURE_Z, (1,), label='m1')])
    >>> c.qubits, c.measurement_labels, c.coupled_pairs()
    ((0, 1), ('m1',), {(0, 1)})
    """
    ops: Tuple[GateOp, ...]
    name: str = ''

    def __post_init__(self) -> None:
        labels = self.measurement_labels
        if len(set(labels)) != len(labels):
            raise ValueError('measurement labels must be unique')

    @classmethod
    def from_ops(cls, ops: Sequence[GateOp], name: str = '') -> 'Circuit':
        return cls(ops=tuple(ops), name=name)

    def __iter__(self) -> Iterator[GateOp]:
        return iter(self.ops)

    def __len__(self) -> int:
        return len(self.ops)

    @property
    def qubits(self) -> Tuple[int, ...]:
        used: Set[int] = set()
        for op in self.ops:
            used.update(op.targets)
        return tuple(sorted(used))

    @property
    def measurement_labels(self) -> Tuple[str, ...]:
        return tuple(
            op.label for op in self.ops
            if op.kind is GateKind.MEASURE_Z and op.label is not None)

    def coupled_pairs(self) -> Set[Edge]:
        """Undirected qubit pairs that share a two-qubit gate."""
        pairs: Set[Edge] = set()
        for op in self.ops:
            if op.kind is GateKind.CNOT:
                a, b = op.targets
                pairs.add((min(a, b), max(a, b)))
        return pairs

    def count(self, kind: GateKind) -> int:
        return sum(1 for op in self.ops if op.kind is kind)

    def relabeled(self, qubit_map: Mapping[int, int]) -> 'Circuit':
        """Rewrite every qubit index through ``qubit_map``.

        Raises:
            ValueError: A used qubit is missing from the map, or two used
                qubits map to the same index.
        """
        missing = [q for q in self.qubits if q not in qubit_map]
        if missing:
            raise ValueError(f'qubits {missing} are not in the mapping')
        images = [qubit_map[q] for q in self.qubits]
        if len(set(images)) != len(images):
            raise ValueError(f'mapping is not injective: {dict(qubit_map)}')
        return Circuit(
            ops=tuple(
                GateOp(
                    kind=op.kind,
                    targets=tuple(qubit_map[t] for t in op.targets),
                    duration=op.duration,
                    label=op.label)
                for op in self.ops),
            name=self.name)

    def to_dict(self) -> Document:
        return {
            'name': self.name,
            'ops': [op.to_dict() for op in self.ops]}

    @classmethod
    def from_dict(cls, document: Mapping[str, Any]) -> 'Circuit':
        return cls(
            ops=tuple(GateOp.from_dict(op) for op in document['ops']),
            name=document.get('name', ''))


class CircuitBuilder:
    """Accumulates ops with short gate methods.

    >>> b = CircuitBuilder()
    >>> _ = b.x(0).cnot(0, 1).measure(1, 'out')
    >>> [op.kind.value for op in b.build().ops]
    ['X', 'CNOT', 'MEASURE_Z']
    """

    def __init__(self) -> None:
        self.ops: List[GateOp] = []

    def gate(self, kind: GateKind, *targets: int, label: Optional[str] = None) -> 'CircuitBuilder':
        self.ops.append(GateOp(kind, tuple(targets), label=label))
        return self

    def h(self, qubit: int) -> 'CircuitBuilder':
        return self.gate(GateKind.H, qubit)

    def s(self, qubit: int) -> 'CircuitBuilder':
        return self.gate(GateKind.S, qubit)

    def x(self, qubit: int) -> 'CircuitBuilder':
        return self.gate(GateKind.X, qubit)

    def z(self, qubit: int) -> 'CircuitBuilder':
        return self.gate(GateKind.Z, qubit)

    def cnot(self, control: int, target: int) -> 'CircuitBuilder':
        return self.gate(GateKind.CNOT, control, target)

    def measure(self, qubit: int, label: str) -> 'CircuitBuilder':
        return self.gate(GateKind.MEASURE_Z, qubit, label=label)

    def reset(self, qubit: int) -> 'CircuitBuilder':
        return self.gate(GateKind.RESET, qubit)

    def build(self, name: str = '') -> Circuit:
        return Circuit.from_ops(self.ops, name=name)


@dataclass(frozen=True)
class SyndromeEntry:
    round: int
    stabilizer: str
    position: int
    measurement: str
    # outcome the bit is compared against, for checks whose first
    # measurement projects rather than reports
    reference: Optional[str] = None


@dataclass(frozen=True)
class SyndromeLayout:
    """Names the syndrome bits of a circuit.

    ``entries[i]`` describes bit ``i`` of the syndrome string: the
    stabilize round it belongs to, the stabilizer it measures and the
    measurement label that produced it. ``data_labels`` lists the final
    data readout, which is not part of the syndrome by default.
    """
    entries: Tuple[SyndromeEntry, ...]
    data_labels: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        positions = [entry.position for entry in self.entries]
        if positions != list(range(len(positions))):
            raise ValueError(
                'syndrome bit positions must be 0..k-1 in order, got '
                f'{positions}')

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def rounds(self) -> int:
        return len({entry.round for entry in self.entries})

    @property
    def measurement_labels(self) -> Tuple[str, ...]:
        return tuple(entry.measurement for entry in self.entries)

    def round_slice(self, round_index: int) -> Tuple[int, ...]:
        return tuple(
            entry.position for entry in self.entries
            if entry.round == round_index)

    def extract(
            self,
            bits: Mapping[str, int],
            include_data: bool = False,
    ) -> Bits:
        """Assemble the syndrome string from a shot's labeled bits.

        An entry with a ``reference`` reports its outcome XOR the
        reference outcome.

        >>> layout = SyndromeLayout((SyndromeEntry(0, 'X0X1', 0, 's', 'e'),))
        >>> layout.extract({'s': 1, 'e': 1}), layout.extract({'s': 1, 'e': 0})
        ('0', '1')
        """
        syndrome = [
            bits[entry.measurement] ^ (bits[entry.reference] if entry.reference else 0)
            for entry in self.entries]
        if include_data:
            syndrome.extend(bits[label] for label in self.data_labels)
        return ''.join('1' if bit else '0' for bit in syndrome)

    def width(self, include_data: bool = False) -> int:
        return len(self.entries) + (len(self.data_labels) if include_data else 0)

    def to_dict(self) -> Document:
        return {
            'layout': [
                {
                    'round': entry.round,
                    'stabilizer': entry.stabilizer,
                    'position': entry.position,
                    'measurement': entry.measurement,
                    'reference': entry.reference,
                }
                for entry in self.entries],
            'data': list(self.data_labels)}

    @classmethod
    def from_dict(cls, document: Mapping[str, Any]) -> 'SyndromeLayout':
        return cls(
            entries=tuple(
                SyndromeEntry(
                    round=int(entry['round']),
                    stabilizer=entry['stabilizer'],
                    position=int(entry['position']),
                    measurement=entry['measurement'],
                    reference=entry.get('reference'))
                for entry in document['layout']),
            data_labels=tuple(document.get('data', ())))


def circuit_document(circuit: Circuit, layout: SyndromeLayout) -> Dict[str, Any]:
    """The provenance document: ops array and layout array."""
    document = circuit.to_dict()
    document.update(layout.to_dict())
    return document


def test_gate_op_arity() -> None:
    for bad in [
            dict(kind=GateKind.CNOT, targets=(0,)),
            dict(kind=GateKind.CNOT, targets=(1, 1)),
            dict(kind=GateKind.H, targets=(0, 1)),
            dict(kind=GateKind.X, targets=(0,), duration=-1.0),
            dict(kind=GateKind.MEASURE_Z, targets=(0,))]:
        try:
            GateOp(**bad)  # type: ignore
        except ValueError:
            continue
        raise AssertionError(f'accepted invalid op {bad}')


def test_relabel_round_trip() -> None:
    circuit = (
        CircuitBuilder().h(0).cnot(0, 2).measure(2, 'a').build('bell'))
    forward = {0: 7, 2: 3}
    back = {7: 0, 3: 2}
    moved = circuit.relabeled(forward)
    assert moved.qubits == (3, 7)
    assert moved.relabeled(back) == circuit


def test_circuit_document_round_trip() -> None:
    circuit = CircuitBuilder().x(1).cnot(1, 0).measure(0, 's0').build('t')
    layout = SyndromeLayout(
        entries=(SyndromeEntry(0, 'Z0Z1', 0, 's0'),))
    document = circuit_document(circuit, layout)
    assert Circuit.from_dict(document) == circuit
    assert SyndromeLayout.from_dict(document) == layout
    assert layout.extract({'s0': 1}) == '1'
