"""
=================
Stabilizer Codes
=================

Base class for the CSS codes and the assembly of their circuits.

A code declares X-type and Z-type stabilizer generators and one logical
X and Z operator over its data qubits ``0..n-1``. Everything else is
derived here:

* an encoder for ``|0>``, ``|1>`` and ``|+>``, either a unitary
  fan-out or, for codes that set ``encode_by_measurement``, one
  unrecorded round of checks on a product state,
* stabilize rounds measuring every generator with its own ancilla,
* single-fault lookup decoding of syndromes and of final data readout.

Circuits place the data of logical qubit ``j`` at ``j*n .. j*n+n-1`` and
put all ancillas after the data, one per generator per logical qubit.

>>> spec = LogicalCircuitSpec(
...     code=CodeSpec(CodeFamily.REPETITION),
...     initial=(LogicalState.ZERO,),
...     logical_gates=(LogicalGate('X', (0,)),),
...     stabilize_rounds=1)
>>> circuit, layout = build_circuit(spec)
>>> circuit.qubits, layout.measurement_labels
((0, 1, 2, 3, 4), ('s0_0_0', 's0_0_1'))
"""

import enum
import functools
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Set, Tuple, Type, Union

import numpy as np

from synprint.core.circuit import (
    Circuit, CircuitBuilder, GateKind, GateOp, SyndromeEntry, SyndromeLayout)
from synprint.core.registry import code_registry
from synprint.core.simulator import PauliFault
from synprint.core.types import Bits, Document
from synprint.library.dict_utils import merge_defaults
from synprint.library.gf2 import gf2_rref
from synprint.library.pauli import (
    PauliString, all_commute, independent, single_qubit_pauli, syndrome_of)


class CodeFamily(str, enum.Enum):
    REPETITION = 'Repetition'
    SHOR = 'Shor'
    STEANE = 'Steane'
    SURFACE = 'Surface'


class LogicalState(str, enum.Enum):
    ZERO = 'Zero'
    ONE = 'One'
    PLUS = 'Plus'

    @classmethod
    def parse(cls, value: str) -> 'LogicalState':
        aliases = {'0': cls.ZERO, '1': cls.ONE, '+': cls.PLUS}
        if value in aliases:
            return aliases[value]
        return cls(value)


@dataclass(frozen=True)
class CodeSpec:
    family: CodeFamily
    distance: int = 3
    logical_qubits: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, 'family', CodeFamily(self.family))
        if self.distance < 3 or self.distance % 2 == 0:
            raise ValueError(
                f'distance must be an odd integer >= 3, got {self.distance}')
        if self.family is not CodeFamily.SURFACE and self.distance != 3:
            raise ValueError(
                f'{self.family.value} code has fixed distance 3, '
                f'got {self.distance}')
        if self.logical_qubits < 1:
            raise ValueError(
                f'need at least one logical qubit, got {self.logical_qubits}')

    @property
    def key(self) -> str:
        """Short name, e.g. ``Surface-d5``."""
        if self.family is CodeFamily.SURFACE:
            return f'{self.family.value}-d{self.distance}'
        return self.family.value

    def to_dict(self) -> Document:
        return {
            'family': self.family.value,
            'distance': self.distance,
            'logical_qubits': self.logical_qubits}

    @classmethod
    def from_dict(cls, document: Mapping[str, Any]) -> 'CodeSpec':
        return cls(
            family=CodeFamily(document['family']),
            distance=int(document.get('distance', 3)),
            logical_qubits=int(document.get('logical_qubits', 1)))


@dataclass(frozen=True)
class LogicalGate:
    name: str
    operands: Tuple[int, ...]

    def __post_init__(self) -> None:
        arity = {'X': 1, 'CNOT': 2}
        if self.name not in arity:
            raise ValueError(f'unknown logical gate {self.name!r}')
        object.__setattr__(self, 'operands', tuple(int(o) for o in self.operands))
        if len(self.operands) != arity[self.name]:
            raise ValueError(
                f'logical {self.name} takes {arity[self.name]} operand(s), '
                f'got {self.operands}')
        if len(set(self.operands)) != len(self.operands):
            raise ValueError(f'logical {self.name} operands must differ')

    @classmethod
    def parse(cls, text: str) -> 'LogicalGate':
        """Parse ``'X(0)'`` or ``'CNOT(0,1)'``."""
        name, _, rest = text.replace(' ', '').partition('(')
        operands = tuple(int(o) for o in rest.rstrip(')').split(',') if o)
        return cls(name.upper(), operands)

    def __str__(self) -> str:
        return f'{self.name}({",".join(str(o) for o in self.operands)})'


@dataclass(frozen=True)
class LogicalCircuitSpec:
    code: CodeSpec
    initial: Tuple[LogicalState, ...]
    logical_gates: Tuple[LogicalGate, ...] = field(default_factory=tuple)
    stabilize_rounds: int = 2
    measure_data: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(
            self, 'initial', tuple(LogicalState(s) for s in self.initial))
        object.__setattr__(self, 'logical_gates', tuple(self.logical_gates))
        if len(self.initial) != self.code.logical_qubits:
            raise ValueError(
                f'{len(self.initial)} initial states for '
                f'{self.code.logical_qubits} logical qubit(s)')
        if self.stabilize_rounds < 1:
            raise ValueError(
                f'need at least one stabilize round, got {self.stabilize_rounds}')
        for gate in self.logical_gates:
            if any(o >= self.code.logical_qubits for o in gate.operands):
                raise ValueError(
                    f'{gate} addresses a logical qubit outside '
                    f'0..{self.code.logical_qubits - 1}')

    @property
    def name(self) -> str:
        states = ''.join(
            {'Zero': '0', 'One': '1', 'Plus': '+'}[s.value] for s in self.initial)
        gates = '-'.join(str(g) for g in self.logical_gates) or 'id'
        return f'{self.code.key}|{states}>{gates}r{self.stabilize_rounds}'

    def to_dict(self) -> Document:
        return {
            'code': self.code.to_dict(),
            'initial': [s.value for s in self.initial],
            'logical_gates': [str(g) for g in self.logical_gates],
            'stabilize_rounds': self.stabilize_rounds,
            'measure_data': self.measure_data}

    @classmethod
    def from_dict(cls, document: Mapping[str, Any]) -> 'LogicalCircuitSpec':
        code = CodeSpec.from_dict(document['code'])
        initial = document.get('initial', ['Zero'] * code.logical_qubits)
        return cls(
            code=code,
            initial=tuple(LogicalState.parse(s) for s in initial),
            logical_gates=tuple(
                LogicalGate.parse(g) for g in document.get('logical_gates', [])),
            stabilize_rounds=int(document.get('stabilize_rounds', 2)),
            measure_data=bool(document.get('measure_data', True)))


class Unclassified:
    """Result of decoding a syndrome no single fault explains."""

    def __repr__(self) -> str:
        return 'UNCLASSIFIED'


UNCLASSIFIED = Unclassified()

Decoded = Union[None, PauliFault, Unclassified]


class LookupDecoder:
    """Syndrome to fault table over every single-qubit X, Y and Z fault.

    The first fault in (qubit, X/Y/Z) order wins when several share a
    syndrome; for distance-3 codes such faults differ by a stabilizer.
    """

    def __init__(
            self,
            generators: Sequence[PauliString],
            letters: str = 'XYZ',
    ) -> None:
        self.generators = list(generators)
        n = self.generators[0].n
        self.table: Dict[Tuple[int, ...], Optional[PauliFault]] = {
            tuple([0] * len(self.generators)): None}
        for qubit in range(n):
            for letter in letters:
                syndrome = syndrome_of(
                    single_qubit_pauli(n, qubit, letter), self.generators)
                self.table.setdefault(syndrome, PauliFault(qubit, letter))

    def decode(self, syndrome: Union[Bits, Sequence[int]]) -> Decoded:
        bits = tuple(int(b) for b in syndrome)
        if len(bits) != len(self.generators):
            raise ValueError(
                f'syndrome has {len(bits)} bits, expected '
                f'{len(self.generators)}')
        if bits in self.table:
            return self.table[bits]
        return UNCLASSIFIED


class Code:
    """A CSS stabilizer code over data qubits ``0..num_data-1``."""

    name = ''
    defaults: Dict[str, Any] = {'distance': 3}
    transversal_cnot = True
    # prepare the code state by measuring every generator once
    encode_by_measurement = False

    def __init__(self, parameters: Optional[dict] = None) -> None:
        self.parameters = merge_defaults(self.defaults, parameters)
        self.distance = int(self.parameters['distance'])

    @property
    def num_data(self) -> int:
        raise NotImplementedError(f'{self.name} does not define num_data')

    def x_generators(self) -> List[PauliString]:
        return []

    def z_generators(self) -> List[PauliString]:
        return []

    def logical_x(self) -> PauliString:
        raise NotImplementedError(f'{self.name} does not define logical X')

    def logical_z(self) -> PauliString:
        raise NotImplementedError(f'{self.name} does not define logical Z')

    def stabilizer_generators(self) -> List[PauliString]:
        """Z-type generators first, then X-type."""
        return self.z_generators() + self.x_generators()

    def check(self) -> None:
        """Assert the generators and logicals form a valid code.

        Raises:
            AssertionError: Generators fail to commute or to be
                independent, or the logical pair is inconsistent.
        """
        generators = self.stabilizer_generators()
        if len(generators) != self.num_data - 1:
            raise AssertionError(
                f'{self.name}: {len(generators)} generators for '
                f'{self.num_data} data qubits')
        if not all_commute(generators) or not independent(generators):
            raise AssertionError(f'{self.name}: invalid generator set')
        lx, lz = self.logical_x(), self.logical_z()
        if not all(lx.commutes(g) and lz.commutes(g) for g in generators):
            raise AssertionError(f'{self.name}: logicals leave the normalizer')
        if lx.commutes(lz):
            raise AssertionError(f'{self.name}: logical X and Z commute')

    def encoder(self, state: LogicalState) -> List[GateOp]:
        """Ops preparing ``state`` on data qubits starting from ``|0..0>``.

        Row-reduce the X-type generators (plus logical X for ``|+>``);
        each row gets a Hadamard on its pivot and CNOTs from the pivot
        onto the rest of its support.
        """
        rows = [g.x for g in self.x_generators()]
        if state is LogicalState.PLUS:
            rows.append(self.logical_x().x)
        ops: List[GateOp] = []
        if rows:
            reduced, pivots = gf2_rref(np.array(rows, dtype=np.uint8))
            for row, pivot in zip(reduced, pivots):
                ops.append(GateOp(GateKind.H, (pivot,)))
                for target in np.nonzero(row)[0]:
                    if int(target) != pivot:
                        ops.append(GateOp(GateKind.CNOT, (pivot, int(target))))
        if state is LogicalState.ONE:
            ops.extend(
                GateOp(GateKind.X, (q,)) for q in self.logical_x().x_support)
        return ops

    @functools.cached_property
    def decoder(self) -> LookupDecoder:
        return LookupDecoder(self.stabilizer_generators())

    @functools.cached_property
    def readout_decoder(self) -> LookupDecoder:
        """Corrects bit flips in a Z-basis data readout."""
        return LookupDecoder(self.z_generators(), letters='X')

    def logical_readout(self, data_bits: Sequence[int]) -> int:
        """Logical Z value of a Z-basis readout after single-flip correction."""
        bits = [int(b) & 1 for b in data_bits]
        if len(bits) != self.num_data:
            raise ValueError(
                f'{len(bits)} data bits for {self.num_data} data qubits')
        parities = tuple(
            sum(bits[q] for q in g.z_support) % 2 for g in self.z_generators())
        if self.z_generators():
            flip = self.readout_decoder.decode(parities)
            if isinstance(flip, PauliFault):
                bits[flip.qubit] ^= 1
        return sum(bits[q] for q in self.logical_z().z_support) % 2


def get_code(spec: CodeSpec) -> Code:
    return _code_instance(spec.family.value, spec.distance)


@functools.lru_cache(maxsize=None)
def _code_instance(family: str, distance: int) -> Code:
    code_class: Type[Code] = code_registry.require(family)
    return code_class({'distance': distance})


def stabilizer_generators(code: CodeSpec) -> List[PauliString]:
    return get_code(code).stabilizer_generators()


def decode_single_error(code: CodeSpec, syndrome: Union[Bits, Sequence[int]]) -> Decoded:
    """Single-qubit fault explaining one round of one logical qubit's
    syndrome: None for the zero syndrome, or ``UNCLASSIFIED``."""
    return get_code(code).decoder.decode(syndrome)


class CircuitAssembler:
    """Builds a logical circuit step by step.

    :py:func:`build_circuit` drives the steps in order; tests call them
    directly to place faults between rounds.
    """

    def __init__(self, spec: LogicalCircuitSpec) -> None:
        self.spec = spec
        self.code = get_code(spec.code)
        self.generators = self.code.stabilizer_generators()
        self.builder = CircuitBuilder()
        self.entries: List[SyndromeEntry] = []
        self.data_labels: List[str] = []
        self.references: Dict[Tuple[int, int], str] = {}
        self.measured: Set[int] = set()
        self.rounds_done = 0

    def data(self, logical: int, qubit: int) -> int:
        return logical * self.code.num_data + qubit

    def ancilla(self, logical: int, generator: int) -> int:
        n_logical = self.spec.code.logical_qubits
        return (
            n_logical * self.code.num_data
            + logical * len(self.generators) + generator)

    def _emit(self, ops: Sequence[GateOp], logical: int) -> None:
        for op in ops:
            self.builder.gate(
                op.kind, *(self.data(logical, t) for t in op.targets))

    def encode(self) -> None:
        for logical, state in enumerate(self.spec.initial):
            self._emit(self.code.encoder(state), logical)
        if not self.code.encode_by_measurement:
            return
        for logical, state in enumerate(self.spec.initial):
            for g, generator in enumerate(self.generators):
                label = f'e_{logical}_{g}'
                self._measure_generator(logical, g, label)
                # the checks that do not stabilize the product state come
                # out random and fix the frame of every later round
                if generator.is_x_type != (state is LogicalState.PLUS):
                    self.references[(logical, g)] = label
            if state is LogicalState.ONE:
                for q in self.code.logical_x().x_support:
                    self.builder.x(self.data(logical, q))

    def logical_gate(self, gate: LogicalGate) -> None:
        if gate.name == 'X':
            (logical,) = gate.operands
            for q in self.code.logical_x().x_support:
                self.builder.x(self.data(logical, q))
        elif gate.name == 'CNOT':
            if not self.code.transversal_cnot:
                raise ValueError(
                    f'logical CNOT is not supported on the {self.code.name} code')
            control, target = gate.operands
            for q in range(self.code.num_data):
                self.builder.cnot(self.data(control, q), self.data(target, q))

    def _measure_generator(self, logical: int, g: int, label: str) -> None:
        generator = self.generators[g]
        anc = self.ancilla(logical, g)
        if anc in self.measured:
            self.builder.reset(anc)
        if generator.is_z_type:
            for q in generator.z_support:
                self.builder.cnot(self.data(logical, q), anc)
        elif generator.is_x_type:
            self.builder.h(anc)
            for q in generator.x_support:
                self.builder.cnot(anc, self.data(logical, q))
            self.builder.h(anc)
        else:
            raise ValueError(
                f'generator {generator.label} is neither X- nor Z-type')
        self.builder.measure(anc, label)
        self.measured.add(anc)

    def stabilize(self) -> None:
        """One round: every generator of every logical qubit, in order."""
        r = self.rounds_done
        for logical in range(self.spec.code.logical_qubits):
            for g, generator in enumerate(self.generators):
                label = f's{r}_{logical}_{g}'
                self._measure_generator(logical, g, label)
                self.entries.append(SyndromeEntry(
                    round=r,
                    stabilizer=f'L{logical}:{generator.label}',
                    position=len(self.entries),
                    measurement=label,
                    reference=self.references.get((logical, g))))
        self.rounds_done += 1

    def measure_data(self) -> None:
        for logical in range(self.spec.code.logical_qubits):
            for q in range(self.code.num_data):
                label = f'd{logical}_{q}'
                self.builder.measure(self.data(logical, q), label)
                self.data_labels.append(label)

    def build(self) -> Tuple[Circuit, SyndromeLayout]:
        layout = SyndromeLayout(
            entries=tuple(self.entries), data_labels=tuple(self.data_labels))
        return self.builder.build(self.spec.name), layout


def build_circuit(spec: LogicalCircuitSpec) -> Tuple[Circuit, SyndromeLayout]:
    """Encode, stabilize, apply the logical gates, stabilize again.

    With two or more rounds the first round precedes the logical gates
    and the rest follow them; a single round follows the gates.

    Raises:
        ValueError: The code does not support a requested logical gate.
    """
    assembler = CircuitAssembler(spec)
    for gate in spec.logical_gates:
        if gate.name == 'CNOT' and not assembler.code.transversal_cnot:
            raise ValueError(
                f'logical CNOT is not supported on the '
                f'{assembler.code.name} code')
    assembler.encode()
    if spec.stabilize_rounds > 1:
        assembler.stabilize()
    for gate in spec.logical_gates:
        assembler.logical_gate(gate)
    while assembler.rounds_done < spec.stabilize_rounds:
        assembler.stabilize()
    if spec.measure_data:
        assembler.measure_data()
    return assembler.build()


def decode_logical(
        spec: LogicalCircuitSpec,
        bits: Mapping[str, int],
) -> Tuple[int, ...]:
    """Logical Z readout of every logical qubit from a shot's data bits.

    Raises:
        ValueError: The circuit did not measure its data qubits.
    """
    if not spec.measure_data:
        raise ValueError('circuit does not measure data qubits')
    code = get_code(spec.code)
    return tuple(
        code.logical_readout(
            [bits[f'd{logical}_{q}'] for q in range(code.num_data)])
        for logical in range(spec.code.logical_qubits))


def round_syndromes(layout: SyndromeLayout, syndrome: Bits, logical: int = 0) -> List[Bits]:
    """Split a syndrome string into per-round strings of one logical qubit."""
    prefix = f'L{logical}:'
    out = []
    for r in range(layout.rounds):
        out.append(''.join(
            syndrome[p] for p in layout.round_slice(r)
            if layout.entries[p].stabilizer.startswith(prefix)))
    return out
