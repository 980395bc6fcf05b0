from typing import List

import pytest

from synprint.codes.code import (
    CircuitAssembler,
    CodeFamily,
    CodeSpec,
    LogicalCircuitSpec,
    LogicalGate,
    LogicalState,
    UNCLASSIFIED,
    build_circuit,
    decode_logical,
    decode_single_error,
    get_code,
    round_syndromes,
    stabilizer_generators,
)
from synprint.core.circuit import circuit_document, Circuit, SyndromeLayout
from synprint.core.simulator import NOISELESS, PauliFault, run_shot
from synprint.library.gf2 import gf2_rank
from synprint.library.pauli import (
    all_commute, single_qubit_pauli, symplectic_matrix, syndrome_of)
from synprint.library.topology import grid, is_executable, plan_mappings, remap
from synprint.library.seeding import stream

CODES = [
    CodeSpec(CodeFamily.REPETITION),
    CodeSpec(CodeFamily.SHOR),
    CodeSpec(CodeFamily.STEANE),
    CodeSpec(CodeFamily.SURFACE, distance=3),
]


def syndrome(circuit: Circuit, layout: SyndromeLayout, seed: int) -> str:
    outcome = run_shot(circuit, NOISELESS, stream(seed))
    return layout.extract(outcome.bits)


def test_generator_sets() -> None:
    assert [g.label for g in stabilizer_generators(CODES[0])] == ['ZZI', 'IZZ']
    for spec in CODES:
        code = get_code(spec)
        generators = stabilizer_generators(spec)
        assert all_commute(generators)
        assert gf2_rank(symplectic_matrix(generators)) == len(generators)
        assert len(generators) == code.num_data - 1
    steane = stabilizer_generators(CODES[2])
    assert sum(g.is_x_type for g in steane) == 3
    assert sum(g.is_z_type for g in steane) == 3


def test_code_spec_validation() -> None:
    with pytest.raises(ValueError):
        CodeSpec(CodeFamily.SURFACE, distance=4)
    with pytest.raises(ValueError):
        CodeSpec(CodeFamily.STEANE, distance=5)
    with pytest.raises(ValueError):
        LogicalCircuitSpec(
            code=CodeSpec(CodeFamily.STEANE),
            initial=(LogicalState.ZERO,),
            logical_gates=(LogicalGate('X', (1,)),))


def test_repetition_matches_bit_flip_layout() -> None:
    spec = LogicalCircuitSpec(
        code=CODES[0],
        initial=(LogicalState.ZERO,),
        logical_gates=(LogicalGate('X', (0,)),),
        stabilize_rounds=1,
        measure_data=False)
    circuit, layout = build_circuit(spec)
    assert circuit.qubits == (0, 1, 2, 3, 4)
    assert len(layout) == 2
    assert circuit.coupled_pairs() == {(0, 3), (1, 3), (1, 4), (2, 4)}
    assert syndrome(circuit, layout, 0) == '00'


def test_repetition_lookup() -> None:
    assert decode_single_error(CODES[0], '10') == PauliFault(0, 'X')
    assert decode_single_error(CODES[0], '00') is None


def test_steane_two_logical_layout() -> None:
    spec = LogicalCircuitSpec(
        code=CodeSpec(CodeFamily.STEANE, logical_qubits=2),
        initial=(LogicalState.ONE, LogicalState.ZERO),
        logical_gates=(LogicalGate('CNOT', (0, 1)),),
        stabilize_rounds=1)
    circuit, layout = build_circuit(spec)
    assert len(layout.round_slice(0)) == 12
    assert len(layout.data_labels) == 14
    assert len(circuit.qubits) == 26


def test_surface_rounds() -> None:
    spec = LogicalCircuitSpec(
        code=CODES[3], initial=(LogicalState.ZERO,), stabilize_rounds=2)
    circuit, layout = build_circuit(spec)
    assert [len(layout.round_slice(r)) for r in range(2)] == [8, 8]
    assert len(circuit.qubits) == 17


def test_surface_places_on_grid() -> None:
    host = grid(8, 8)
    for state in LogicalState:
        spec = LogicalCircuitSpec(
            code=CODES[3],
            initial=(state,),
            logical_gates=(LogicalGate('X', (0,)),))
        circuit, _ = build_circuit(spec)
        for plan, k in (('trivial', 1), ('random', 4)):
            mappings = plan_mappings(circuit, host, plan, k, stream(11, plan))
            assert len(mappings) == k
            assert len({m.image for m in mappings}) == k
            for mapping in mappings:
                assert is_executable(circuit, mapping, host), (state, plan)


def test_remap_keeps_noiseless_shots() -> None:
    host = grid(8, 8)
    spec = LogicalCircuitSpec(
        code=CODES[3],
        initial=(LogicalState.PLUS,),
        logical_gates=(LogicalGate('X', (0,)),))
    circuit, layout = build_circuit(spec)
    first, second = plan_mappings(circuit, host, 'random', 2, stream(12))
    placed = circuit.relabeled(first.as_dict())
    moved = remap(placed, first, second, host)
    assert set(moved.qubits) == set(second.qubits)
    for seed in range(3):
        before = run_shot(placed, NOISELESS, stream(seed)).bits
        after = run_shot(moved, NOISELESS, stream(seed)).bits
        assert before == after
        assert set(layout.extract(after)) == {'0'}


def test_surface_encoding_round_is_not_recorded() -> None:
    spec = LogicalCircuitSpec(
        code=CODES[3], initial=(LogicalState.ZERO,), stabilize_rounds=1)
    circuit, layout = build_circuit(spec)
    labels = [op.label for op in circuit.ops if op.label]
    assert [label for label in labels if label.startswith('e_')] == [
        f'e_0_{g}' for g in range(8)]
    assert all(label.startswith('s0_') for label in layout.measurement_labels)
    x_type = [g.is_x_type for g in stabilizer_generators(CODES[3])]
    assert [entry.reference is not None for entry in layout.entries] == x_type


def test_surface_cnot_is_unsupported() -> None:
    spec = LogicalCircuitSpec(
        code=CodeSpec(CodeFamily.SURFACE, distance=3, logical_qubits=2),
        initial=(LogicalState.ONE, LogicalState.ZERO),
        logical_gates=(LogicalGate('CNOT', (0, 1)),))
    with pytest.raises(ValueError):
        build_circuit(spec)


def test_single_faults_between_rounds() -> None:
    for spec in CODES:
        code = get_code(spec)
        generators = code.stabilizer_generators()
        logical = LogicalCircuitSpec(
            code=spec, initial=(LogicalState.ZERO,), measure_data=False)
        for qubit in range(code.num_data):
            for letter in 'XYZ':
                assembler = CircuitAssembler(logical)
                assembler.encode()
                assembler.stabilize()
                if letter in 'XY':
                    assembler.builder.x(qubit)
                if letter in 'YZ':
                    assembler.builder.z(qubit)
                assembler.stabilize()
                circuit, layout = assembler.build()
                first, second = round_syndromes(
                    layout, syndrome(circuit, layout, qubit))
                fault = single_qubit_pauli(code.num_data, qubit, letter)
                expected = ''.join(
                    str(b) for b in syndrome_of(fault, generators))
                assert first == '0' * len(generators)
                assert second == expected, (spec, qubit, letter)

                decoded = decode_single_error(spec, second)
                assert isinstance(decoded, PauliFault)
                residual = fault * single_qubit_pauli(
                    code.num_data, decoded.qubit, decoded.pauli)
                assert not any(syndrome_of(residual, generators))
                assert residual.commutes(code.logical_x())
                assert residual.commutes(code.logical_z())


def test_steane_faults_are_distinguishable() -> None:
    spec = CODES[2]
    generators = stabilizer_generators(spec)
    seen = set()
    for qubit in range(7):
        for letter in 'XYZ':
            fault = single_qubit_pauli(7, qubit, letter)
            bits = syndrome_of(fault, generators)
            assert any(bits)
            seen.add(bits)
            assert decode_single_error(spec, bits) == PauliFault(qubit, letter)
    assert len(seen) == 21


def test_multi_error_syndrome_is_unclassified() -> None:
    spec = CODES[3]
    n_generators = len(stabilizer_generators(spec))
    decoded = [
        decode_single_error(spec, format(value, f'0{n_generators}b'))
        for value in range(2 ** n_generators)]
    assert UNCLASSIFIED in decoded
    with pytest.raises(ValueError):
        decode_single_error(spec, '101')


def test_noiseless_syndromes_are_zero() -> None:
    for spec in CODES:
        for state in LogicalState:
            logical = LogicalCircuitSpec(code=spec, initial=(state,))
            circuit, layout = build_circuit(logical)
            for seed in range(3):
                assert set(syndrome(circuit, layout, seed)) == {'0'}


def test_logical_x_flips_readout() -> None:
    for spec in CODES:
        logical = LogicalCircuitSpec(
            code=spec,
            initial=(LogicalState.ZERO,),
            logical_gates=(LogicalGate('X', (0,)),))
        circuit, _ = build_circuit(logical)
        for seed in range(3):
            bits = run_shot(circuit, NOISELESS, stream(seed)).bits
            assert decode_logical(logical, bits) == (1,)


def test_logical_cnot() -> None:
    for family in (CodeFamily.REPETITION, CodeFamily.SHOR, CodeFamily.STEANE):
        logical = LogicalCircuitSpec(
            code=CodeSpec(family, logical_qubits=2),
            initial=(LogicalState.ONE, LogicalState.ZERO),
            logical_gates=(LogicalGate('CNOT', (0, 1)),))
        circuit, layout = build_circuit(logical)
        bits = run_shot(circuit, NOISELESS, stream(1)).bits
        assert decode_logical(logical, bits) == (1, 1)
        assert set(layout.extract(bits)) == {'0'}


def test_layout_is_stable() -> None:
    logical = LogicalCircuitSpec(code=CODES[1], initial=(LogicalState.PLUS,))
    first: List = list(build_circuit(logical))
    second: List = list(build_circuit(logical))
    assert circuit_document(*first) == circuit_document(*second)


def test_spec_round_trip() -> None:
    logical = LogicalCircuitSpec(
        code=CodeSpec(CodeFamily.SHOR, logical_qubits=2),
        initial=(LogicalState.ONE, LogicalState.PLUS),
        logical_gates=(LogicalGate.parse('CNOT(0, 1)'), LogicalGate.parse('X(1)')),
        stabilize_rounds=3)
    assert LogicalCircuitSpec.from_dict(logical.to_dict()) == logical
