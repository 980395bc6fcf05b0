import collections
from typing import Dict, List, Tuple

import numpy as np
import pytest
from scipy import stats

from synprint.core.circuit import Circuit, CircuitBuilder, GateKind, GateOp
from synprint.core.simulator import (
    ChannelProbs,
    NoiseModel,
    Tableau,
    apply_gate,
    apply_readout_error,
    compile_circuit,
    measure_z,
    run_compiled,
    run_shot,
    sample_pauli_channel,
    NOISELESS,
)
from synprint.library.seeding import stream


def statevector_distribution(circuit: Circuit, n: int) -> Dict[str, float]:
    """Exact outcome distribution of a unitary circuit followed by final
    measurements, by dense statevector simulation."""
    idx = np.arange(2 ** n)
    psi = np.zeros(2 ** n, dtype=complex)
    psi[0] = 1.0
    measured: List[int] = []
    for op in circuit.ops:
        if op.kind is GateKind.MEASURE_Z:
            measured.append(op.targets[0])
            continue
        q = op.targets[0]
        mask = 1 << q
        bit = (idx >> q) & 1
        if op.kind is GateKind.X:
            psi = psi[idx ^ mask]
        elif op.kind is GateKind.Z:
            psi = psi * (1 - 2 * bit)
        elif op.kind is GateKind.S:
            psi = psi * np.where(bit, 1j, 1)
        elif op.kind is GateKind.H:
            psi = (psi[idx & ~mask] + (1 - 2 * bit) * psi[idx | mask]) / np.sqrt(2)
        elif op.kind is GateKind.CNOT:
            target_mask = 1 << op.targets[1]
            psi = psi[np.where(bit, idx ^ target_mask, idx)]
    probs = np.abs(psi) ** 2
    out: Dict[str, float] = collections.defaultdict(float)
    for i in np.nonzero(probs > 1e-12)[0]:
        key = ''.join(str((int(i) >> q) & 1) for q in measured)
        out[key] += float(probs[i])
    return dict(out)


def random_clifford(n: int, depth: int, rng: np.random.Generator) -> Circuit:
    builder = CircuitBuilder()
    for _ in range(depth):
        choice = rng.integers(5 if n > 1 else 4)
        if choice == 4:
            a, b = rng.choice(n, size=2, replace=False)
            builder.cnot(int(a), int(b))
        else:
            kind = (GateKind.H, GateKind.S, GateKind.X, GateKind.Z)[choice]
            builder.gate(kind, int(rng.integers(n)))
    for q in range(n):
        builder.measure(q, f'm{q}')
    return builder.build('random')


def sample_counts(circuit: Circuit, shots: int, seed: int) -> collections.Counter:
    compiled = compile_circuit(circuit)
    return collections.Counter(
        run_compiled(compiled, stream(seed, 'shot', k)).bitstring
        for k in range(shots))


def assert_matches_oracle(circuit: Circuit, n: int, shots: int, seed: int) -> None:
    expected = statevector_distribution(circuit, n)
    counts = sample_counts(circuit, shots, seed)
    assert set(counts) == set(expected), (counts, expected)
    if len(expected) == 1:
        return
    keys = sorted(expected)
    observed = np.array([counts[key] for key in keys], dtype=float)
    predicted = np.array([expected[key] * shots for key in keys])
    statistic, pvalue = stats.chisquare(observed, predicted)
    assert pvalue > 1e-4, (statistic, counts, expected)


def test_x_then_measure() -> None:
    circuit = CircuitBuilder().x(0).measure(0, 'm').build()
    for k in range(20):
        assert run_shot(circuit, NOISELESS, stream(1, k)).bits == {'m': 1}


def test_hadamard_is_fair() -> None:
    circuit = CircuitBuilder().h(0).measure(0, 'm').build()
    counts = sample_counts(circuit, 10_000, seed=3)
    assert abs(counts['0'] / 10_000 - 0.5) < 0.02


def test_bell_pair_correlation() -> None:
    circuit = (
        CircuitBuilder().h(0).cnot(0, 1).measure(0, 'a').measure(1, 'b').build())
    counts = sample_counts(circuit, 2_000, seed=4)
    assert set(counts) == {'00', '11'}


def test_repeated_measurement_is_stable() -> None:
    rng = stream(5)
    for _ in range(50):
        tableau = Tableau(2)
        tableau.h(0)
        tableau.cnot(0, 1)
        tableau, first = measure_z(tableau, 0, rng)
        tableau, again = measure_z(tableau, 0, rng)
        tableau, other = measure_z(tableau, 1, rng)
        assert first == again == other
        tableau.validate()


def test_fresh_qubit_measures_zero() -> None:
    _, bit = measure_z(Tableau(3), 2, stream(0))
    assert bit == 0


def test_gate_index_checks() -> None:
    with pytest.raises(IndexError):
        apply_gate(Tableau(2), GateOp(GateKind.H, (2,)))
    with pytest.raises(ValueError):
        apply_gate(Tableau(2), GateOp(GateKind.RESET, (0,)))


def test_reset_returns_to_zero() -> None:
    circuit = (
        CircuitBuilder().h(0).measure(0, 'a').reset(0).measure(0, 'b').build())
    for k in range(30):
        assert run_shot(circuit, NOISELESS, stream(6, k)).bits['b'] == 0


def test_stabilizer_signs() -> None:
    tableau = Tableau(2)
    tableau.pauli_x(1)
    assert tableau.stabilizers() == ['+ZI', '-IZ']
    tableau.h(0)
    tableau.cnot(0, 1)
    assert tableau.stabilizers() == ['+XX', '-ZZ']


def test_small_cliffords_match_statevector() -> None:
    rng = stream(2024, 'circuits')
    for n in range(1, 5):
        for _ in range(3):
            circuit = random_clifford(n, 4 * n, rng)
            assert_matches_oracle(circuit, n, shots=2_000, seed=n)


@pytest.mark.slow
def test_six_qubit_cliffords_match_statevector() -> None:
    rng = stream(2025, 'circuits')
    for trial in range(3):
        circuit = random_clifford(6, 30, rng)
        assert_matches_oracle(circuit, 6, shots=50_000, seed=trial)


def test_tableau_stays_valid() -> None:
    rng = stream(9, 'circuits')
    for _ in range(5):
        circuit = random_clifford(5, 25, rng)
        compiled = compile_circuit(circuit)
        run_compiled(compiled, stream(9, 'shot'), validate=True)


def test_pauli_channel_edges() -> None:
    rng = stream(10)
    assert all(sample_pauli_channel((0, 0, 0), rng) is None for _ in range(100))
    assert all(sample_pauli_channel((1, 0, 0), rng) == 'X' for _ in range(100))
    with pytest.raises(ValueError):
        sample_pauli_channel((0.5, 0.4, 0.2), rng)


def test_pauli_channel_frequencies() -> None:
    rng = stream(11)
    draws = collections.Counter(
        sample_pauli_channel((0.1, 0.1, 0.1), rng) for _ in range(100_000))
    for letter in 'XYZ':
        assert abs(draws[letter] / 100_000 - 0.1) < 0.005


def test_readout_error() -> None:
    rng = stream(12)
    assert apply_readout_error(0, 1.0, 0.0, rng) == 1
    assert apply_readout_error(1, 0.0, 0.0, rng) == 1
    flips = sum(apply_readout_error(0, 0.2, 0.0, rng) for _ in range(50_000))
    assert abs(flips / 50_000 - 0.2) < 0.005


class FaultAfter(NoiseModel):
    """Applies a fixed channel after every single-qubit gate of one kind
    on the listed qubits."""

    def __init__(self, kind: GateKind, qubits: Tuple[int, ...], probs: ChannelProbs) -> None:
        self.kind = kind
        self.qubits = qubits
        self.probs = probs

    def gate_channel(self, op: GateOp, qubit: int) -> ChannelProbs:
        if op.kind is self.kind and qubit in self.qubits:
            return self.probs
        return 0.0, 0.0, 0.0


def parity_circuit(flip_data: bool) -> Circuit:
    """Three data qubits 0..2 and parity ancillas 3, 4 as in a bit-flip
    repetition code."""
    builder = CircuitBuilder()
    for q in range(3):
        if flip_data:
            builder.x(q)
        else:
            builder.z(q)
    builder.cnot(0, 3).cnot(1, 3).cnot(1, 4).cnot(2, 4)
    return builder.measure(3, 's0').measure(4, 's1').build('parity')


def test_deterministic_fault_on_first_data_qubit() -> None:
    noise = FaultAfter(GateKind.X, (0,), (1.0, 0.0, 0.0))
    outcome = run_shot(parity_circuit(True), noise, stream(13))
    assert outcome.bits == {'s0': 1, 's1': 0}
    assert [(f.qubit, f.pauli) for f in outcome.faults_injected] == [(0, 'X')]


def test_shots_are_reproducible() -> None:
    noise = FaultAfter(GateKind.Z, (0, 1, 2), (0.2, 0.1, 0.0))
    circuit = parity_circuit(False)
    first = [run_shot(circuit, noise, stream(14, k)).bits for k in range(50)]
    second = [run_shot(circuit, noise, stream(14, k)).bits for k in range(50)]
    assert first == second


def test_readout_noise_is_applied() -> None:
    class Readout(NoiseModel):
        def readout(self, qubit: int) -> Tuple[float, float]:
            return 1.0, 0.0

    circuit = CircuitBuilder().measure(0, 'm').build()
    assert run_shot(circuit, Readout(), stream(15)).bits == {'m': 1}


@pytest.mark.slow
def test_bit_flip_syndrome_rate() -> None:
    p = 0.01
    noise = FaultAfter(GateKind.Z, (0, 1, 2), (p, 0.0, 0.0))
    compiled = compile_circuit(parity_circuit(False), noise)
    shots = 100_000
    nonzero = sum(
        1 for k in range(shots)
        if '1' in run_compiled(compiled, stream(16, k)).bitstring)
    assert abs(nonzero / shots - (1 - (1 - p) ** 3)) < 0.002
