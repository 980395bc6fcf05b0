"""
=====================
Stabilizer Simulator
=====================

Clifford tableau simulation with stochastic Pauli noise and classical
readout error.

The tableau keeps ``2n`` generator rows over ``n`` qubits: rows ``0..n-1``
are destabilizers, rows ``n..2n-1`` stabilizers. Each row is an X part,
a Z part (``uint8`` 0/1 vectors) and a sign bit. Gates update columns
for all rows at once; measurement follows the usual rowsum procedure.

Noise enters only as Pauli faults after unitary gates and as bit flips
on measurement results, so every shot stays a stabilizer computation.
The per-target channel of a gate is the thermal-relaxation twirl over
the gate duration composed with the gate's depolarizing rate:

>>> px, py, pz = thermal_relaxation_probs(0.0, 1e-4, 1e-4)
>>> (px, py, pz)
(0.0, 0.0, 0.0)
>>> depolarizing_probs(0.03)
(0.0075, 0.0075, 0.0075)
"""

import logging as log
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from synprint.core.circuit import Circuit, GateKind, GateOp

#: Pauli letters in channel-probability order.
PAULIS = ('X', 'Y', 'Z')

ChannelProbs = Tuple[float, float, float]

# (x, z) bits of I, X, Y, Z
_PAULI_BITS = {'I': (0, 0), 'X': (1, 0), 'Y': (1, 1), 'Z': (0, 1)}
_BITS_PAULI = {bits: letter for letter, bits in _PAULI_BITS.items()}


@dataclass(frozen=True)
class PauliFault:
    qubit: int
    pauli: str

    def __post_init__(self) -> None:
        if self.pauli not in PAULIS:
            raise ValueError(f'invalid Pauli fault {self.pauli!r}')
        if self.qubit < 0:
            raise ValueError(f'negative qubit index {self.qubit}')


@dataclass
class ShotOutcome:
    """Measured bits of one shot, keyed by measurement label in circuit
    order. ``faults_injected`` is a debugging channel and is never used
    as a feature."""
    bits: Dict[str, int]
    faults_injected: List[PauliFault] = field(default_factory=list)

    @property
    def bitstring(self) -> str:
        return ''.join(str(bit) for bit in self.bits.values())


# Channels

def check_channel(probs: Sequence[float]) -> ChannelProbs:
    if len(probs) != 3:
        raise ValueError(f'expected (pX, pY, pZ), got {probs}')
    px, py, pz = (float(p) for p in probs)
    if min(px, py, pz) < 0:
        raise ValueError(f'negative Pauli probability in {probs}')
    if px + py + pz > 1 + 1e-12:
        raise ValueError(f'Pauli probabilities sum to more than 1: {probs}')
    return px, py, pz


def thermal_relaxation_probs(duration: float, t1: float, t2: float) -> ChannelProbs:
    """Pauli twirl of amplitude and phase damping over ``duration``.

    Raises:
        ValueError: ``t1`` or ``t2`` is not positive, or ``t2 > 2 * t1``.
    """
    if t1 <= 0 or t2 <= 0:
        raise ValueError(f'T1 and T2 must be positive: T1={t1}, T2={t2}')
    if t2 > 2 * t1 * (1 + 1e-12):
        raise ValueError(f'T2 must not exceed 2*T1: T1={t1}, T2={t2}')
    if duration <= 0 or math.isinf(t1):
        relax = 0.0
    else:
        relax = -math.expm1(-duration / t1)
    dephase = 0.0 if duration <= 0 or math.isinf(t2) else -math.expm1(-duration / t2)
    pxy = relax / 4
    pz = max(0.0, dephase / 2 - relax / 4)
    return pxy, pxy, pz


def depolarizing_probs(error_rate: float) -> ChannelProbs:
    """Single-qubit depolarizing channel of strength ``error_rate``."""
    if not 0 <= error_rate <= 1:
        raise ValueError(f'error rate must lie in [0, 1], got {error_rate}')
    p = error_rate * 0.75 / 3
    return p, p, p


def compose_channels(first: Sequence[float], second: Sequence[float]) -> ChannelProbs:
    """The Pauli channel equal to applying ``first`` then ``second``.

    Paulis multiply as XOR of their ``(x, z)`` bits, ignoring phase.

    >>> compose_channels((1.0, 0.0, 0.0), (0.0, 0.0, 1.0))
    (0.0, 1.0, 0.0)
    """
    a = (1 - sum(first),) + tuple(first)
    b = (1 - sum(second),) + tuple(second)
    letters = ('I',) + PAULIS
    out = {letter: 0.0 for letter in letters}
    for i, pa in enumerate(a):
        for j, pb in enumerate(b):
            xa, za = _PAULI_BITS[letters[i]]
            xb, zb = _PAULI_BITS[letters[j]]
            out[_BITS_PAULI[(xa ^ xb, za ^ zb)]] += pa * pb
    return out['X'], out['Y'], out['Z']


def sample_pauli_channel(
        probs: Sequence[float],
        rng: np.random.Generator,
) -> Optional[str]:
    """Draw X, Y, Z or nothing from a Pauli channel."""
    px, py, pz = check_channel(probs)
    u = rng.random()
    if u < px:
        return 'X'
    if u < px + py:
        return 'Y'
    if u < px + py + pz:
        return 'Z'
    return None


def apply_readout_error(
        bit: int,
        p01: float,
        p10: float,
        rng: np.random.Generator,
) -> int:
    """Flip 0 to 1 with probability ``p01`` and 1 to 0 with ``p10``."""
    if not (0 <= p01 <= 1 and 0 <= p10 <= 1):
        raise ValueError(f'readout probabilities out of range: {p01}, {p10}')
    flip = p10 if bit else p01
    if rng.random() < flip:
        return 1 - bit
    return bit


# Tableau

class Tableau:
    """Stabilizer tableau over ``n`` qubits, initialized to ``|0...0>``."""

    def __init__(self, n: int) -> None:
        if n < 1:
            raise ValueError(f'a tableau needs at least one qubit, got {n}')
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=np.uint8)
        self.z = np.zeros((2 * n, n), dtype=np.uint8)
        self.r = np.zeros(2 * n, dtype=np.uint8)
        idx = np.arange(n)
        self.x[idx, idx] = 1
        self.z[n + idx, idx] = 1

    def copy(self) -> 'Tableau':
        other = Tableau.__new__(Tableau)
        other.n = self.n
        other.x = self.x.copy()
        other.z = self.z.copy()
        other.r = self.r.copy()
        return other

    def _check(self, qubit: int) -> None:
        if not 0 <= qubit < self.n:
            raise IndexError(
                f'qubit {qubit} out of range for a {self.n}-qubit tableau')

    # gates

    def h(self, a: int) -> None:
        xa = self.x[:, a].copy()
        za = self.z[:, a]
        self.r ^= xa & za
        self.x[:, a] = za
        self.z[:, a] = xa

    def s(self, a: int) -> None:
        self.r ^= self.x[:, a] & self.z[:, a]
        self.z[:, a] ^= self.x[:, a]

    def pauli_x(self, a: int) -> None:
        self.r ^= self.z[:, a]

    def pauli_z(self, a: int) -> None:
        self.r ^= self.x[:, a]

    def pauli_y(self, a: int) -> None:
        self.r ^= self.x[:, a] ^ self.z[:, a]

    def cnot(self, a: int, b: int) -> None:
        xa, za = self.x[:, a], self.z[:, a]
        xb, zb = self.x[:, b], self.z[:, b]
        self.r ^= xa & zb & (xb ^ za ^ 1)
        self.x[:, b] ^= xa
        self.z[:, a] ^= zb

    def apply_pauli(self, qubit: int, pauli: str) -> None:
        if pauli == 'X':
            self.pauli_x(qubit)
        elif pauli == 'Y':
            self.pauli_y(qubit)
        elif pauli == 'Z':
            self.pauli_z(qubit)
        else:
            raise ValueError(f'invalid Pauli {pauli!r}')

    # measurement

    def _rowsum(self, targets: np.ndarray, source: int) -> None:
        """Replace each target row by (target row) * (source row)."""
        self.r[targets] = _product_sign(
            self.x[source], self.z[source], self.r[source],
            self.x[targets], self.z[targets], self.r[targets])
        self.x[targets] ^= self.x[source]
        self.z[targets] ^= self.z[source]

    def is_deterministic(self, a: int) -> bool:
        return not self.x[self.n:, a].any()

    def measure(self, a: int, random_bit: int) -> int:
        """Measure Z on qubit ``a``.

        ``random_bit`` is returned (and the state collapsed onto it) when
        the outcome is not determined by the stabilizer group.
        """
        self._check(a)
        n = self.n
        anticommuting = np.nonzero(self.x[n:, a])[0]
        if anticommuting.size:
            p = n + int(anticommuting[0])
            rows = np.nonzero(self.x[:, a])[0]
            rows = rows[rows != p]
            if rows.size:
                self._rowsum(rows, p)
            self.x[p - n] = self.x[p]
            self.z[p - n] = self.z[p]
            self.r[p - n] = self.r[p]
            self.x[p] = 0
            self.z[p] = 0
            self.z[p, a] = 1
            self.r[p] = random_bit & 1
            return int(self.r[p])

        sx = np.zeros(n, dtype=np.uint8)
        sz = np.zeros(n, dtype=np.uint8)
        sr = np.zeros(1, dtype=np.uint8)
        for i in np.nonzero(self.x[:n, a])[0]:
            row = n + int(i)
            sr = _product_sign(
                self.x[row], self.z[row], self.r[row],
                sx[np.newaxis], sz[np.newaxis], sr)
            sx ^= self.x[row]
            sz ^= self.z[row]
        return int(sr[0])

    def reset(self, a: int, random_bit: int) -> None:
        if self.measure(a, random_bit):
            self.pauli_x(a)

    # invariants

    def stabilizers(self) -> List[str]:
        """Signed stabilizer generators, e.g. ``['+ZI', '-IZ']``."""
        out = []
        for row in range(self.n, 2 * self.n):
            letters = ''.join(
                _BITS_PAULI[(int(self.x[row, q]), int(self.z[row, q]))]
                for q in range(self.n))
            out.append(('-' if self.r[row] else '+') + letters)
        return out

    def validate(self) -> None:
        """Check the symplectic structure of the tableau.

        Destabilizer ``i`` must anticommute with stabilizer ``i`` and
        commute with every other generator, which also implies rank
        ``2n`` over GF(2).

        Raises:
            AssertionError: The tableau is corrupted.
        """
        x = self.x.astype(np.int64)
        z = self.z.astype(np.int64)
        inner = (x @ z.T + z @ x.T) % 2
        n = self.n
        expected = np.zeros((2 * n, 2 * n), dtype=np.int64)
        expected[:n, n:] = np.eye(n, dtype=np.int64)
        expected[n:, :n] = np.eye(n, dtype=np.int64)
        if not np.array_equal(inner, expected):
            raise AssertionError('tableau lost its symplectic structure')


def _product_sign(
        x1: np.ndarray, z1: np.ndarray, r1: np.ndarray,
        x2: np.ndarray, z2: np.ndarray, r2: np.ndarray,
) -> np.ndarray:
    """Sign bits of ``row1 * row2`` for each row of ``(x2, z2, r2)``.

    Sums the phase exponent of multiplying the single-qubit Paulis of
    row 1 into row 2, plus both signs; the result is 0 or 2 mod 4.
    """
    a1 = x1.astype(np.int16)
    b1 = z1.astype(np.int16)
    a2 = x2.astype(np.int16)
    b2 = z2.astype(np.int16)
    g = (
        (a1 & b1) * (b2 - a2)
        + (a1 & (1 - b1)) * b2 * (2 * a2 - 1)
        + ((1 - a1) & b1) * a2 * (1 - 2 * b2))
    total = 2 * np.asarray(r1, dtype=np.int16) + 2 * r2.astype(np.int16) + g.sum(axis=-1)
    return ((total % 4) // 2).astype(np.uint8)


def apply_gate(tableau: Tableau, op: GateOp) -> Tableau:
    """Apply a unitary gate in place and return the tableau.

    Raises:
        IndexError: A target is outside the tableau.
        ValueError: ``op`` is a measurement or reset.
    """
    for target in op.targets:
        tableau._check(target)  # pylint: disable=protected-access
    kind = op.kind
    if kind is GateKind.H:
        tableau.h(op.targets[0])
    elif kind is GateKind.S:
        tableau.s(op.targets[0])
    elif kind is GateKind.X:
        tableau.pauli_x(op.targets[0])
    elif kind is GateKind.Z:
        tableau.pauli_z(op.targets[0])
    elif kind is GateKind.CNOT:
        tableau.cnot(*op.targets)
    else:
        raise ValueError(f'{kind.value} is not a unitary gate')
    return tableau


def measure_z(
        tableau: Tableau,
        qubit: int,
        rng: np.random.Generator,
) -> Tuple[Tableau, int]:
    """Measure Z on ``qubit``, collapsing the state if the outcome is random."""
    bit = tableau.measure(qubit, int(rng.integers(2)))
    return tableau, bit


# Noise

class NoiseModel:
    """Per-qubit noise parameters consumed by :py:func:`run_shot`.

    The base class is noiseless. Backends override the parameter
    accessors; tests may override :py:meth:`gate_channel` directly.
    """

    def t1(self, qubit: int) -> float:
        return math.inf

    def t2(self, qubit: int) -> float:
        return math.inf

    def gate_error(self, kind: GateKind, targets: Tuple[int, ...]) -> float:
        return 0.0

    def gate_duration(self, kind: GateKind) -> float:
        return 0.0

    def readout(self, qubit: int) -> Tuple[float, float]:
        return 0.0, 0.0

    def covers(self, qubits: Sequence[int]) -> bool:
        return True

    def gate_channel(self, op: GateOp, qubit: int) -> ChannelProbs:
        """Pauli channel applied to ``qubit`` after ``op``."""
        duration = op.duration or self.gate_duration(op.kind)
        thermal = (0.0, 0.0, 0.0)
        t1, t2 = self.t1(qubit), self.t2(qubit)
        if duration > 0 and not (math.isinf(t1) and math.isinf(t2)):
            thermal = thermal_relaxation_probs(duration, t1, t2)
        error = self.gate_error(op.kind, op.targets)
        if error > 0:
            return compose_channels(thermal, depolarizing_probs(error))
        return thermal


NOISELESS = NoiseModel()


@dataclass(frozen=True)
class CompiledCircuit:
    """A circuit with qubits packed into tableau slots and every noise
    site's channel precomputed for one noise model."""
    circuit: Circuit
    slots: Mapping[int, int]
    site_op: np.ndarray
    site_slot: np.ndarray
    site_cumulative: np.ndarray
    readout: np.ndarray
    random_ops: int

    @property
    def num_qubits(self) -> int:
        return len(self.slots)


def compile_circuit(circuit: Circuit, noise: NoiseModel = NOISELESS) -> CompiledCircuit:
    """Resolve qubit slots and per-site fault probabilities.

    Raises:
        ValueError: ``noise`` does not describe every qubit of the circuit.
    """
    qubits = circuit.qubits
    if not noise.covers(qubits):
        raise ValueError(
            f'noise model does not cover circuit qubits {qubits}')
    slots = {q: i for i, q in enumerate(qubits)}
    site_op: List[int] = []
    site_slot: List[int] = []
    site_probs: List[ChannelProbs] = []
    readout: List[Tuple[float, float]] = []
    random_ops = 0
    for index, op in enumerate(circuit.ops):
        if op.kind is GateKind.MEASURE_Z:
            readout.append(noise.readout(op.targets[0]))
            random_ops += 1
        elif op.kind is GateKind.RESET:
            random_ops += 1
        else:
            for qubit in op.targets:
                probs = check_channel(noise.gate_channel(op, qubit))
                if sum(probs) > 0:
                    site_op.append(index)
                    site_slot.append(slots[qubit])
                    site_probs.append(probs)
    probs_array = np.array(site_probs, dtype=np.float64).reshape(-1, 3)
    return CompiledCircuit(
        circuit=circuit,
        slots=slots,
        site_op=np.array(site_op, dtype=np.int64),
        site_slot=np.array(site_slot, dtype=np.int64),
        site_cumulative=np.cumsum(probs_array, axis=1),
        readout=np.array(readout, dtype=np.float64).reshape(-1, 2),
        random_ops=random_ops)


def run_compiled(
        compiled: CompiledCircuit,
        rng: np.random.Generator,
        validate: bool = False,
) -> ShotOutcome:
    """Execute one shot of a compiled circuit.

    Randomness is drawn in a fixed order: fault sites, readout flips,
    then measurement coins, so a shot is a pure function of its stream.
    """
    circuit = compiled.circuit
    u = rng.random(len(compiled.site_op))
    kinds = (u[:, np.newaxis] >= compiled.site_cumulative).sum(axis=1) if u.size else u
    readout_u = rng.random(len(compiled.readout))
    coins = rng.integers(0, 2, size=compiled.random_ops)

    faults: Dict[int, List[Tuple[int, str]]] = {}
    for site in np.nonzero(kinds < 3)[0]:
        faults.setdefault(int(compiled.site_op[site]), []).append(
            (int(compiled.site_slot[site]), PAULIS[int(kinds[site])]))

    physical = {slot: q for q, slot in compiled.slots.items()}
    tableau = Tableau(compiled.num_qubits)
    bits: Dict[str, int] = {}
    injected: List[PauliFault] = []
    measurement = 0
    random_index = 0
    slots = compiled.slots
    for index, op in enumerate(circuit.ops):
        kind = op.kind
        if kind is GateKind.MEASURE_Z:
            bit = tableau.measure(slots[op.targets[0]], int(coins[random_index]))
            random_index += 1
            p01, p10 = compiled.readout[measurement]
            if readout_u[measurement] < (p10 if bit else p01):
                bit = 1 - bit
            measurement += 1
            bits[op.label or str(index)] = bit
        elif kind is GateKind.RESET:
            tableau.reset(slots[op.targets[0]], int(coins[random_index]))
            random_index += 1
        else:
            if kind is GateKind.CNOT:
                tableau.cnot(slots[op.targets[0]], slots[op.targets[1]])
            elif kind is GateKind.H:
                tableau.h(slots[op.targets[0]])
            elif kind is GateKind.S:
                tableau.s(slots[op.targets[0]])
            elif kind is GateKind.X:
                tableau.pauli_x(slots[op.targets[0]])
            elif kind is GateKind.Z:
                tableau.pauli_z(slots[op.targets[0]])
            for slot, pauli in faults.get(index, ()):
                tableau.apply_pauli(slot, pauli)
                injected.append(PauliFault(physical[slot], pauli))
        if validate:
            tableau.validate()
    if injected:
        log.debug('shot faults: %s', injected)
    return ShotOutcome(bits=bits, faults_injected=injected)


def run_shot(
        circuit: Circuit,
        profile: NoiseModel,
        rng: np.random.Generator,
) -> ShotOutcome:
    """Run one noisy shot of ``circuit`` under ``profile``."""
    return run_compiled(compile_circuit(circuit, profile), rng)


def test_noiseless_model_has_empty_sites() -> None:
    circuit = Circuit.from_ops([
        GateOp(GateKind.H, (0,)),
        GateOp(GateKind.MEASURE_Z, (0,), label='m')])
    compiled = compile_circuit(circuit)
    assert compiled.site_op.size == 0
    assert compiled.random_ops == 1


def test_twirl_requires_t2_bound() -> None:
    try:
        thermal_relaxation_probs(1e-7, 1e-5, 3e-5)
    except ValueError:
        return
    raise AssertionError('T2 > 2 T1 was accepted')


def test_twirl_at_t2_limit_has_no_pure_dephasing() -> None:
    px, py, pz = thermal_relaxation_probs(3e-7, 1e-4, 2e-4)
    assert px == py
    assert pz >= 0
    assert abs(pz - px) < 1e-9
