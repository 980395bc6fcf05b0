"""
==============
Noise Profiles
==============

A :py:class:`NoiseProfile` is the identity of a virtual backend: its
coupling graph plus per-qubit coherence times, per-qubit single-qubit
gate errors, per-edge CNOT errors, gate durations and per-qubit readout
flip probabilities.

Two tiers exist:

* ``ERaD``: energy relaxation and dephasing over gate durations only.
* ``FullEmulation``: ERaD plus depolarizing gate errors and readout
  flips.

A profile keeps its factory ``base`` calibration forever. Each
calibration epoch replaces ``current`` with a lognormal perturbation of
the base values.
"""

import enum
import functools
import logging as log
import math
import os
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from synprint.core.circuit import GateKind
from synprint.core.directories import PROFILES_DIR
from synprint.core.simulator import NoiseModel
from synprint.core.types import Document, Edge
from synprint.library.dict_utils import merge_defaults
from synprint.library.filepath import makedirs, read_json_file, write_json_file
from synprint.library.seeding import derive_seed, stream
from synprint.library.topology import ConnectivityGraph
from synprint.library.units import range_to_seconds, to_seconds


class NoiseTier(str, enum.Enum):
    ERAD = 'ERaD'
    FULL = 'FullEmulation'


#: Parameter ranges for fleet generation. Times may be Pint strings.
FLEET_DEFAULTS: Dict[str, Any] = {
    't1': ['50 us', '400 us'],
    't2': ['20 us', '400 us'],
    'single_qubit_error': [1e-4, 1e-3],
    'single_qubit_duration': '35 ns',
    'cnot_error': [2e-3, 5e-2],
    'cnot_duration': '300 ns',
    'readout_error': [5e-3, 1.5e-1],
    'drift': {
        'gate_sigma': 0.25,
        'coherence_sigma': 0.05,
        'readout_sigma': 0.20,
    },
}

_ARRAYS = ('t1', 't2', 'sq_error', 'cx_error', 'p01', 'p10')


@dataclass(frozen=True, eq=False)
class Calibration:
    """One set of calibrated values; arrays are indexed by qubit, except
    ``cx_error`` which follows the profile's edge order."""
    t1: np.ndarray
    t2: np.ndarray
    sq_error: np.ndarray
    sq_duration: float
    cx_error: np.ndarray
    cx_duration: float
    p01: np.ndarray
    p10: np.ndarray

    def __post_init__(self) -> None:
        for name in _ARRAYS:
            object.__setattr__(
                self, name, np.asarray(getattr(self, name), dtype=np.float64))
        self.validate()

    def validate(self) -> None:
        if np.any(self.t1 <= 0) or np.any(self.t2 <= 0):
            raise ValueError('T1 and T2 must be positive')
        if np.any(self.t2 > 2 * self.t1):
            raise ValueError('T2 must not exceed 2*T1')
        for name in ('sq_error', 'cx_error', 'p01', 'p10'):
            values = getattr(self, name)
            if np.any(values < 0) or np.any(values > 1):
                raise ValueError(f'{name} must lie in [0, 1]')
        if self.sq_duration < 0 or self.cx_duration < 0:
            raise ValueError('gate durations must be non-negative')

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Calibration):
            return NotImplemented
        return (
            self.sq_duration == other.sq_duration
            and self.cx_duration == other.cx_duration
            and all(
                np.array_equal(getattr(self, name), getattr(other, name))
                for name in _ARRAYS))

    def to_dict(self) -> Document:
        document: Document = {
            name: getattr(self, name).tolist() for name in _ARRAYS}
        document['sq_duration'] = self.sq_duration
        document['cx_duration'] = self.cx_duration
        return document

    @classmethod
    def from_dict(cls, document: Mapping[str, Any]) -> 'Calibration':
        return cls(
            t1=np.array(document['t1']),
            t2=np.array(document['t2']),
            sq_error=np.array(document['sq_error']),
            sq_duration=float(document['sq_duration']),
            cx_error=np.array(document['cx_error']),
            cx_duration=float(document['cx_duration']),
            p01=np.array(document['p01']),
            p10=np.array(document['p10']))


@dataclass(frozen=True)
class CalibrationEpoch:
    index: int
    timestamp: float
    seed: int

    def __post_init__(self) -> None:
        if self.index < 1:
            raise ValueError(f'calibration epochs start at 1, got {self.index}')


def calibration_schedule(
        count: int,
        interval: float,
        seed: int,
        start: float = 0.0,
) -> List[CalibrationEpoch]:
    """``count`` epochs, the first at ``start``, then every ``interval``."""
    if interval <= 0:
        raise ValueError(f'calibration interval must be positive, got {interval}')
    return [
        CalibrationEpoch(
            index=k + 1,
            timestamp=start + k * interval,
            seed=derive_seed(seed, 'calibration', k + 1))
        for k in range(count)]


@dataclass(frozen=True, eq=False)
class NoiseProfile(NoiseModel):
    backend_id: str
    tier: NoiseTier
    graph: ConnectivityGraph
    base: Calibration
    current: Calibration
    drift: Dict[str, float] = field(
        default_factory=lambda: dict(FLEET_DEFAULTS['drift']))
    epoch: int = 0
    epoch_time: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, 'tier', NoiseTier(self.tier))
        n = self.graph.num_qubits
        if self.graph.nodes != tuple(range(n)):
            raise ValueError('backend graphs must use qubits 0..n-1')
        for calibration in (self.base, self.current):
            for name in ('t1', 't2', 'sq_error', 'p01', 'p10'):
                if getattr(calibration, name).shape != (n,):
                    raise ValueError(f'{name} must have one value per qubit')
            if calibration.cx_error.shape != (len(self.graph.edges),):
                raise ValueError('cx_error must have one value per edge')
            if self.tier is NoiseTier.ERAD and (
                    calibration.sq_error.any() or calibration.cx_error.any()
                    or calibration.p01.any() or calibration.p10.any()):
                raise ValueError('ERaD profiles carry no gate or readout errors')

    @functools.cached_property
    def edge_index(self) -> Dict[Edge, int]:
        return {edge: i for i, edge in enumerate(self.graph.edges)}

    @property
    def num_qubits(self) -> int:
        return self.graph.num_qubits

    # noise model

    def t1(self, qubit: int) -> float:
        return float(self.current.t1[qubit])

    def t2(self, qubit: int) -> float:
        return float(self.current.t2[qubit])

    def gate_error(self, kind: GateKind, targets: Tuple[int, ...]) -> float:
        if kind is GateKind.CNOT:
            a, b = targets
            edge = (a, b) if a < b else (b, a)
            if edge not in self.edge_index:
                raise ValueError(
                    f'{self.backend_id} has no coupling between qubits {a} and {b}')
            return float(self.current.cx_error[self.edge_index[edge]])
        return float(self.current.sq_error[targets[0]])

    def gate_duration(self, kind: GateKind) -> float:
        if kind is GateKind.CNOT:
            return self.current.cx_duration
        if kind.is_unitary:
            return self.current.sq_duration
        return 0.0

    def readout(self, qubit: int) -> Tuple[float, float]:
        return float(self.current.p01[qubit]), float(self.current.p10[qubit])

    def covers(self, qubits: Sequence[int]) -> bool:
        return all(0 <= q < self.num_qubits for q in qubits)

    # persistence

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NoiseProfile):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def to_dict(self) -> Document:
        return {
            'backend_id': self.backend_id,
            'tier': self.tier.value,
            'graph': self.graph.to_dict(),
            'drift': dict(self.drift),
            'epoch': self.epoch,
            'epoch_time': self.epoch_time,
            'base': self.base.to_dict(),
            'current': self.current.to_dict()}

    @classmethod
    def from_dict(cls, document: Mapping[str, Any]) -> 'NoiseProfile':
        return cls(
            backend_id=document['backend_id'],
            tier=NoiseTier(document['tier']),
            graph=ConnectivityGraph.from_dict(document['graph']),
            base=Calibration.from_dict(document['base']),
            current=Calibration.from_dict(document['current']),
            drift={k: float(v) for k, v in document['drift'].items()},
            epoch=int(document['epoch']),
            epoch_time=float(document['epoch_time']))


def _log_uniform(rng: np.random.Generator, bounds: Sequence[float], size: int) -> np.ndarray:
    low, high = float(bounds[0]), float(bounds[1])
    if not 0 < low <= high:
        raise ValueError(f'log-uniform range needs 0 < low <= high, got {bounds}')
    return np.exp(rng.uniform(math.log(low), math.log(high), size=size))


def draw_calibration(
        rng: np.random.Generator,
        graph: ConnectivityGraph,
        tier: NoiseTier,
        config: Dict[str, Any],
) -> Calibration:
    """Per-qubit and per-edge parameters from the configured ranges.

    Coherence times are drawn before error rates, so fleets of both
    tiers built from one seed share their T1 and T2 values.
    """
    n = graph.num_qubits
    t1 = _log_uniform(rng, range_to_seconds(config['t1']), n)
    t2_low, t2_high = range_to_seconds(config['t2'])
    t2_upper = np.minimum(2 * t1, t2_high)
    t2_lower = np.minimum(t2_low, t2_upper)
    t2 = np.exp(rng.uniform(np.log(t2_lower), np.log(t2_upper)))
    sq_error = _log_uniform(rng, config['single_qubit_error'], n)
    cx_error = _log_uniform(rng, config['cnot_error'], len(graph.edges))
    p01 = _log_uniform(rng, config['readout_error'], n)
    p10 = _log_uniform(rng, config['readout_error'], n)
    if tier is NoiseTier.ERAD:
        sq_error = np.zeros(n)
        cx_error = np.zeros(len(graph.edges))
        p01 = np.zeros(n)
        p10 = np.zeros(n)
    return Calibration(
        t1=t1, t2=t2,
        sq_error=sq_error,
        sq_duration=to_seconds(config['single_qubit_duration']),
        cx_error=cx_error,
        cx_duration=to_seconds(config['cnot_duration']),
        p01=p01, p10=p10)


def backend_name(index: int) -> str:
    return f'backend-{index:02d}'


def generate_fleet(
        n_backends: int,
        graph: ConnectivityGraph,
        tier: NoiseTier,
        seed: int,
        config: Optional[dict] = None,
) -> List[NoiseProfile]:
    """Synthesize ``n_backends`` profiles on a shared coupling graph.

    Backend ``i`` draws from its own stream ``(seed, 'fleet', i)``.

    Raises:
        ValueError: Fewer than two backends were requested.
    """
    if n_backends < 2:
        raise ValueError(f'a fleet needs at least two backends, got {n_backends}')
    parameters = merge_defaults(FLEET_DEFAULTS, config)
    tier = NoiseTier(tier)
    fleet = []
    for i in range(n_backends):
        calibration = draw_calibration(
            stream(seed, 'fleet', i), graph, tier, parameters)
        fleet.append(NoiseProfile(
            backend_id=backend_name(i),
            tier=tier,
            graph=graph,
            base=calibration,
            current=calibration,
            drift={k: float(v) for k, v in parameters['drift'].items()}))
    log.info(
        'generated %d %s backends on %d qubits',
        n_backends, tier.value, graph.num_qubits)
    return fleet


def _jitter(
        rng: np.random.Generator,
        values: np.ndarray,
        sigma: float,
        upper: Optional[float] = None,
) -> np.ndarray:
    out = values * np.exp(rng.normal(0.0, sigma, size=values.shape))
    if upper is not None:
        out = np.minimum(out, upper)
    return out


def advance_calibration(profile: NoiseProfile, epoch: CalibrationEpoch) -> NoiseProfile:
    """Recalibrate: perturb the base values multiplicatively.

    Gate errors use ``drift['gate_sigma']``, T1 and T2 use
    ``drift['coherence_sigma']``, readout uses ``drift['readout_sigma']``.
    The draw depends only on the epoch seed and the backend id.

    Raises:
        ValueError: ``epoch`` is not newer than the profile's epoch.
    """
    if epoch.index <= profile.epoch or epoch.timestamp < profile.epoch_time:
        raise ValueError(
            f'{profile.backend_id} is at epoch {profile.epoch} '
            f'(t={profile.epoch_time}); epoch {epoch.index} '
            f'(t={epoch.timestamp}) is stale')
    rng = stream(epoch.seed, profile.backend_id)
    base = profile.base
    gate_sigma = profile.drift['gate_sigma']
    coherence_sigma = profile.drift['coherence_sigma']
    readout_sigma = profile.drift['readout_sigma']
    t1 = _jitter(rng, base.t1, coherence_sigma)
    t2 = np.minimum(_jitter(rng, base.t2, coherence_sigma), 2 * t1)
    current = replace(
        base,
        t1=t1,
        t2=t2,
        sq_error=_jitter(rng, base.sq_error, gate_sigma, 1.0),
        cx_error=_jitter(rng, base.cx_error, gate_sigma, 1.0),
        p01=_jitter(rng, base.p01, readout_sigma, 1.0),
        p10=_jitter(rng, base.p10, readout_sigma, 1.0))
    log.debug('%s recalibrated at epoch %d', profile.backend_id, epoch.index)
    return replace(
        profile, current=current, epoch=epoch.index, epoch_time=epoch.timestamp)


def profile_path(out_dir: str, backend_id: str) -> str:
    return os.path.join(out_dir, PROFILES_DIR, f'{backend_id}.json')


def save_profile(profile: NoiseProfile, out_dir: str) -> str:
    makedirs(out_dir, PROFILES_DIR)
    path = profile_path(out_dir, profile.backend_id)
    write_json_file(path, profile.to_dict())
    return path


def load_profile(path: str) -> NoiseProfile:
    return NoiseProfile.from_dict(read_json_file(path))


def load_fleet(out_dir: str) -> List[NoiseProfile]:
    """Every persisted profile under ``out_dir``, sorted by backend id.

    Raises:
        FileNotFoundError: No profiles have been generated.
    """
    directory = os.path.join(out_dir, PROFILES_DIR)
    if not os.path.isdir(directory):
        raise FileNotFoundError(
            f'no fleet at {directory}; run the fleet command first')
    names = sorted(n for n in os.listdir(directory) if n.endswith('.json'))
    if not names:
        raise FileNotFoundError(f'no profiles in {directory}')
    return [load_profile(os.path.join(directory, name)) for name in names]


def _small_graph() -> ConnectivityGraph:
    return ConnectivityGraph.from_edges(4, [(0, 1), (1, 2), (2, 3)])


def test_fleet_invariants() -> None:
    fleet = generate_fleet(5, _small_graph(), NoiseTier.FULL, seed=1)
    assert len({p.backend_id for p in fleet}) == 5
    for profile in fleet:
        profile.current.validate()
        assert np.all(profile.current.t1 >= 50e-6 * (1 - 1e-9))
        assert np.all(profile.current.t2 <= 2 * profile.current.t1)
    again = generate_fleet(5, _small_graph(), NoiseTier.FULL, seed=1)
    assert fleet == again


def test_erad_fleet_has_no_gate_errors() -> None:
    erad = generate_fleet(3, _small_graph(), NoiseTier.ERAD, seed=2)
    full = generate_fleet(3, _small_graph(), NoiseTier.FULL, seed=2)
    for a, b in zip(erad, full):
        assert not a.current.sq_error.any()
        assert not a.current.p10.any()
        assert np.array_equal(a.current.t1, b.current.t1)
        assert np.array_equal(a.current.t2, b.current.t2)


def test_zero_drift_keeps_base() -> None:
    profile = generate_fleet(
        2, _small_graph(), NoiseTier.FULL, seed=3,
        config={'drift': {
            'gate_sigma': 0.0, 'coherence_sigma': 0.0, 'readout_sigma': 0.0}})[0]
    epoch = CalibrationEpoch(index=1, timestamp=0.0, seed=9)
    assert advance_calibration(profile, epoch).current == profile.base


def test_stale_epoch_is_rejected() -> None:
    profile = generate_fleet(2, _small_graph(), NoiseTier.FULL, seed=4)[0]
    first, second = calibration_schedule(2, 86400.0, seed=5)
    advanced = advance_calibration(profile, second)
    try:
        advance_calibration(advanced, first)
    except ValueError:
        return
    raise AssertionError('stale epoch was accepted')


def test_drift_sigma() -> None:
    profile = generate_fleet(2, _small_graph(), NoiseTier.FULL, seed=6)[0]
    ratios = []
    for epoch in calibration_schedule(1000, 3600.0, seed=7):
        current = advance_calibration(profile, epoch).current
        ratios.append(np.log(current.cx_error / profile.base.cx_error))
    sigma = float(np.std(np.concatenate(ratios)))
    expected = FLEET_DEFAULTS['drift']['gate_sigma']
    assert abs(sigma - expected) < 0.1 * expected
    same = CalibrationEpoch(index=3, timestamp=0.0, seed=11)
    assert advance_calibration(profile, same) == advance_calibration(profile, same)
