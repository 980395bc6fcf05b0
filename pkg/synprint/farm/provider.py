"""
========
Provider
========

The virtual provider runs jobs on the backends of a fleet and emits one
:py:class:`SyndromeRecord` per shot.

Shot ``k`` of job ``j`` draws from the stream ``(seed, j, k)``, so a
record stream depends on the job, the circuit, the profile and the seed,
never on how many worker processes produced it.
"""

import logging as log
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from synprint.core.circuit import Circuit, SyndromeLayout
from synprint.core.emitter import Emitter, NullEmitter
from synprint.core.simulator import CompiledCircuit, compile_circuit, run_compiled
from synprint.core.types import Document
from synprint.farm.noise import (
    CalibrationEpoch, NoiseProfile, advance_calibration)
from synprint.library.seeding import stream


@dataclass(frozen=True)
class Job:
    job_id: str
    backend_id: str
    mapping_id: str
    shots: int
    timestamp: float = 0.0
    epoch: int = 0
    provenance: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.shots < 1:
            raise ValueError(f'job {self.job_id} needs at least one shot')

    def to_dict(self) -> Document:
        return {
            'job_id': self.job_id,
            'backend_id': self.backend_id,
            'mapping_id': self.mapping_id,
            'shots': self.shots,
            'timestamp': self.timestamp,
            'epoch': self.epoch,
            'provenance': dict(self.provenance)}

    @classmethod
    def from_dict(cls, document: Mapping[str, Any]) -> 'Job':
        return cls(
            job_id=document['job_id'],
            backend_id=document['backend_id'],
            mapping_id=document['mapping_id'],
            shots=int(document['shots']),
            timestamp=float(document['timestamp']),
            epoch=int(document['epoch']),
            provenance=dict(document.get('provenance', {})))


@dataclass(frozen=True)
class SyndromeRecord:
    """One shot. ``backend_id`` is the label the provider reports;
    ``audit`` is the backend that actually ran the shot and is read only
    by evaluation code."""
    job_id: str
    backend_id: str
    mapping_id: str
    shot: int
    syndrome: str
    timestamp: float
    epoch: int
    audit: str = ''

    def to_dict(self) -> Document:
        return {
            'job_id': self.job_id,
            'backend_id': self.backend_id,
            'mapping_id': self.mapping_id,
            'shot': self.shot,
            'syndrome': self.syndrome,
            'timestamp': self.timestamp,
            'epoch': self.epoch,
            'audit': self.audit}

    @classmethod
    def from_dict(cls, document: Mapping[str, Any]) -> 'SyndromeRecord':
        return cls(
            job_id=document['job_id'],
            backend_id=document['backend_id'],
            mapping_id=document['mapping_id'],
            shot=int(document['shot']),
            syndrome=document['syndrome'],
            timestamp=float(document['timestamp']),
            epoch=int(document['epoch']),
            audit=document.get('audit', ''))


def check_placement(circuit: Circuit, profile: NoiseProfile) -> None:
    """Raises ValueError unless every qubit exists on the backend and
    every two-qubit gate sits on a coupled pair."""
    missing = [q for q in circuit.qubits if not 0 <= q < profile.num_qubits]
    if missing:
        raise ValueError(
            f'{profile.backend_id} has no qubits {missing}')
    bad = sorted(
        pair for pair in circuit.coupled_pairs()
        if not profile.graph.has_edge(*pair))
    if bad:
        raise ValueError(
            f'{profile.backend_id} does not couple qubit pairs {bad}')


def _run_chunk(
        compiled: CompiledCircuit,
        layout: SyndromeLayout,
        include_data: bool,
        seed: int,
        job_id: str,
        shots: Tuple[int, int],
) -> List[str]:
    start, stop = shots
    return [
        layout.extract(
            run_compiled(compiled, stream(seed, job_id, k)).bits,
            include_data)
        for k in range(start, stop)]


def _chunks(shots: int, parallel: int) -> List[Tuple[int, int]]:
    size = -(-shots // parallel)
    return [(start, min(start + size, shots)) for start in range(0, shots, size)]


def run_syndromes(
        job: Job,
        circuit: Circuit,
        layout: SyndromeLayout,
        profile: NoiseProfile,
        seed: int,
        include_data: bool = False,
        parallel: int = 1,
) -> List[str]:
    """Syndrome strings of every shot of ``job``, in shot order."""
    check_placement(circuit, profile)
    compiled = compile_circuit(circuit, profile)
    run = partial(_run_chunk, compiled, layout, include_data, seed, job.job_id)
    if parallel <= 1 or job.shots < 2 * parallel:
        return run((0, job.shots))
    with ProcessPoolExecutor(parallel) as executor:
        chunks = executor.map(run, _chunks(job.shots, parallel))
        return [syndrome for chunk in chunks for syndrome in chunk]


def _records(job: Job, syndromes: Sequence[str], actual: str) -> List[SyndromeRecord]:
    return [
        SyndromeRecord(
            job_id=job.job_id,
            backend_id=job.backend_id,
            mapping_id=job.mapping_id,
            shot=k,
            syndrome=syndrome,
            timestamp=job.timestamp,
            epoch=job.epoch,
            audit=actual)
        for k, syndrome in enumerate(syndromes)]


def execute_job(
        job: Job,
        circuit: Circuit,
        layout: SyndromeLayout,
        profile: NoiseProfile,
        seed: int,
        include_data: bool = False,
        parallel: int = 1,
) -> List[SyndromeRecord]:
    """Run ``job.shots`` shots of a placed circuit under the profile's
    current calibration.

    Raises:
        ValueError: The circuit does not fit the backend's coupling graph,
            or the job names a different backend than ``profile``.
    """
    if job.backend_id != profile.backend_id:
        raise ValueError(
            f'job {job.job_id} is for {job.backend_id}, '
            f'not {profile.backend_id}')
    syndromes = run_syndromes(
        job, circuit, layout, profile, seed, include_data, parallel)
    log.info(
        'executed %s on %s: %d shots', job.job_id, profile.backend_id, job.shots)
    return _records(job, syndromes, profile.backend_id)


def dishonest_route(
        job: Job,
        claimed: str,
        actual: str,
        fleet: Mapping[str, NoiseProfile],
        circuit: Circuit,
        layout: SyndromeLayout,
        seed: int,
        include_data: bool = False,
        parallel: int = 1,
) -> List[SyndromeRecord]:
    """Run ``job`` on ``actual`` and report it as run on ``claimed``.

    The true backend is kept in each record's ``audit`` field.

    Raises:
        ValueError: Either backend is not part of ``fleet``.
    """
    for backend_id in (claimed, actual):
        if backend_id not in fleet:
            raise ValueError(f'unknown backend {backend_id!r}')
    labeled = Job(
        job_id=job.job_id,
        backend_id=claimed,
        mapping_id=job.mapping_id,
        shots=job.shots,
        timestamp=job.timestamp,
        epoch=job.epoch,
        provenance=job.provenance)
    syndromes = run_syndromes(
        labeled, circuit, layout, fleet[actual], seed, include_data, parallel)
    if claimed != actual:
        log.info('routed %s from %s to %s', job.job_id, claimed, actual)
    return _records(labeled, syndromes, actual)


class Provider:
    """A fleet behind a simulated clock.

    Calibration epochs are applied to every backend when the clock
    passes their timestamp; jobs stamped earlier than the clock are
    rejected. Every submitted job is appended to ``jobs`` and its records
    go to ``emitter``.
    """

    def __init__(
            self,
            fleet: Sequence[NoiseProfile],
            seed: int,
            schedule: Sequence[CalibrationEpoch] = (),
            emitter: Optional[Emitter] = None,
            parallel: int = 1,
    ) -> None:
        if len(fleet) < 1:
            raise ValueError('a provider needs at least one backend')
        self.profiles: Dict[str, NoiseProfile] = {
            profile.backend_id: profile for profile in fleet}
        if len(self.profiles) != len(fleet):
            raise ValueError('backend ids must be unique')
        times = [epoch.timestamp for epoch in schedule]
        if times != sorted(times) or len(set(times)) != len(times):
            raise ValueError('calibration epochs must be strictly increasing in time')
        self.seed = seed
        self.pending: List[CalibrationEpoch] = list(schedule)
        self.emitter = emitter or NullEmitter({})
        self.parallel = parallel
        self.clock = 0.0
        self.epoch = max((p.epoch for p in fleet), default=0)
        self.jobs: List[Job] = []
        self.audit: Dict[str, str] = {}

    @property
    def backends(self) -> List[str]:
        return sorted(self.profiles)

    def advance_to(self, timestamp: float) -> None:
        if timestamp < self.clock:
            raise ValueError(
                f'simulated time runs forward: {timestamp} < {self.clock}')
        while self.pending and self.pending[0].timestamp <= timestamp:
            epoch = self.pending.pop(0)
            if epoch.index <= self.epoch:
                continue
            self.profiles = {
                backend_id: advance_calibration(profile, epoch)
                for backend_id, profile in self.profiles.items()}
            self.epoch = epoch.index
            log.info(
                'calibration epoch %d applied at t=%s', epoch.index, epoch.timestamp)
        self.clock = timestamp

    def submit(
            self,
            circuit: Circuit,
            layout: SyndromeLayout,
            backend_id: str,
            shots: int,
            timestamp: float,
            mapping_id: str = '',
            provenance: Optional[Dict[str, Any]] = None,
            route_to: Optional[str] = None,
            include_data: bool = False,
    ) -> List[SyndromeRecord]:
        """Run a placed circuit, honestly unless ``route_to`` names
        another backend."""
        if backend_id not in self.profiles:
            raise ValueError(f'unknown backend {backend_id!r}')
        self.advance_to(timestamp)
        job = Job(
            job_id=f'job-{len(self.jobs):05d}',
            backend_id=backend_id,
            mapping_id=mapping_id,
            shots=shots,
            timestamp=timestamp,
            epoch=self.epoch,
            provenance=provenance or {})
        actual = route_to or backend_id
        records = dishonest_route(
            job, backend_id, actual, self.profiles, circuit, layout,
            self.seed, include_data, self.parallel)
        self.jobs.append(job)
        self.audit[job.job_id] = actual
        for record in records:
            self.emitter.emit(record.to_dict())
        return records
