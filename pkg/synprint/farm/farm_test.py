import os
import tempfile
from typing import Tuple

import numpy as np
import pytest

from synprint.codes.code import (
    CodeFamily, CodeSpec, LogicalCircuitSpec, LogicalState, build_circuit)
from synprint.core.circuit import Circuit, SyndromeLayout
from synprint.core.emitter import JsonlEmitter, RAMEmitter, read_records
from synprint.farm.noise import (
    Calibration,
    NoiseProfile,
    NoiseTier,
    calibration_schedule,
    generate_fleet,
    load_fleet,
    save_profile,
)
from synprint.farm.provider import (
    Job,
    Provider,
    SyndromeRecord,
    dishonest_route,
    execute_job,
)
from synprint.library.topology import all_to_all, heavy_hex, plan_mappings
from synprint.library.seeding import stream


def repetition_circuit() -> Tuple[Circuit, SyndromeLayout]:
    spec = LogicalCircuitSpec(
        code=CodeSpec(CodeFamily.REPETITION), initial=(LogicalState.ZERO,))
    return build_circuit(spec)


def quiet_profile(n: int = 5) -> NoiseProfile:
    graph = all_to_all(n)
    calibration = Calibration(
        t1=np.full(n, 1.0), t2=np.full(n, 1.0),
        sq_error=np.zeros(n), sq_duration=0.0,
        cx_error=np.zeros(len(graph.edges)), cx_duration=0.0,
        p01=np.zeros(n), p10=np.zeros(n))
    return NoiseProfile(
        backend_id='quiet', tier=NoiseTier.ERAD, graph=graph,
        base=calibration, current=calibration)


def test_noiseless_job_gives_zero_syndromes() -> None:
    circuit, layout = repetition_circuit()
    job = Job(job_id='j0', backend_id='quiet', mapping_id='m', shots=512)
    records = execute_job(job, circuit, layout, quiet_profile(), seed=1)
    assert len(records) == 512
    assert {len(r.syndrome) for r in records} == {len(layout)}
    assert all(set(r.syndrome) == {'0'} for r in records)
    assert [r.shot for r in records] == list(range(512))


def test_job_needs_a_shot() -> None:
    with pytest.raises(ValueError):
        Job(job_id='j', backend_id='b', mapping_id='m', shots=0)


def test_records_are_reproducible() -> None:
    circuit, layout = repetition_circuit()
    profile = generate_fleet(2, all_to_all(5), NoiseTier.FULL, seed=3)[0]
    job = Job(job_id='j1', backend_id=profile.backend_id, mapping_id='m', shots=200)
    first = execute_job(job, circuit, layout, profile, seed=7)
    second = execute_job(job, circuit, layout, profile, seed=7)
    assert first == second
    other = execute_job(job, circuit, layout, profile, seed=8)
    assert [r.syndrome for r in other] != [r.syndrome for r in first]


def test_parallel_execution_matches_serial() -> None:
    circuit, layout = repetition_circuit()
    profile = generate_fleet(2, all_to_all(5), NoiseTier.FULL, seed=4)[1]
    job = Job(job_id='j2', backend_id=profile.backend_id, mapping_id='m', shots=64)
    serial = execute_job(job, circuit, layout, profile, seed=9)
    parallel = execute_job(job, circuit, layout, profile, seed=9, parallel=2)
    assert serial == parallel


def test_placement_is_checked() -> None:
    circuit, layout = repetition_circuit()
    profile = generate_fleet(2, heavy_hex(1, 1), NoiseTier.FULL, seed=5)[0]
    job = Job(job_id='j3', backend_id=profile.backend_id, mapping_id='m', shots=1)
    with pytest.raises(ValueError):
        execute_job(job, circuit, layout, profile, seed=1)
    mapping = plan_mappings(circuit, profile.graph, 'random', 1, stream(1))[0]
    placed = circuit.relabeled(mapping.as_dict())
    assert len(execute_job(job, placed, layout, profile, seed=1)) == 1


def test_dishonest_route_keeps_audit() -> None:
    circuit, layout = repetition_circuit()
    fleet = {p.backend_id: p for p in generate_fleet(
        3, all_to_all(5), NoiseTier.FULL, seed=6)}
    job = Job(job_id='j4', backend_id='backend-00', mapping_id='m', shots=50)
    honest = execute_job(job, circuit, layout, fleet['backend-00'], seed=2)
    same = dishonest_route(
        job, 'backend-00', 'backend-00', fleet, circuit, layout, seed=2)
    assert honest == same
    routed = dishonest_route(
        job, 'backend-00', 'backend-02', fleet, circuit, layout, seed=2)
    assert {r.backend_id for r in routed} == {'backend-00'}
    assert {r.audit for r in routed} == {'backend-02'}
    with pytest.raises(ValueError):
        dishonest_route(job, 'backend-00', 'backend-09', fleet, circuit, layout, 2)


def test_provider_applies_calibration_epochs() -> None:
    circuit, layout = repetition_circuit()
    fleet = generate_fleet(2, all_to_all(5), NoiseTier.FULL, seed=7)
    day = 86400.0
    schedule = calibration_schedule(10, day, seed=7)
    emitter = RAMEmitter({})
    provider = Provider(fleet, seed=7, schedule=schedule, emitter=emitter)
    epochs = []
    for k in range(10):
        records = provider.submit(
            circuit, layout, 'backend-01', shots=4, timestamp=k * day + 60.0)
        epochs.append(records[0].epoch)
    assert epochs == list(range(1, 11))
    assert len(emitter.get_data()) == 40
    assert provider.profiles['backend-01'].base == fleet[1].base
    with pytest.raises(ValueError):
        provider.submit(circuit, layout, 'backend-01', shots=1, timestamp=0.0)


def test_shot_log_round_trip() -> None:
    circuit, layout = repetition_circuit()
    profile = generate_fleet(2, all_to_all(5), NoiseTier.FULL, seed=8)[0]
    job = Job(job_id='j5', backend_id=profile.backend_id, mapping_id='m', shots=20)
    records = execute_job(job, circuit, layout, profile, seed=3)
    with tempfile.TemporaryDirectory() as out:
        contents = []
        for run in ('a', 'b'):
            path = os.path.join(out, run, 'shots.jsonl.gz')
            with JsonlEmitter({'path': path}) as emitter:
                emitter.emit_all([r.to_dict() for r in records])
            with open(path, 'rb') as f:
                contents.append(f.read())
            loaded = [SyndromeRecord.from_dict(d) for d in read_records(path)]
            assert loaded == records
        assert contents[0] == contents[1]


def test_profile_store_round_trip() -> None:
    fleet = generate_fleet(3, heavy_hex(1, 1), NoiseTier.FULL, seed=9)
    with tempfile.TemporaryDirectory() as out:
        for profile in fleet:
            save_profile(profile, out)
        assert load_fleet(out) == fleet
    with tempfile.TemporaryDirectory() as out:
        with pytest.raises(FileNotFoundError):
            load_fleet(out)
