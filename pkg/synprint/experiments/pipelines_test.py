import os
from typing import Any, Dict

import pytest

from synprint.core.control import EXIT_FLAGGED, EXIT_OK, Control
from synprint.core.directories import JOB_INDEX, MODEL_FILE, PROFILES_DIR
from synprint.core.emitter import read_records
from synprint.experiments.pipelines import (
    run_causal, run_collect, run_curve, run_drift, run_fleet,
    run_specificity, run_states, run_table, run_train, run_verify)
from synprint.experiments.scenario import Scenario
from synprint.library.filepath import (
    read_csv_file, read_json_file, write_json_file)

QUICK_HYPER = {'hidden': 16, 'max_epochs': 15, 'batch_size': 64}
REPETITION = {
    'code': {'family': 'Repetition'},
    'initial': ['0'],
    'logical_gates': ['X(0)'],
    'stabilize_rounds': 2,
}


def small_config(**overrides: Any) -> Dict[str, Any]:
    config: Dict[str, Any] = {
        'seed': 11,
        'fleet': {'n_backends': 3, 'topology': {'template': 'grid', 'rows': 3, 'cols': 3}},
        'circuits': [REPETITION],
        'schedule': {
            'shots': 64,
            'jobs': {'train': 3, 'test': 2, 'verify': 2}},
        'routing': [
            {'job': 1, 'backend': 'backend-00', 'actual': 'backend-02'}],
        'train': {'hyper': QUICK_HYPER, 'validation_fraction': 0.25},
        'curve': {'grid': [1, 5, 20, 500], 'trials': 20},
        'drift': {'days': [1, 2, 3], 'jobs_per_day': 1, 'shots': 64},
        'causal': {'seeds': 1, 'jobs': {'train': 2, 'test': 1}, 'shots': 64},
        'specificity': {'k': 2, 'jobs': {'train': 1, 'test': 1}, 'shots': 64},
        'table': {
            'codes': [{'family': 'Steane'}],
            'topology': {'template': 'all_to_all', 'num_qubits': 13},
            'train_days': [1],
            'test_day': 2,
            'jobs_per_day': 1,
            'shots': 80,
            'aggregation': 'mean:8'},
        'states': {
            'states': ['0', '+'],
            'topology': {'template': 'all_to_all', 'num_qubits': 6},
            'jobs': {'train': 1, 'test': 1},
            'shots': 32},
    }
    config.update(overrides)
    return config


def small_scenario(out_dir: str, **overrides: Any) -> Scenario:
    return Scenario(small_config(**overrides), out_dir=out_dir)


def collected(out_dir: str, **overrides: Any) -> Scenario:
    scenario = small_scenario(out_dir, **overrides)
    run_fleet(scenario)
    run_collect(scenario)
    return scenario


def test_fleet_is_byte_identical(tmp_path: Any) -> None:
    first = small_scenario(str(tmp_path / 'a'))
    second = small_scenario(str(tmp_path / 'b'))
    run_fleet(first)
    run_fleet(second)
    names = sorted(os.listdir(tmp_path / 'a' / PROFILES_DIR))
    assert names == ['backend-00.json', 'backend-01.json', 'backend-02.json']
    for name in names:
        a = (tmp_path / 'a' / PROFILES_DIR / name).read_bytes()
        b = (tmp_path / 'b' / PROFILES_DIR / name).read_bytes()
        assert a == b


def test_collect_counts_and_audit(tmp_path: Any) -> None:
    scenario = collected(str(tmp_path))
    records = list(read_records(os.path.join(scenario.out_dir, 'shots.jsonl')))
    # 3 backends x 7 jobs x 64 shots
    assert len(records) == 3 * 7 * 64
    index = read_json_file(os.path.join(scenario.out_dir, JOB_INDEX))
    assert index['metadata']['seed'] == 11
    routed = [
        job for job in index['jobs']
        if job['provenance']['role'] == 'verify'
        and job['provenance']['index'] == 1
        and job['backend_id'] == 'backend-00']
    assert len(routed) == 1
    assert routed[0]['audit'] == 'backend-02'
    honest = [job for job in index['jobs'] if job is not routed[0]]
    assert all(job['audit'] == job['backend_id'] for job in honest)
    assert os.path.exists(os.path.join(scenario.out_dir, 'circuits', 'Repetition.json'))


def test_include_data_widens_records(tmp_path: Any) -> None:
    plain = collected(str(tmp_path / 'a'))
    train = dict(small_config()['train'], include_data=True)
    wide = collected(str(tmp_path / 'b'), train=train)
    assert wide.include_data
    widths = {}
    for scenario in (plain, wide):
        records = read_records(os.path.join(scenario.out_dir, 'shots.jsonl'))
        widths[scenario.include_data] = {len(r['syndrome']) for r in records}
    # two rounds of two checks, then three data bits
    assert widths == {False: {4}, True: {4 + 3}}
    report = run_train(wide)
    assert report['rows']['fit'] + report['rows']['validation'] == 3 * 3 * 64


def test_collect_is_reproducible(tmp_path: Any) -> None:
    first = collected(str(tmp_path / 'a'), shot_log='shots.jsonl.gz')
    second = collected(str(tmp_path / 'b'), shot_log='shots.jsonl.gz')
    assert first.out_dir != second.out_dir
    a = (tmp_path / 'a' / 'shots.jsonl.gz').read_bytes()
    b = (tmp_path / 'b' / 'shots.jsonl.gz').read_bytes()
    assert a == b


def test_collect_needs_a_fleet(tmp_path: Any) -> None:
    with pytest.raises(FileNotFoundError):
        run_collect(small_scenario(str(tmp_path)))


def test_train_verify_curve(tmp_path: Any) -> None:
    scenario = collected(str(tmp_path))
    report = run_train(scenario)
    assert os.path.exists(os.path.join(scenario.out_dir, MODEL_FILE))
    assert report['labels']['vocabulary'] == ['backend-00', 'backend-01', 'backend-02']
    assert report['metadata']['definitions']['ties'] == 'lowest label index'
    assert report['rows']['fit'] + report['rows']['validation'] == 3 * 3 * 64

    summary = run_verify(scenario)
    rows = read_csv_file(os.path.join(scenario.out_dir, 'verify.csv'))
    assert len(rows) == len(summary['jobs']) == 3 * 2
    routed = [row for row in rows if row['actual'] != row['claimed']]
    assert [(row['claimed'], row['actual']) for row in routed] == [
        ('backend-00', 'backend-02')]
    flagged = {row['job_id'] for row in rows if row['verdict'] == 'flagged'}
    assert flagged == set(summary['flagged'])

    result = run_curve(scenario)
    # two test jobs of 64 shots per backend leave room for 128 shots
    assert result['grid'] == [1, 5, 20]
    curve = read_csv_file(os.path.join(scenario.out_dir, 'curve.csv'))
    assert len(curve) == 3 * (3 + 1)
    assert {row['class'] for row in curve} == {
        'backend-00', 'backend-01', 'backend-02', 'mean'}
    assert all(0.0 <= float(row['accuracy']) <= 1.0 for row in curve)


def test_verify_needs_a_model(tmp_path: Any) -> None:
    scenario = collected(str(tmp_path))
    with pytest.raises(FileNotFoundError):
        run_verify(scenario)


def test_control_runs_the_chain(tmp_path: Any) -> None:
    path = str(tmp_path / 'scenario.json')
    write_json_file(path, small_config())
    out = str(tmp_path / 'out')
    for command in ('fleet', 'collect', 'train'):
        assert Control(args=[command, '--scenario', path, '--out', out]).run() == EXIT_OK
    control = Control(args=['verify', '--scenario', path, '--out', out])
    code = control.run()
    assert control.output_data is not None
    expected = EXIT_FLAGGED if control.output_data['flagged'] else EXIT_OK
    assert code == expected


def test_drift_outputs(tmp_path: Any) -> None:
    scenario = collected(str(tmp_path))
    summary = run_drift(scenario)
    report = read_json_file(os.path.join(scenario.out_dir, 'cluster_report.json'))
    assert report['jobs'] == 3 * 7
    assert report['change_detection']['held_out_backend'] == 'backend-02'
    assert len(report['sweep']['grid']) == 11 * 4
    assert -1.0 <= summary['ari'] <= 1.0
    pairs = read_csv_file(os.path.join(scenario.out_dir, 'pairs.csv'))
    assert len(pairs) == 21 * 20 // 2
    drift = read_csv_file(os.path.join(scenario.out_dir, 'drift.csv'))
    assert [row['train_days'] for row in drift] == ['1', '1+2']
    assert {row['test_day'] for row in drift} == {'3'}


def test_causal_outputs(tmp_path: Any) -> None:
    scenario = small_scenario(str(tmp_path))
    summary = run_causal(scenario)
    assert set(summary['mean_accuracy']) == {'ERaD', 'FullEmulation'}
    rows = read_csv_file(os.path.join(scenario.out_dir, 'causal.csv'))
    assert [row['tier'] for row in rows] == [
        'ERaD', 'FullEmulation', 'ERaD', 'FullEmulation']
    assert [row['seed'] for row in rows][2:] == ['mean', 'mean']
    pairs = read_csv_file(os.path.join(scenario.out_dir, 'causal_pairs.csv'))
    # two backends with three jobs each, per tier
    assert len(pairs) == 2 * (6 * 5 // 2)


def test_specificity_outputs(tmp_path: Any) -> None:
    scenario = small_scenario(str(tmp_path))
    summary = run_specificity(scenario)
    assert summary['mappings'] == 2
    rows = read_csv_file(os.path.join(scenario.out_dir, 'specificity.csv'))
    assert [row['specificity'] for row in rows] == [
        'backend/backend', 'mapping/backend', 'mapping/mapping']
    assert abs(float(rows[2]['chance']) - 1 / 6) < 1e-12


def test_table_outputs(tmp_path: Any) -> None:
    scenario = small_scenario(str(tmp_path))
    summary = run_table(scenario)
    assert list(summary['codes']) == ['Steane']
    rows = read_csv_file(os.path.join(scenario.out_dir, 'table.csv'))
    assert len(rows) == 1
    # one 80-shot job per backend on the test day, averaged over 8 shots
    assert rows[0]['samples'] == str(3 * 10)


def test_states_outputs(tmp_path: Any) -> None:
    scenario = small_scenario(str(tmp_path))
    run_states(scenario)
    rows = read_csv_file(os.path.join(scenario.out_dir, 'states.csv'))
    assert [(row['state'], row['plan']) for row in rows] == [
        ('0', 'trivial'), ('0', 'random'), ('+', 'trivial'), ('+', 'random')]


# acceptance on the default scenario

@pytest.fixture(scope='module')
def default_collection(tmp_path_factory: Any) -> Scenario:
    scenario = Scenario(
        {'drift': {'seeds': 5}},
        out_dir=str(tmp_path_factory.mktemp('default')))
    run_fleet(scenario)
    run_collect(scenario)
    return scenario


def beats_chance(row: Dict[str, str], sigmas: float = 3.0) -> bool:
    return float(row['accuracy']) >= (
        float(row['chance']) + sigmas * float(row['chance_sigma']))


@pytest.mark.slow
def test_default_curve_reaches_certainty(default_collection: Scenario) -> None:
    scenario = default_collection
    report = run_train(scenario)
    assert report['validation_accuracy'] > report['chance']
    run_curve(scenario)
    curve = read_csv_file(os.path.join(scenario.out_dir, 'curve.csv'))
    for backend_id in scenario.backend_ids:
        accuracies = [
            float(row['accuracy']) for row in curve
            if row['class'] == backend_id and int(row['n_shots']) <= 2000]
        assert max(accuracies) >= 0.99, backend_id


@pytest.mark.slow
def test_default_clusters_and_drift(default_collection: Scenario) -> None:
    scenario = default_collection
    summary = run_drift(scenario)
    assert summary['overlap'] <= 0.05
    assert summary['ari'] >= 0.8
    report = read_json_file(os.path.join(scenario.out_dir, 'cluster_report.json'))
    detection = report['change_detection']
    assert detection['honest_flag_rate'] <= 0.05
    assert detection['unseen_flag_rate'] >= 0.95
    drift = read_csv_file(os.path.join(scenario.out_dir, 'drift.csv'))
    assert len(drift) == 2 * 5
    assert summary['p_value'] is not None and summary['p_value'] < 0.05


@pytest.mark.slow
def test_default_specificity(tmp_path: Any) -> None:
    scenario = Scenario(out_dir=str(tmp_path))
    run_specificity(scenario)
    rows = {
        row['specificity']: row
        for row in read_csv_file(os.path.join(scenario.out_dir, 'specificity.csv'))}
    assert all(beats_chance(row) for row in rows.values())
    gap = (float(rows['backend/backend']['accuracy'])
           - float(rows['mapping/backend']['accuracy']))
    assert abs(gap) <= 0.05


@pytest.mark.slow
def test_full_emulation_is_easier_than_relaxation(tmp_path: Any) -> None:
    summary = run_causal(Scenario(out_dir=str(tmp_path)))
    accuracy = summary['mean_accuracy']
    assert accuracy['FullEmulation'] >= accuracy['ERaD']


@pytest.mark.slow
def test_default_table_beats_chance(tmp_path: Any) -> None:
    scenario = Scenario(out_dir=str(tmp_path))
    run_table(scenario)
    rows = read_csv_file(os.path.join(scenario.out_dir, 'table.csv'))
    assert [row['code'] for row in rows] == ['Shor', 'Steane', 'Surface-d5']
    for row in rows:
        assert beats_chance(row), row['code']
