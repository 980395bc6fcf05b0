"""
=========
Pipelines
=========

The experiments behind the commands of ``synprint``. Every command takes
a :py:class:`~synprint.experiments.scenario.Scenario`, writes its
artifacts under the scenario's output directory and returns a summary
document.

``fleet``, ``collect``, ``train``, ``verify`` and ``curve`` chain through
the files in the output directory. ``drift`` clusters the collected shot
log; its training comparison, like the ``causal``, ``specificity``,
``table`` and ``states`` experiments, collects shots in memory from
fleets regenerated from the scenario seed.
"""

import logging as log
import math
import os
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from synprint import __version__
from synprint.codes.code import LogicalCircuitSpec, build_circuit
from synprint.core.circuit import Circuit, SyndromeLayout, circuit_document
from synprint.core.directories import (
    CAUSAL_PAIRS_TABLE, CAUSAL_TABLE, CIRCUITS_DIR, CLUSTER_REPORT,
    CURVE_TABLE, DRIFT_TABLE, JOB_INDEX, METRICS_TABLE, MODEL_FILE,
    PAIRS_TABLE, SCENARIO_FILE, SPECIFICITY_TABLE, STATES_TABLE,
    TRAIN_REPORT, VERIFY_TABLE)
from synprint.core.emitter import get_emitter, read_records
from synprint.core.types import Document
from synprint.experiments.scenario import ROLES, Scenario
from synprint.farm.noise import (
    NoiseProfile, NoiseTier, generate_fleet, load_fleet, save_profile)
from synprint.farm.provider import Job, Provider, SyndromeRecord
from synprint.fingerprint.evaluation import (
    CURVE_HEADER, METRIC_DEFINITIONS, accuracy_vs_shots, aggregate_mode,
    calibrate_class_weights, chance_sigma, recalls, table_metrics)
from synprint.fingerprint.features import (
    Aggregation, FeatureSet, LabelSpec, Specificity, featurize,
    group_by_job, record_label, shuffled_labels)
from synprint.fingerprint.mlp import (
    ClassifierModel, load_model, save_model, train)
from synprint.fingerprint.unsupervised import (
    PAIR_HEADER, dbscan, job_vectors, pairwise_distances,
    separation_stat, sweep_dbscan, time_correlation, verdict)
from synprint.library.filepath import (
    is_empty_dir, makedirs, read_json_file, write_csv_file, write_json_file)
from synprint.library.seeding import derive_seed, stream
from synprint.library.topology import ConnectivityGraph, Mapping, plan_mappings


def report_metadata(scenario: Scenario) -> Document:
    return {
        'seed': scenario.seed,
        'version': __version__,
        'definitions': dict(METRIC_DEFINITIONS)}


def out_path(scenario: Scenario, name: str) -> str:
    return os.path.join(scenario.out_dir, name)


def check_out_dir(out_dir: str, force: bool) -> None:
    if not force and not is_empty_dir(out_dir):
        raise ValueError(
            f'output directory {out_dir} is not empty; pass --force to '
            f'write into it')


# placement and collection

@dataclass(frozen=True)
class PlacedCircuit:
    """A logical circuit placed on physical qubits."""
    spec: LogicalCircuitSpec
    mapping: Mapping
    circuit: Circuit
    layout: SyndromeLayout

    @property
    def mapping_id(self) -> str:
        return self.mapping.mapping_id

    def to_dict(self) -> Document:
        document = circuit_document(self.circuit, self.layout)
        document['spec'] = self.spec.to_dict()
        document['mapping'] = self.mapping.to_dict()
        return document


def place(
        spec: LogicalCircuitSpec,
        graph: ConnectivityGraph,
        plan: str,
        k: int,
        rng: np.random.Generator,
) -> List[PlacedCircuit]:
    circuit, layout = build_circuit(spec)
    return [
        PlacedCircuit(spec, mapping, circuit.relabeled(mapping.as_dict()), layout)
        for mapping in plan_mappings(circuit, graph, plan, k, rng)]


def build_fleet(
        scenario: Scenario,
        seed: Optional[int] = None,
        tier: Optional[NoiseTier] = None,
        graph: Optional[ConnectivityGraph] = None,
) -> List[NoiseProfile]:
    return generate_fleet(
        scenario.n_backends,
        graph or scenario.graph(),
        scenario.tier if tier is None else tier,
        scenario.seed if seed is None else seed,
        scenario.fleet_parameters)


def replicate_seeds(scenario: Scenario, count: int) -> List[int]:
    """The scenario seed followed by ``count - 1`` seeds derived from it."""
    return [scenario.seed] + [
        scenario.derive('replicate', r) for r in range(1, count)]


def memory_provider(
        scenario: Scenario,
        fleet: Sequence[NoiseProfile],
        seed: int,
        epochs: Optional[int] = None,
) -> Provider:
    return Provider(
        fleet,
        derive_seed(seed, 'shots'),
        scenario.calibration(seed, epochs),
        parallel=scenario.parallel)


def submit_round(
        provider: Provider,
        placements: Sequence[PlacedCircuit],
        timestamp: float,
        shots: int,
        provenance: Dict[str, Any],
        routing: Optional[Dict[str, str]] = None,
        include_data: bool = False,
) -> List[SyndromeRecord]:
    """One job per backend and placement, all stamped ``timestamp``.
    ``routing`` maps claimed backends to the backends that run their jobs."""
    routing = routing or {}
    records: List[SyndromeRecord] = []
    for backend_id in provider.backends:
        for placed in placements:
            records.extend(provider.submit(
                placed.circuit,
                placed.layout,
                backend_id,
                shots,
                timestamp,
                mapping_id=placed.mapping_id,
                provenance=dict(provenance, circuit=placed.spec.name),
                route_to=routing.get(backend_id),
                include_data=include_data))
    return records


def run_schedule(
        provider: Provider,
        placements: Sequence[PlacedCircuit],
        counts: Dict[str, int],
        start: float,
        interval: float,
        shots: int,
        routing: Optional[Dict[Tuple[int, str], str]] = None,
        include_data: bool = False,
) -> List[SyndromeRecord]:
    """Rounds of jobs for each role in turn, one round every ``interval``
    seconds. ``routing`` is keyed by ``(verify job index, claimed
    backend)``."""
    routing = routing or {}
    records: List[SyndromeRecord] = []
    slot = 0
    for role in ROLES:
        for index in range(counts.get(role, 0)):
            routes = {
                claimed: actual
                for (job, claimed), actual in routing.items()
                if role == 'verify' and job == index}
            records.extend(submit_round(
                provider, placements, start + slot * interval, shots,
                {'role': role, 'index': index}, routes, include_data))
            slot += 1
    return records


def run_days(
        provider: Provider,
        placements: Sequence[PlacedCircuit],
        days: Sequence[int],
        jobs_per_day: int,
        shots: int,
        day_length: float,
        include_data: bool = False,
) -> Dict[int, List[SyndromeRecord]]:
    """``jobs_per_day`` evenly spaced rounds inside each listed day.
    Day ``d`` runs under calibration epoch ``d``."""
    by_day: Dict[int, List[SyndromeRecord]] = {}
    for day in sorted(days):
        records: List[SyndromeRecord] = []
        for index in range(jobs_per_day):
            timestamp = (day - 1 + (index + 0.5) / jobs_per_day) * day_length
            records.extend(submit_round(
                provider, placements, timestamp, shots,
                {'role': 'day', 'day': day, 'index': index},
                include_data=include_data))
        by_day[day] = records
    return by_day


def records_by_role(
        jobs: Sequence[Job],
        records: Sequence[SyndromeRecord],
) -> Dict[str, List[SyndromeRecord]]:
    roles = {job.job_id: job.provenance.get('role', '') for job in jobs}
    split: Dict[str, List[SyndromeRecord]] = {}
    for record in records:
        split.setdefault(roles[record.job_id], []).append(record)
    return split


# scoring

@dataclass(frozen=True)
class Scored:
    model: ClassifierModel
    truth: np.ndarray
    predicted: np.ndarray

    @property
    def classes(self) -> int:
        return len(self.model.label_spec)

    @property
    def accuracy(self) -> float:
        return float(np.mean(self.truth == self.predicted))

    @property
    def chance(self) -> float:
        return 1.0 / self.classes

    @property
    def sigma(self) -> float:
        return chance_sigma(self.classes, len(self.truth))


def score_split(
        train_records: Sequence[SyndromeRecord],
        test_records: Sequence[SyndromeRecord],
        specificity: Specificity,
        aggregation: Aggregation,
        seed: int,
        hyper: Optional[dict] = None,
) -> Scored:
    """Train on one set of records and predict another."""
    label_spec = LabelSpec.from_records(train_records, specificity)
    training = featurize(train_records, aggregation, label_spec)
    model = train(
        training.features, training.labels, label_spec,
        stream(seed, 'mlp'), hyper=hyper)
    testing = featurize(test_records, aggregation, label_spec)
    return Scored(model, testing.labels, model.predict(testing.features))


# fleet and collect

def run_fleet(scenario: Scenario) -> Document:
    fleet = build_fleet(scenario)
    paths = [save_profile(profile, scenario.out_dir) for profile in fleet]
    write_json_file(out_path(scenario, SCENARIO_FILE), scenario.to_dict())
    return {'profiles': paths}


def shot_log_path(scenario: Scenario) -> str:
    return out_path(scenario, scenario.config['shot_log'])


def run_collect(scenario: Scenario) -> Document:
    """Run the job schedule on the persisted fleet.

    Raises:
        FileNotFoundError: The fleet has not been generated, or lacks a
            backend the scenario names.
    """
    fleet = load_fleet(scenario.out_dir)
    missing = set(scenario.backend_ids) - {p.backend_id for p in fleet}
    if missing:
        raise FileNotFoundError(
            f'missing profiles for {sorted(missing)} in {scenario.out_dir}')
    fleet = [p for p in fleet if p.backend_id in set(scenario.backend_ids)]
    graph = fleet[0].graph
    plan, k = scenario.mapping_plan
    rng = stream(scenario.seed, 'mapping')
    placements: List[PlacedCircuit] = []
    documents: Dict[str, List[Document]] = {}
    for spec in scenario.circuits:
        placed = place(spec, graph, plan, k, rng)
        placements.extend(placed)
        documents.setdefault(spec.code.key, []).extend(p.to_dict() for p in placed)
    makedirs(scenario.out_dir, CIRCUITS_DIR)
    for key, document in documents.items():
        write_json_file(
            os.path.join(scenario.out_dir, CIRCUITS_DIR, f'{key}.json'), document)

    with get_emitter({'type': 'jsonl', 'path': shot_log_path(scenario)}) as emitter:
        provider = Provider(
            fleet,
            scenario.derive('shots'),
            scenario.calibration(),
            emitter=emitter,
            parallel=scenario.parallel)
        records = run_schedule(
            provider, placements, scenario.job_counts(), scenario.start,
            scenario.interval, scenario.shots, scenario.routing,
            include_data=scenario.include_data)

    write_json_file(out_path(scenario, JOB_INDEX), {
        'metadata': report_metadata(scenario),
        'jobs': [
            dict(job.to_dict(), audit=provider.audit[job.job_id])
            for job in provider.jobs]})
    log.info('collected %d jobs, %d records', len(provider.jobs), len(records))
    return {'jobs': len(provider.jobs), 'records': len(records)}


def load_collection(scenario: Scenario) -> Tuple[List[SyndromeRecord], Dict[str, Job]]:
    index = read_json_file(out_path(scenario, JOB_INDEX))
    jobs = {document['job_id']: Job.from_dict(document) for document in index['jobs']}
    records = [
        SyndromeRecord.from_dict(document)
        for document in read_records(shot_log_path(scenario))]
    return records, jobs


def select(
        records: Sequence[SyndromeRecord],
        jobs: Dict[str, Job],
        spec: LogicalCircuitSpec,
        role: Optional[str] = None,
) -> List[SyndromeRecord]:
    """Records of ``spec``'s jobs, restricted to ``role`` if given."""
    chosen = {
        job_id for job_id, job in jobs.items()
        if job.provenance.get('circuit') == spec.name
        and (role is None or job.provenance.get('role') == role)}
    selected = [r for r in records if r.job_id in chosen]
    if not selected:
        raise ValueError(f'no {role or "collected"} jobs for circuit {spec.name}')
    return selected


# supervised pipeline

def validation_mask(length: int, fraction: float, rng: np.random.Generator) -> np.ndarray:
    """``True`` for the rows kept for fitting."""
    if not 0 <= fraction < 1:
        raise ValueError(f'validation fraction must be in [0, 1), got {fraction}')
    return rng.random(length) >= fraction


def _optional(values: np.ndarray) -> List[Optional[float]]:
    return [None if np.isnan(v) else float(v) for v in values]


def run_train(scenario: Scenario) -> Document:
    records, jobs = load_collection(scenario)
    training_records = select(records, jobs, scenario.fingerprint_circuit, 'train')
    label_spec = LabelSpec.from_records(training_records, scenario.specificity)
    data = featurize(training_records, scenario.aggregation, label_spec)
    settings = scenario.section('train')
    hyper = settings['hyper']
    rng = stream(scenario.seed, 'validation')
    mask = validation_mask(len(data), float(settings['validation_fraction']), rng)
    fit, held = data.subset(mask), data.subset(~mask)

    def trainer(weights: np.ndarray) -> ClassifierModel:
        return train(
            fit.features, fit.labels, label_spec, stream(scenario.seed, 'mlp'),
            class_weights=weights, hyper=hyper)

    history: List[Document] = []
    if settings['calibrate_weights'] and len(held):
        model, _, history = calibrate_class_weights(
            trainer, held.features, held.labels, len(label_spec))
    else:
        model = trainer(np.ones(len(label_spec)))
    save_model(model, out_path(scenario, MODEL_FILE))

    report: Document = {
        'metadata': report_metadata(scenario),
        'labels': label_spec.to_dict(),
        'aggregation': scenario.aggregation.k,
        'rows': {'fit': len(fit), 'validation': len(held)},
        'final_loss': model.final_loss,
        'epochs': model.epochs,
        'class_weights': model.class_weights.tolist(),
        'calibration': history,
        'training_accuracy': float(np.mean(model.predict(fit.features) == fit.labels)),
        'validation_accuracy': None,
        'validation_recalls': None,
        'chance': 1.0 / len(label_spec)}
    if len(held):
        predicted = model.predict(held.features)
        report['validation_accuracy'] = float(np.mean(predicted == held.labels))
        report['validation_recalls'] = _optional(
            recalls(held.labels, predicted, len(label_spec)))
        if settings['shuffled_control']:
            report['shuffled_accuracy'] = shuffled_control(
                fit, held, label_spec, scenario.seed, hyper)
    write_json_file(out_path(scenario, TRAIN_REPORT), report)
    return report


def shuffled_control(
        fit: FeatureSet,
        held: FeatureSet,
        label_spec: LabelSpec,
        seed: int,
        hyper: Optional[dict],
) -> float:
    """Validation accuracy of a model fit to permuted labels."""
    labels = shuffled_labels(fit.labels, stream(seed, 'shuffle'))
    model = train(fit.features, labels, label_spec, stream(seed, 'mlp'), hyper=hyper)
    return float(np.mean(model.predict(held.features) == held.labels))


VERIFY_HEADER = ('job_id', 'claimed', 'predicted', 'agreement', 'verdict', 'actual')


def verify_job(
        model: ClassifierModel,
        records: Sequence[SyndromeRecord],
        aggregation: Aggregation,
) -> Tuple[str, str, float, bool]:
    """Claimed label, mode of the per-shot predictions, the share of
    shots agreeing with the mode, and whether the job is flagged."""
    label_spec = model.label_spec
    claimed = record_label(records[0], label_spec.specificity)
    if claimed not in label_spec.vocabulary:
        return claimed, '', 0.0, True
    features = featurize(records, aggregation, label_spec)
    if not len(features):
        raise ValueError(
            f'job {records[0].job_id} has fewer than {aggregation.k} shots')
    predicted = model.predict(features.features)
    mode = aggregate_mode(predicted)
    label = label_spec.vocabulary[mode]
    return claimed, label, float(np.mean(predicted == mode)), label != claimed


def run_verify(scenario: Scenario) -> Document:
    """Check every verification job against its claimed backend; the
    summary's ``flagged`` list names the jobs whose fingerprint
    disagrees."""
    model = load_model(out_path(scenario, MODEL_FILE))
    records, jobs = load_collection(scenario)
    verification = select(records, jobs, scenario.fingerprint_circuit, 'verify')
    rows = []
    flagged = []
    for job_id, job_records in group_by_job(verification).items():
        claimed, label, agreement, suspicious = verify_job(
            model, job_records, scenario.aggregation)
        rows.append((
            job_id, claimed, label, agreement,
            'flagged' if suspicious else 'honest',
            job_records[0].audit or job_records[0].backend_id))
        if suspicious:
            flagged.append(job_id)
    write_csv_file(out_path(scenario, VERIFY_TABLE), VERIFY_HEADER, rows)
    log.info('verified %d jobs, %d flagged', len(rows), len(flagged))
    return {'jobs': [dict(zip(VERIFY_HEADER, row)) for row in rows], 'flagged': flagged}


def usable_grid(grid: Sequence[int], labels: np.ndarray) -> List[int]:
    """Grid points no larger than the smallest class.

    >>> usable_grid([1, 5, 10], np.array([0] * 6 + [1] * 8))
    [1, 5]
    """
    counts = np.bincount(labels)
    smallest = int(counts[counts > 0].min())
    usable = [int(n) for n in grid if n <= smallest]
    if len(usable) < len(grid):
        log.warning(
            'curve grid cut at %d shots, the size of the smallest class', smallest)
    if not usable:
        raise ValueError(f'no curve grid point fits a class of {smallest} shots')
    return usable


def run_curve(scenario: Scenario) -> Document:
    model = load_model(out_path(scenario, MODEL_FILE))
    records, jobs = load_collection(scenario)
    testing = featurize(
        select(records, jobs, scenario.fingerprint_circuit, 'test'),
        scenario.aggregation,
        model.label_spec)
    settings = scenario.section('curve')
    grid = usable_grid(settings['grid'], testing.labels)
    rows = accuracy_vs_shots(
        model, testing.features, testing.labels, grid,
        int(settings['trials']), stream(scenario.seed, 'curve'))
    write_csv_file(
        out_path(scenario, CURVE_TABLE), CURVE_HEADER, [row.as_row() for row in rows])
    return {'grid': grid, 'rows': len(rows)}


# unsupervised pipeline and drift

def cluster_report(scenario: Scenario, records: Sequence[SyndromeRecord]) -> Tuple[Document, list]:
    """Pair distances, the DBSCAN sweep and the change-detection rates.

    The last backend of the fleet is held out as the unseen backend. The
    remaining jobs alternate, in job order, between fitting the cluster
    model and testing it as honest traffic.
    """
    settings = scenario.section('unsupervised')
    normalize = bool(settings['normalize'])
    jobs = job_vectors(records)
    pairs = pairwise_distances(jobs)
    separation = separation_stat(pairs)
    try:
        trend: Optional[float] = time_correlation(pairs)
    except ValueError:
        trend = None
    sweep = sweep_dbscan(
        jobs, settings['eps_grid'], settings['min_samples_grid'], normalize)

    held_out = scenario.backend_ids[-1]
    known = [job for job in jobs if job.backend_id != held_out]
    unseen = [job for job in jobs if job.backend_id == held_out]
    fit, honest = known[0::2], known[1::2]
    # density threshold scaled to the share of known jobs in the fit half
    min_samples = max(1, math.ceil(sweep.min_samples * len(fit) / max(len(known), 1)))
    model = dbscan(fit, sweep.eps, min_samples, normalize)
    verdicts = {job.job_id: verdict(model, job) for job in honest + unseen}

    def flag_rate(group: Sequence[Any]) -> Optional[float]:
        if not group:
            return None
        return float(np.mean([verdicts[job.job_id].flagged for job in group]))

    report: Document = {
        'metadata': report_metadata(scenario),
        'jobs': len(jobs),
        'separation': separation.to_dict(),
        'time_correlation': trend,
        'sweep': sweep.to_dict(),
        'clusters': sweep.model.to_dict(),
        'change_detection': {
            'held_out_backend': held_out,
            'eps': sweep.eps,
            'min_samples': min_samples,
            'fit_jobs': len(fit),
            'honest_flag_rate': flag_rate(honest),
            'unseen_flag_rate': flag_rate(unseen),
            'verdicts': {
                job_id: {'verdict': v.kind.value, 'distance': v.distance}
                for job_id, v in verdicts.items()}}}
    return report, [pair.as_row() for pair in pairs]


DRIFT_HEADER = ('seed', 'train_days', 'test_day', 'accuracy', 'chance')


def drift_comparison(scenario: Scenario) -> List[Tuple[int, str, int, float, float]]:
    """Accuracy on the last drift day after training on the first day,
    then on the first two days, for every replicate fleet."""
    settings = scenario.section('drift')
    days = sorted(int(d) for d in settings['days'])
    first, second, last = days[0], days[1], days[-1]
    spec = scenario.fingerprint_circuit
    hyper = scenario.section('train')['hyper']
    rows = []
    for seed in replicate_seeds(scenario, int(settings['seeds'])):
        fleet = build_fleet(scenario, seed=seed)
        placements = place(spec, fleet[0].graph, 'trivial', 1, stream(seed, 'mapping'))
        by_day = run_days(
            memory_provider(scenario, fleet, seed, last),
            placements,
            (first, second, last),
            int(settings['jobs_per_day']),
            int(settings['shots']),
            scenario.calibration_interval,
            include_data=scenario.include_data)
        for train_days in ((first,), (first, second)):
            scored = score_split(
                [r for day in train_days for r in by_day[day]],
                by_day[last],
                scenario.specificity,
                scenario.aggregation,
                seed,
                hyper)
            rows.append((
                seed, '+'.join(str(day) for day in train_days), last,
                scored.accuracy, scored.chance))
    return rows


def paired_improvement(single: Sequence[float], double: Sequence[float]) -> Optional[float]:
    """One-sided paired t-test p-value that ``double`` beats ``single``."""
    if len(single) < 2 or np.allclose(np.subtract(double, single), 0):
        return None
    return float(stats.ttest_rel(double, single, alternative='greater').pvalue)


def run_drift(scenario: Scenario) -> Document:
    records, jobs = load_collection(scenario)
    report, pair_rows = cluster_report(
        scenario, select(records, jobs, scenario.fingerprint_circuit))
    write_csv_file(out_path(scenario, PAIRS_TABLE), PAIR_HEADER, pair_rows)
    write_json_file(out_path(scenario, CLUSTER_REPORT), report)

    rows = drift_comparison(scenario)
    write_csv_file(out_path(scenario, DRIFT_TABLE), DRIFT_HEADER, rows)
    single = [row[3] for row in rows if '+' not in row[1]]
    double = [row[3] for row in rows if '+' in row[1]]
    summary = {
        'ari': report['sweep']['ari'],
        'overlap': report['separation']['overlap'],
        'single_day_accuracy': float(np.mean(single)),
        'two_day_accuracy': float(np.mean(double)),
        'p_value': paired_improvement(single, double)}
    log.info('drift comparison: %s', summary)
    return summary


# causal comparison

CAUSAL_HEADER = ('seed', 'tier', 'accuracy', 'chance')


def run_causal(scenario: Scenario) -> Document:
    """Identical classifiers on relaxation-only and fully emulated fleets
    that share their T1 and T2 draws."""
    settings = scenario.section('causal')
    spec = scenario.fingerprint_circuit
    hyper = scenario.section('train')['hyper']
    counts = {role: int(settings['jobs'].get(role, 0)) for role in ROLES}
    pair_backends = set(scenario.backend_ids[:2])
    rows: List[Tuple[Any, ...]] = []
    pair_rows: List[Tuple[Any, ...]] = []
    accuracies: Dict[NoiseTier, List[float]] = {tier: [] for tier in NoiseTier}
    overlaps: Dict[str, float] = {}
    for replicate, seed in enumerate(replicate_seeds(scenario, int(settings['seeds']))):
        for tier in (NoiseTier.ERAD, NoiseTier.FULL):
            fleet = build_fleet(scenario, seed=seed, tier=tier)
            placements = place(
                spec, fleet[0].graph, 'trivial', 1, stream(seed, 'mapping'))
            provider = memory_provider(scenario, fleet, seed)
            records = run_schedule(
                provider, placements, counts, scenario.start,
                scenario.interval, int(settings['shots']))
            split = records_by_role(provider.jobs, records)
            scored = score_split(
                split.get('train', []), split.get('test', []), Specificity.BACKEND,
                Aggregation.single_shot(), seed, hyper)
            accuracies[tier].append(scored.accuracy)
            rows.append((seed, tier.value, scored.accuracy, scored.chance))
            if replicate == 0:
                vectors = [
                    v for v in job_vectors(records) if v.backend_id in pair_backends]
                pairs = pairwise_distances(vectors)
                pair_rows.extend((tier.value,) + pair.as_row() for pair in pairs)
                overlaps[tier.value] = separation_stat(pairs).overlap
    chance = 1.0 / scenario.n_backends
    for tier in (NoiseTier.ERAD, NoiseTier.FULL):
        rows.append(('mean', tier.value, float(np.mean(accuracies[tier])), chance))
    write_csv_file(out_path(scenario, CAUSAL_TABLE), CAUSAL_HEADER, rows)
    write_csv_file(
        out_path(scenario, CAUSAL_PAIRS_TABLE), ('tier',) + PAIR_HEADER, pair_rows)
    return {
        'mean_accuracy': {
            tier.value: float(np.mean(values)) for tier, values in accuracies.items()},
        'two_backend_overlap': overlaps}


# supplementary experiments

SPECIFICITY_HEADER = ('specificity', 'accuracy', 'chance', 'chance_sigma', 'samples')


def run_specificity(scenario: Scenario) -> Document:
    """Accuracy over several embeddings per backend when labels name the
    backend (backend/backend), the backend-mapping pair (mapping/mapping),
    or the pair scored by backend only (mapping/backend)."""
    settings = scenario.section('specificity')
    counts = {role: int(settings['jobs'].get(role, 0)) for role in ROLES}
    hyper = scenario.section('train')['hyper']
    fleet = build_fleet(scenario)
    placements = place(
        scenario.fingerprint_circuit, fleet[0].graph, 'random',
        int(settings['k']), stream(scenario.seed, 'specificity'))
    seed = scenario.derive('specificity')
    provider = memory_provider(scenario, fleet, seed)
    records = run_schedule(
        provider, placements, counts, scenario.start, scenario.interval,
        int(settings['shots']), include_data=scenario.include_data)
    split = records_by_role(provider.jobs, records)
    aggregation = scenario.aggregation

    training, testing = split.get('train', []), split.get('test', [])
    backend = score_split(
        training, testing, Specificity.BACKEND, aggregation, seed, hyper)
    mapping = score_split(
        training, testing, Specificity.BACKEND_MAPPING, aggregation, seed, hyper)
    vocabulary = mapping.model.label_spec.vocabulary
    to_backend = np.array([label.split('/', 1)[0] for label in vocabulary])
    mapping_backend = float(np.mean(
        to_backend[mapping.predicted] == to_backend[mapping.truth]))

    samples = len(backend.truth)
    backend_chance = 1.0 / scenario.n_backends
    rows = [
        ('backend/backend', backend.accuracy, backend_chance,
         chance_sigma(scenario.n_backends, samples), samples),
        ('mapping/backend', mapping_backend, backend_chance,
         chance_sigma(scenario.n_backends, samples), samples),
        ('mapping/mapping', mapping.accuracy, mapping.chance, mapping.sigma,
         len(mapping.truth))]
    write_csv_file(out_path(scenario, SPECIFICITY_TABLE), SPECIFICITY_HEADER, rows)
    return {
        'mappings': len(placements),
        'accuracy': {row[0]: row[1] for row in rows}}


METRICS_HEADER = ('code', 'accuracy', 'fpr', 'fnr', 'chance', 'chance_sigma', 'samples')


def run_table(scenario: Scenario) -> Document:
    """Accuracy, FPR and FNR per code, trained on the first days and
    tested on a later one."""
    settings = scenario.section('table')
    graph = scenario.graph(settings['topology'])
    fleet = build_fleet(scenario, graph=graph)
    aggregation = Aggregation.parse(settings['aggregation'])
    train_days = sorted(int(d) for d in settings['train_days'])
    test_day = int(settings['test_day'])
    hyper = scenario.section('train')['hyper']
    rows = []
    for code in settings['codes']:
        spec = LogicalCircuitSpec.from_dict({'code': code})
        seed = scenario.derive('table', spec.code.key)
        placements = place(spec, graph, 'trivial', 1, stream(seed, 'mapping'))
        by_day = run_days(
            memory_provider(scenario, fleet, seed, test_day),
            placements,
            train_days + [test_day],
            int(settings['jobs_per_day']),
            int(settings['shots']),
            scenario.calibration_interval)
        scored = score_split(
            [r for day in train_days for r in by_day[day]],
            by_day[test_day],
            Specificity.BACKEND,
            aggregation,
            seed,
            hyper)
        metrics = table_metrics(scored.truth, scored.predicted, scored.classes)
        rows.append((
            spec.code.key, metrics.accuracy, metrics.fpr, metrics.fnr,
            scored.chance, scored.sigma, len(scored.truth)))
        log.info('%s: accuracy %.3f', spec.code.key, metrics.accuracy)
    write_csv_file(out_path(scenario, METRICS_TABLE), METRICS_HEADER, rows)
    return {'codes': {row[0]: dict(zip(METRICS_HEADER[1:4], row[1:4])) for row in rows}}


STATES_HEADER = ('state', 'plan', 'mapping_id', 'accuracy', 'chance')


def run_states(scenario: Scenario) -> Document:
    """Accuracy per logical starting state, under the trivial layout and
    under one random embedding."""
    settings = scenario.section('states')
    counts = {role: int(settings['jobs'].get(role, 0)) for role in ROLES}
    hyper = scenario.section('train')['hyper']
    base = scenario.config['circuits'][int(scenario.config['train']['circuit'])]
    logical_qubits = scenario.fingerprint_circuit.code.logical_qubits
    graph = scenario.graph(settings['topology'])
    fleet = build_fleet(scenario, graph=graph)
    rows = []
    for state in settings['states']:
        spec = LogicalCircuitSpec.from_dict(
            dict(base, initial=[state] * logical_qubits))
        for plan in ('trivial', 'random'):
            seed = scenario.derive('states', state, plan)
            placements = place(spec, graph, plan, 1, stream(seed, 'mapping'))
            provider = memory_provider(scenario, fleet, seed)
            records = run_schedule(
                provider, placements, counts, scenario.start,
                scenario.interval, int(settings['shots']),
                include_data=scenario.include_data)
            split = records_by_role(provider.jobs, records)
            scored = score_split(
                split.get('train', []), split.get('test', []), scenario.specificity,
                scenario.aggregation, seed, hyper)
            rows.append((
                state, plan, placements[0].mapping_id, scored.accuracy, scored.chance))
    write_csv_file(out_path(scenario, STATES_TABLE), STATES_HEADER, rows)
    return {'rows': len(rows)}


Command = Callable[[Scenario], Document]

COMMANDS: Dict[str, Command] = {
    'fleet': run_fleet,
    'collect': run_collect,
    'train': run_train,
    'verify': run_verify,
    'curve': run_curve,
    'drift': run_drift,
    'causal': run_causal,
    'specificity': run_specificity,
    'table': run_table,
    'states': run_states,
}
