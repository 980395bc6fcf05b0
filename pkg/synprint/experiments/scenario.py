"""
=========
Scenarios
=========

A scenario is a JSON document deep-merged over :py:attr:`Scenario.defaults`.
It names the fleet, the circuits, how circuits are placed on the
hardware, the job and calibration schedules, dishonest-routing events and
the settings of every experiment the command line can run.

Durations may be numbers of seconds or Pint strings such as
``"24 hour"``.
"""

import copy
from typing import Any, Dict, List, Optional, Tuple

from synprint.codes.code import LogicalCircuitSpec
from synprint.core.registry import code_registry, topology_registry
from synprint.core.types import Document
from synprint.farm.noise import (
    CalibrationEpoch, NoiseTier, backend_name, calibration_schedule)
from synprint.fingerprint.features import Aggregation, Specificity
from synprint.library.dict_utils import merge_defaults
from synprint.library.filepath import read_json_file
from synprint.library.seeding import MAX_SEED, derive_seed
from synprint.library.topology import ConnectivityGraph
from synprint.library.units import to_seconds

PIPELINES = ('supervised', 'unsupervised', 'causal-comparison')
ROLES = ('train', 'test', 'verify')


class Scenario:
    defaults: Dict[str, Any] = {
        'seed': 0,
        'out_dir': 'out/scenario',
        'pipeline': 'supervised',
        'parallel': 1,
        'fleet': {
            'n_backends': 5,
            'tier': NoiseTier.FULL.value,
            'topology': {'template': 'grid', 'rows': 9, 'cols': 9},
            'parameters': {},
        },
        'circuits': [
            {
                'code': {'family': 'Surface', 'distance': 3},
                'initial': ['0'],
                'logical_gates': ['X(0)'],
                'stabilize_rounds': 2,
            },
        ],
        'mapping': {'plan': 'trivial', 'k': 16},
        'schedule': {
            'start': 0.0,
            'interval': '2 hour',
            'shots': 512,
            'jobs': {'train': 12, 'test': 4, 'verify': 2},
        },
        'calibration': {'interval': '24 hour', 'epochs': 10},
        # {'job': <verify job index>, 'backend': <claimed>, 'actual': <actual>}
        'routing': [],
        'shot_log': 'shots.jsonl',
        'train': {
            # index into 'circuits' of the circuit to fingerprint
            'circuit': 0,
            'specificity': Specificity.BACKEND.value,
            'aggregation': 'single',
            'validation_fraction': 0.2,
            'calibrate_weights': True,
            'shuffled_control': False,
            # append the final data readout to every syndrome
            'include_data': False,
            'hyper': {},
        },
        'curve': {
            'grid': [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000],
            'trials': 200,
        },
        'unsupervised': {
            'eps_grid': [0.05, 0.075, 0.089, 0.1, 0.125, 0.15, 0.175, 0.2, 0.25, 0.3, 0.4],
            'min_samples_grid': [2, 3, 5, 8],
            'normalize': False,
        },
        'drift': {
            'days': [1, 2, 7],
            'seeds': 1,
            'jobs_per_day': 4,
            'shots': 512,
        },
        'causal': {
            'seeds': 5,
            'jobs': {'train': 4, 'test': 2},
            'shots': 512,
        },
        'specificity': {
            'k': 16,
            'jobs': {'train': 2, 'test': 1},
            'shots': 512,
        },
        'table': {
            'codes': [
                {'family': 'Shor'},
                {'family': 'Steane'},
                {'family': 'Surface', 'distance': 5},
            ],
            'topology': {'template': 'all_to_all', 'num_qubits': 49},
            'train_days': [1, 2],
            'test_day': 7,
            'jobs_per_day': 2,
            'shots': 400,
            'aggregation': 'mean:40',
        },
        'states': {
            'states': ['0', '1', '+'],
            'topology': {'template': 'grid', 'rows': 9, 'cols': 9},
            'jobs': {'train': 4, 'test': 2},
            'shots': 512,
        },
    }

    def __init__(
            self,
            config: Optional[dict] = None,
            seed: Optional[int] = None,
            out_dir: Optional[str] = None,
            include_data: Optional[bool] = None,
    ) -> None:
        self.config = merge_defaults(self.defaults, config)
        # lists replace the defaults rather than merging into them
        if config and 'circuits' in config:
            self.config['circuits'] = copy.deepcopy(config['circuits'])
        if seed is not None:
            self.config['seed'] = seed
        if out_dir is not None:
            self.config['out_dir'] = out_dir
        if include_data is not None:
            self.config['train']['include_data'] = include_data
        self.validate()

    @classmethod
    def load(
            cls,
            path: Optional[str] = None,
            seed: Optional[int] = None,
            out_dir: Optional[str] = None,
            include_data: Optional[bool] = None,
    ) -> 'Scenario':
        config = read_json_file(path) if path else {}
        if not isinstance(config, dict):
            raise ValueError(f'scenario {path} must be a JSON object')
        return cls(config, seed=seed, out_dir=out_dir, include_data=include_data)

    def to_dict(self) -> Document:
        return copy.deepcopy(self.config)

    # accessors

    @property
    def seed(self) -> int:
        return int(self.config['seed'])

    @property
    def out_dir(self) -> str:
        return str(self.config['out_dir'])

    @property
    def pipeline(self) -> str:
        return str(self.config['pipeline'])

    @property
    def parallel(self) -> int:
        return int(self.config['parallel'])

    @property
    def n_backends(self) -> int:
        return int(self.config['fleet']['n_backends'])

    @property
    def tier(self) -> NoiseTier:
        return NoiseTier(self.config['fleet']['tier'])

    @property
    def backend_ids(self) -> List[str]:
        return [backend_name(i) for i in range(self.n_backends)]

    @property
    def fleet_parameters(self) -> dict:
        return copy.deepcopy(self.config['fleet']['parameters'])

    def graph(self, topology: Optional[dict] = None) -> ConnectivityGraph:
        return build_graph(topology or self.config['fleet']['topology'])

    @property
    def circuits(self) -> List[LogicalCircuitSpec]:
        return [LogicalCircuitSpec.from_dict(c) for c in self.config['circuits']]

    @property
    def fingerprint_circuit(self) -> LogicalCircuitSpec:
        """The circuit the supervised and unsupervised pipelines fingerprint."""
        return self.circuits[int(self.config['train']['circuit'])]

    @property
    def mapping_plan(self) -> Tuple[str, int]:
        mapping = self.config['mapping']
        return str(mapping['plan']), int(mapping['k'])

    @property
    def shots(self) -> int:
        return int(self.config['schedule']['shots'])

    @property
    def start(self) -> float:
        return to_seconds(self.config['schedule']['start'])

    @property
    def interval(self) -> float:
        return to_seconds(self.config['schedule']['interval'])

    def job_counts(self) -> Dict[str, int]:
        jobs = self.config['schedule']['jobs']
        return {role: int(jobs.get(role, 0)) for role in ROLES}

    @property
    def calibration_interval(self) -> float:
        return to_seconds(self.config['calibration']['interval'])

    def calibration(self, seed: Optional[int] = None, count: Optional[int] = None) -> List[CalibrationEpoch]:
        return calibration_schedule(
            int(self.config['calibration']['epochs']) if count is None else count,
            self.calibration_interval,
            self.seed if seed is None else seed)

    @property
    def routing(self) -> Dict[Tuple[int, str], str]:
        """``(verify job index, claimed backend)`` to the backend that
        actually runs it."""
        return {
            (int(event['job']), event['backend']): event['actual']
            for event in self.config['routing']}

    @property
    def specificity(self) -> Specificity:
        return Specificity(self.config['train']['specificity'])

    @property
    def aggregation(self) -> Aggregation:
        return Aggregation.parse(self.config['train']['aggregation'])

    @property
    def include_data(self) -> bool:
        return bool(self.config['train']['include_data'])

    def section(self, name: str) -> dict:
        return copy.deepcopy(self.config[name])

    def derive(self, *keys: Any) -> int:
        return derive_seed(self.seed, *keys)

    # validation

    def validate(self) -> None:
        """Raises ValueError for an inconsistent scenario."""
        if not 0 <= self.seed <= MAX_SEED:
            raise ValueError(f'seed must fit in an unsigned 64-bit int: {self.seed}')
        if self.pipeline not in PIPELINES:
            raise ValueError(
                f'unknown pipeline {self.pipeline!r}; choose from {PIPELINES}')
        if self.n_backends < 2:
            raise ValueError(
                f'the {self.pipeline} pipeline needs at least two backends, '
                f'got {self.n_backends}')
        NoiseTier(self.config['fleet']['tier'])
        if self.parallel < 1:
            raise ValueError('parallel must be at least 1')
        for topology in (self.config['fleet']['topology'],
                         self.config['table']['topology'],
                         self.config['states']['topology']):
            template = topology.get('template')
            if not topology_registry.access(template):
                raise ValueError(f'unknown topology template {template!r}')
        if not self.config['circuits']:
            raise ValueError('a scenario needs at least one circuit')
        for circuit in self.config['circuits']:
            family = circuit.get('code', {}).get('family')
            if not code_registry.access(family):
                raise ValueError(f'unknown code family {family!r}')
        if not 0 <= int(self.config['train']['circuit']) < len(self.config['circuits']):
            raise ValueError(
                f'train circuit {self.config["train"]["circuit"]} is not in the circuit list')
        _ = self.circuits
        plan, k = self.mapping_plan
        if plan not in ('trivial', 'random'):
            raise ValueError(f'mapping plan must be trivial or random, got {plan!r}')
        if k < 1:
            raise ValueError('mapping k must be at least 1')
        if self.shots < 1:
            raise ValueError('jobs need at least one shot')
        if self.start < 0 or self.interval <= 0 or self.calibration_interval <= 0:
            raise ValueError('schedules must start at t >= 0 and move forward in time')
        counts = self.job_counts()
        if counts['train'] < 1:
            raise ValueError('the schedule needs at least one training job per backend')
        backends = set(self.backend_ids)
        for event in self.config['routing']:
            for key in ('backend', 'actual'):
                if event.get(key) not in backends:
                    raise ValueError(
                        f'routing event names unknown backend {event.get(key)!r}')
            if not 0 <= int(event['job']) < counts['verify']:
                raise ValueError(
                    f'routing event job {event["job"]} is not a verification job')
        Specificity(self.config['train']['specificity'])
        _ = self.aggregation
        grid = [int(n) for n in self.config['curve']['grid']]
        if grid != sorted(set(grid)):
            raise ValueError(f'curve grid must be ascending: {grid}')
        if int(self.config['drift']['seeds']) < 1 or int(self.config['causal']['seeds']) < 1:
            raise ValueError('replicate counts must be at least 1')
        days = self.config['drift']['days']
        if len(days) < 3 or list(days) != sorted(set(days)):
            raise ValueError(f'drift days must be three or more ascending days: {days}')
        if self.config['table']['test_day'] <= max(self.config['table']['train_days']):
            raise ValueError('the table test day must follow the training days')


def build_graph(topology: Dict[str, Any]) -> ConnectivityGraph:
    """Instantiate a registered topology template.

    >>> build_graph({'template': 'grid', 'rows': 2, 'cols': 2}).num_qubits
    4
    """
    arguments = dict(topology)
    template = arguments.pop('template')
    builder = topology_registry.require(template)
    return builder(**arguments)


def test_defaults_are_valid() -> None:
    scenario = Scenario()
    assert scenario.backend_ids[0] == 'backend-00'
    assert scenario.calibration_interval == 86400.0
    assert len(scenario.calibration()) == 10


def test_single_backend_is_rejected() -> None:
    try:
        Scenario({'fleet': {'n_backends': 1}})
    except ValueError:
        return
    raise AssertionError('a one-backend fleet was accepted')


def test_include_data_override() -> None:
    assert not Scenario().include_data
    assert Scenario(include_data=True).include_data
    assert Scenario({'train': {'include_data': True}}).include_data


def test_default_circuit_places_on_default_fleet() -> None:
    from synprint.codes.code import build_circuit
    from synprint.library.seeding import stream
    from synprint.library.topology import plan_mappings

    scenario = Scenario()
    circuit, layout = build_circuit(scenario.fingerprint_circuit)
    assert len(layout) == 16
    plan, k = scenario.mapping_plan
    graph = scenario.graph()
    assert len(plan_mappings(circuit, graph, plan, k, stream(0))) == 1
    random = plan_mappings(circuit, graph, 'random', k, stream(0))
    assert len({mapping.image for mapping in random}) == k
