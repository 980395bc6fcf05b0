"""
========
Features
========

Syndrome records become feature vectors with one entry per syndrome
bit: the bit itself for single shots, or the per-bit frequency of 1
over a group of ``k`` consecutive shots of the same job.
"""

import enum
from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Mapping, Sequence, Tuple

import numpy as np

from synprint.farm.provider import SyndromeRecord
from synprint.core.types import Document


class Specificity(str, enum.Enum):
    BACKEND = 'Backend'
    BACKEND_MAPPING = 'BackendMapping'


@dataclass(frozen=True)
class LabelSpec:
    """The class vocabulary of one experiment. Label indices follow the
    order of ``vocabulary``, which also decides ties."""
    specificity: Specificity
    vocabulary: Tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, 'specificity', Specificity(self.specificity))
        object.__setattr__(self, 'vocabulary', tuple(self.vocabulary))
        if len(set(self.vocabulary)) != len(self.vocabulary):
            raise ValueError(f'labels must be unique: {self.vocabulary}')

    @classmethod
    def from_records(
            cls,
            records: Sequence[SyndromeRecord],
            specificity: Specificity = Specificity.BACKEND,
    ) -> 'LabelSpec':
        specificity = Specificity(specificity)
        labels = sorted({record_label(r, specificity) for r in records})
        return cls(specificity, tuple(labels))

    def __len__(self) -> int:
        return len(self.vocabulary)

    def index(self, label: str) -> int:
        try:
            return self.vocabulary.index(label)
        except ValueError:
            raise ValueError(
                f'label {label!r} is not in the vocabulary') from None

    def label_of(self, record: SyndromeRecord) -> int:
        return self.index(record_label(record, self.specificity))

    def to_dict(self) -> Document:
        return {
            'specificity': self.specificity.value,
            'vocabulary': list(self.vocabulary)}

    @classmethod
    def from_dict(cls, document: Mapping[str, Any]) -> 'LabelSpec':
        return cls(
            Specificity(document['specificity']),
            tuple(document['vocabulary']))


def record_label(record: SyndromeRecord, specificity: Specificity) -> str:
    if specificity is Specificity.BACKEND_MAPPING:
        return f'{record.backend_id}/{record.mapping_id}'
    return record.backend_id


@dataclass(frozen=True)
class Aggregation:
    """``k == 1`` is single-shot featurization."""
    k: int = 1

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f'aggregation needs k >= 1, got {self.k}')

    @classmethod
    def single_shot(cls) -> 'Aggregation':
        return cls(1)

    @classmethod
    def mean_over(cls, k: int) -> 'Aggregation':
        return cls(k)

    @classmethod
    def parse(cls, text: Any) -> 'Aggregation':
        """``'single'`` or ``'mean:<k>'``, or an integer ``k``."""
        if isinstance(text, int):
            return cls(text)
        if text == 'single':
            return cls(1)
        if isinstance(text, str) and text.startswith('mean:'):
            return cls(int(text[5:]))
        raise ValueError(f'unknown aggregation {text!r}')

    @property
    def is_single_shot(self) -> bool:
        return self.k == 1


@dataclass(frozen=True)
class FeatureSet:
    """Feature rows with their label indices and the job each row came
    from."""
    features: np.ndarray
    labels: np.ndarray
    jobs: Tuple[str, ...]

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self) -> Iterator[Tuple[np.ndarray, int]]:
        for row, label in zip(self.features, self.labels):
            yield row, int(label)

    @property
    def dimension(self) -> int:
        return int(self.features.shape[1])

    def subset(self, mask: np.ndarray) -> 'FeatureSet':
        return FeatureSet(
            features=self.features[mask],
            labels=self.labels[mask],
            jobs=tuple(np.asarray(self.jobs, dtype=object)[mask]))


def bits_matrix(syndromes: Sequence[str]) -> np.ndarray:
    """Stack '0'/'1' strings into a uint8 matrix.

    >>> bits_matrix(['01', '11']).tolist()
    [[0, 1], [1, 1]]
    """
    if not syndromes:
        raise ValueError('no syndromes to featurize')
    width = len(syndromes[0])
    if any(len(s) != width for s in syndromes):
        lengths = sorted({len(s) for s in syndromes})
        raise ValueError(f'mixed syndrome lengths {lengths}')
    raw = np.frombuffer(''.join(syndromes).encode('ascii'), dtype=np.uint8)
    bits = raw.reshape(len(syndromes), width) - ord('0')
    if bits.size and bits.max() > 1:
        raise ValueError('syndromes must contain only 0 and 1')
    return bits


def group_by_job(records: Sequence[SyndromeRecord]) -> Dict[str, List[SyndromeRecord]]:
    """Records per job, jobs in order of first appearance, shots in
    record order."""
    jobs: Dict[str, List[SyndromeRecord]] = {}
    for record in records:
        jobs.setdefault(record.job_id, []).append(record)
    return jobs


def featurize(
        records: Sequence[SyndromeRecord],
        aggregation: Aggregation,
        label_spec: LabelSpec,
) -> FeatureSet:
    """Feature vectors and labels.

    ``MeanOverK`` averages consecutive disjoint groups of ``k`` records
    of the same job; a job's incomplete trailing group is dropped.

    Raises:
        ValueError: No records, or syndromes of different lengths.
    """
    if not records:
        raise ValueError('no records to featurize')
    bits = bits_matrix([r.syndrome for r in records])
    labels = np.array([label_spec.label_of(r) for r in records], dtype=np.int64)
    if aggregation.is_single_shot:
        return FeatureSet(
            features=bits.astype(np.float64),
            labels=labels,
            jobs=tuple(r.job_id for r in records))
    k = aggregation.k
    rows: List[np.ndarray] = []
    row_labels: List[int] = []
    row_jobs: List[str] = []
    positions: Dict[str, List[int]] = {}
    for i, record in enumerate(records):
        positions.setdefault(record.job_id, []).append(i)
    for job_id, indices in positions.items():
        groups = len(indices) // k
        if groups == 0:
            continue
        index = np.array(indices[:groups * k]).reshape(groups, k)
        rows.append(bits[index].mean(axis=1))
        row_labels.extend(int(labels[g[0]]) for g in index)
        row_jobs.extend([job_id] * groups)
    width = bits.shape[1]
    return FeatureSet(
        features=np.vstack(rows) if rows else np.zeros((0, width)),
        labels=np.array(row_labels, dtype=np.int64),
        jobs=tuple(row_jobs))


def shuffled_labels(labels: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """A permutation of ``labels``; training on it must give chance
    accuracy."""
    return rng.permutation(labels)


def _record(job: str, syndrome: str, backend: str = 'b0') -> SyndromeRecord:
    return SyndromeRecord(
        job_id=job, backend_id=backend, mapping_id='m', shot=0,
        syndrome=syndrome, timestamp=0.0, epoch=0)


def test_mean_features() -> None:
    spec = LabelSpec(Specificity.BACKEND, ('b0',))
    same = featurize([_record('j', '01'), _record('j', '01')], Aggregation(2), spec)
    assert same.features.tolist() == [[0.0, 1.0]]
    mixed = featurize([_record('j', '00'), _record('j', '11')], Aggregation(2), spec)
    assert mixed.features.tolist() == [[0.5, 0.5]]
    many = featurize([_record('j', '1')] * 85, Aggregation.mean_over(40), spec)
    assert len(many) == 2
