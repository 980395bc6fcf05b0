"""
=====================
Unsupervised Pipeline
=====================

Change detection without labels. Every job becomes the mean of its
shots' syndrome bits; jobs are compared by Euclidean distance and
clustered with DBSCAN, and a new job is accepted if it lies within
``eps`` of a core point of the trained clustering.

DBSCAN here counts a point as its own neighbor, uses ``<= eps`` as the
neighborhood test and visits jobs in ascending ``job_id`` order, so a
border point joins the first cluster that reaches it.
"""

import enum
import logging as log
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.spatial import distance
from scipy.special import comb

from synprint.core.types import Document
from synprint.farm.provider import SyndromeRecord
from synprint.fingerprint.features import bits_matrix, group_by_job

NOISE = -1

DEFAULT_EPS_GRID = (0.05, 0.075, 0.089, 0.1, 0.125, 0.15, 0.175, 0.2, 0.25, 0.3, 0.4)
DEFAULT_MIN_SAMPLES_GRID = (2, 3, 5, 8)


@dataclass(frozen=True, eq=False)
class JobVector:
    """``backend_id`` is the true backend, for evaluation only."""
    job_id: str
    backend_id: str
    timestamp: float
    vector: np.ndarray
    epoch: int = 0


def job_vector(records: Sequence[SyndromeRecord]) -> JobVector:
    """Per-bit frequency of 1 across one job's shots.

    Raises:
        ValueError: No records, records from several jobs, or mixed
            syndrome lengths.
    """
    if not records:
        raise ValueError('a job vector needs at least one record')
    job_ids = {r.job_id for r in records}
    if len(job_ids) != 1:
        raise ValueError(f'records span several jobs: {sorted(job_ids)}')
    first = records[0]
    return JobVector(
        job_id=first.job_id,
        backend_id=first.audit or first.backend_id,
        timestamp=first.timestamp,
        vector=bits_matrix([r.syndrome for r in records]).mean(axis=0),
        epoch=first.epoch)


def job_vectors(records: Sequence[SyndromeRecord]) -> List[JobVector]:
    """One vector per job, in ascending ``job_id`` order."""
    grouped = group_by_job(records)
    return [job_vector(grouped[job_id]) for job_id in sorted(grouped)]


def _matrix(jobs: Sequence[JobVector]) -> np.ndarray:
    widths = {len(job.vector) for job in jobs}
    if len(widths) > 1:
        raise ValueError(f'job vectors have mixed dimensions {sorted(widths)}')
    return np.vstack([job.vector for job in jobs])


@dataclass(frozen=True)
class PairSample:
    dt: float
    distance: float
    same_backend: bool
    job_a: str = ''
    job_b: str = ''

    def as_row(self) -> Tuple[str, str, float, float, int]:
        return self.job_a, self.job_b, self.dt, self.distance, int(self.same_backend)


PAIR_HEADER = ('job_a', 'job_b', 'dt', 'distance', 'same_backend')


def pairwise_distances(jobs: Sequence[JobVector]) -> List[PairSample]:
    """Every unordered pair of jobs, in ``(i, j)`` order with ``i < j``.

    Raises:
        ValueError: Fewer than two jobs, or vectors of different lengths.
    """
    if len(jobs) < 2:
        raise ValueError('pairwise distances need at least two jobs')
    condensed = distance.pdist(_matrix(jobs), 'euclidean')
    pairs = []
    k = 0
    for i in range(len(jobs)):
        for j in range(i + 1, len(jobs)):
            a, b = jobs[i], jobs[j]
            pairs.append(PairSample(
                dt=abs(b.timestamp - a.timestamp),
                distance=float(condensed[k]),
                same_backend=a.backend_id == b.backend_id,
                job_a=a.job_id,
                job_b=b.job_id))
            k += 1
    return pairs


QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


@dataclass(frozen=True)
class SeparationStats:
    same_quantiles: Tuple[float, ...]
    different_quantiles: Tuple[float, ...]
    threshold: float
    overlap: float

    def to_dict(self) -> Document:
        return {
            'quantiles': list(QUANTILES),
            'same_backend': list(self.same_quantiles),
            'different_backend': list(self.different_quantiles),
            'threshold': self.threshold,
            'overlap': self.overlap}


def separation_stat(pairs: Sequence[PairSample]) -> SeparationStats:
    """The distance threshold that best separates same-backend pairs
    (``distance <= threshold``) from different-backend pairs.

    Pairs are weighted so both classes count equally; ``overlap`` is one
    minus the best balanced accuracy.

    Raises:
        ValueError: Only one of the two classes is present.
    """
    d = np.array([p.distance for p in pairs])
    same = np.array([p.same_backend for p in pairs], dtype=bool)
    if same.all() or not same.any():
        raise ValueError('separation needs both same- and different-backend pairs')
    candidates = np.unique(d)
    same_sorted = np.sort(d[same])
    different_sorted = np.sort(d[~same])
    # fraction of each class with distance <= candidate
    same_below = np.searchsorted(same_sorted, candidates, side='right') / len(same_sorted)
    different_below = (
        np.searchsorted(different_sorted, candidates, side='right') / len(different_sorted))
    balanced = np.concatenate(([0.5], (same_below + 1 - different_below) / 2))
    best = int(np.argmax(balanced))
    if best == 0:
        threshold = float(candidates[0]) / 2
    elif best < len(candidates):
        threshold = float(candidates[best - 1] + candidates[best]) / 2
    else:
        threshold = float(candidates[-1])
    return SeparationStats(
        same_quantiles=tuple(float(q) for q in np.quantile(d[same], QUANTILES)),
        different_quantiles=tuple(float(q) for q in np.quantile(d[~same], QUANTILES)),
        threshold=threshold,
        overlap=float(1 - balanced[best]))


def time_correlation(pairs: Sequence[PairSample]) -> float:
    """Pearson correlation of time gap and distance over same-backend
    pairs."""
    same = [p for p in pairs if p.same_backend]
    if len(same) < 3:
        raise ValueError('time correlation needs at least three same-backend pairs')
    dt = np.array([p.dt for p in same])
    d = np.array([p.distance for p in same])
    if np.ptp(dt) == 0 or np.ptp(d) == 0:
        return 0.0
    return float(stats.pearsonr(dt, d)[0])


@dataclass(frozen=True)
class Scaling:
    """Per-feature z-scoring fitted on the training jobs."""
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, matrix: np.ndarray) -> 'Scaling':
        scale = matrix.std(axis=0)
        return cls(mean=matrix.mean(axis=0), scale=np.where(scale > 0, scale, 1.0))

    def apply(self, matrix: np.ndarray) -> np.ndarray:
        return (matrix - self.mean) / self.scale


@dataclass(frozen=True, eq=False)
class ClusterModel:
    eps: float
    min_samples: int
    job_ids: Tuple[str, ...]
    assignments: Tuple[int, ...]
    core_indices: Tuple[int, ...]
    points: np.ndarray
    scaling: Optional[Scaling] = None

    @property
    def core_points(self) -> np.ndarray:
        return self.points[list(self.core_indices)]

    @property
    def clusters(self) -> int:
        return len({a for a in self.assignments if a != NOISE})

    @property
    def noise(self) -> int:
        return sum(1 for a in self.assignments if a == NOISE)

    def assignment_map(self) -> Dict[str, int]:
        return dict(zip(self.job_ids, self.assignments))

    def to_dict(self) -> Document:
        return {
            'eps': self.eps,
            'min_samples': self.min_samples,
            'normalized': self.scaling is not None,
            'assignments': self.assignment_map(),
            'core_points': [self.job_ids[i] for i in self.core_indices],
            'clusters': self.clusters,
            'noise': self.noise}


def dbscan(
        jobs: Sequence[JobVector],
        eps: float,
        min_samples: int,
        normalize: bool = False,
) -> ClusterModel:
    """Density clustering of job vectors.

    Raises:
        ValueError: ``eps <= 0`` or ``min_samples < 1``.
    """
    if eps <= 0:
        raise ValueError(f'eps must be positive, got {eps}')
    if min_samples < 1:
        raise ValueError(f'min_samples must be at least 1, got {min_samples}')
    ordered = sorted(jobs, key=lambda job: job.job_id)
    if not ordered:
        return ClusterModel(eps, min_samples, (), (), (), np.zeros((0, 0)))
    matrix = _matrix(ordered)
    scaling = Scaling.fit(matrix) if normalize else None
    points = scaling.apply(matrix) if scaling else matrix
    within = distance.cdist(points, points, 'euclidean') <= eps
    neighbors = [np.nonzero(row)[0] for row in within]
    core = np.array([len(n) >= min_samples for n in neighbors])

    labels = np.full(len(ordered), NOISE)
    cluster = 0
    for start in range(len(ordered)):
        if labels[start] != NOISE or not core[start]:
            continue
        labels[start] = cluster
        queue = deque([start])
        while queue:
            point = queue.popleft()
            if not core[point]:
                continue
            for neighbor in neighbors[point]:
                if labels[neighbor] == NOISE:
                    labels[neighbor] = cluster
                    queue.append(neighbor)
        cluster += 1
    model = ClusterModel(
        eps=eps,
        min_samples=min_samples,
        job_ids=tuple(job.job_id for job in ordered),
        assignments=tuple(int(label) for label in labels),
        core_indices=tuple(int(i) for i in np.nonzero(core)[0]),
        points=points,
        scaling=scaling)
    log.debug(
        'dbscan eps=%s min_samples=%d: %d clusters, %d noise',
        eps, min_samples, model.clusters, model.noise)
    return model


def ari(assignments: Sequence[Hashable], truth: Sequence[Hashable]) -> float:
    """Adjusted Rand index from the contingency table of two partitions.

    Noise labels count as one more cluster. Two partitions that are both
    all singletons, or both a single cluster, score 1.

    >>> ari([0, 0, 1, 1], ['a', 'a', 'b', 'b'])
    1.0
    """
    if len(assignments) != len(truth):
        raise ValueError(
            f'partitions differ in length: {len(assignments)} != {len(truth)}')
    n = len(truth)
    if n < 2:
        return 1.0
    _, rows = np.unique(np.array([str(a) for a in assignments]), return_inverse=True)
    _, cols = np.unique(np.array([str(t) for t in truth]), return_inverse=True)
    table = np.zeros((rows.max() + 1, cols.max() + 1), dtype=np.int64)
    np.add.at(table, (rows, cols), 1)
    index = comb(table, 2).sum()
    row_sum = comb(table.sum(axis=1), 2).sum()
    col_sum = comb(table.sum(axis=0), 2).sum()
    expected = row_sum * col_sum / comb(n, 2)
    maximum = (row_sum + col_sum) / 2
    if maximum == expected:
        return 1.0
    return float((index - expected) / (maximum - expected))


class VerdictKind(str, enum.Enum):
    KNOWN = 'KnownBackendCluster'
    CHANGE = 'BackendChangeSuspected'


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    cluster: Optional[int] = None
    distance: float = float('inf')

    @property
    def flagged(self) -> bool:
        return self.kind is VerdictKind.CHANGE


def verdict(model: ClusterModel, job: JobVector) -> Verdict:
    """Accept ``job`` if it lies within ``eps`` of some core point."""
    if not model.core_indices:
        return Verdict(VerdictKind.CHANGE)
    point = job.vector[np.newaxis, :]
    if model.scaling is not None:
        point = model.scaling.apply(point)
    distances = distance.cdist(point, model.core_points, 'euclidean')[0]
    nearest = int(np.argmin(distances))
    closest = float(distances[nearest])
    if closest <= model.eps:
        return Verdict(
            VerdictKind.KNOWN,
            cluster=model.assignments[model.core_indices[nearest]],
            distance=closest)
    return Verdict(VerdictKind.CHANGE, distance=closest)


@dataclass
class SweepResult:
    eps: float
    min_samples: int
    ari: float
    model: ClusterModel
    rows: List[Tuple[float, int, float, int, int]] = field(default_factory=list)

    def to_dict(self) -> Document:
        return {
            'eps': self.eps,
            'min_samples': self.min_samples,
            'ari': self.ari,
            'grid': [
                {'eps': e, 'min_samples': m, 'ari': a, 'clusters': c, 'noise': n}
                for e, m, a, c, n in self.rows]}


def sweep_dbscan(
        jobs: Sequence[JobVector],
        eps_grid: Sequence[float] = DEFAULT_EPS_GRID,
        min_samples_grid: Sequence[int] = DEFAULT_MIN_SAMPLES_GRID,
        normalize: bool = False,
) -> SweepResult:
    """Cluster over a parameter grid and keep the ARI-maximizing pair.

    Among tied pairs the middle one in ascending ``(eps, min_samples)``
    order wins.
    """
    ordered = sorted(jobs, key=lambda job: job.job_id)
    truth = [job.backend_id for job in ordered]
    rows = []
    models = []
    for eps in sorted(eps_grid):
        for min_samples in sorted(min_samples_grid):
            model = dbscan(ordered, eps, min_samples, normalize)
            score = ari(model.assignments, truth)
            rows.append((eps, min_samples, score, model.clusters, model.noise))
            models.append(model)
    if not rows:
        raise ValueError('the parameter grid is empty')
    top = max(row[2] for row in rows)
    tied = [i for i, row in enumerate(rows) if np.isclose(row[2], top)]
    pick = tied[len(tied) // 2]
    eps, min_samples, score = rows[pick][:3]
    best = SweepResult(eps, min_samples, score, models[pick], rows)
    log.info(
        'dbscan sweep: best ARI %.3f at eps=%s, min_samples=%d (%d tied)',
        best.ari, best.eps, best.min_samples, len(tied))
    return best


def _vector(job_id: str, values: Sequence[float], backend: str = 'b') -> JobVector:
    return JobVector(job_id, backend, 0.0, np.array(values, dtype=float))


def test_job_vector_means() -> None:
    records = [
        SyndromeRecord('j', 'b', 'm', k, s, 0.0, 0)
        for k, s in enumerate(['10', '01'])]
    assert job_vector(records).vector.tolist() == [0.5, 0.5]


def test_line_just_over_eps_is_noise() -> None:
    jobs = [_vector(f'j{i}', [i * 1.01]) for i in range(4)]
    model = dbscan(jobs, eps=1.0, min_samples=2)
    assert model.assignments == (NOISE,) * 4
    assert dbscan(jobs, eps=1.0, min_samples=1).clusters == 4


def test_verdict_thresholds() -> None:
    jobs = [_vector(f'j{i}', [0.0, 0.01 * i]) for i in range(5)]
    model = dbscan(jobs, eps=0.05, min_samples=3)
    assert verdict(model, jobs[2]).kind is VerdictKind.KNOWN
    far = _vector('x', [0.5, 0.0])
    assert verdict(model, far).flagged
