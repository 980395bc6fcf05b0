"""
=================
Hardware Topology
=================

Coupling graphs of virtual backends, qubit mappings, and the search for
alternative placements of a circuit that keep every two-qubit gate on a
hardware edge.

Graph templates
===============

* :py:func:`heavy_hex`: hexagonal lattice with an extra qubit on every
  edge, the layout of current superconducting devices. Degree at most 3.
* :py:func:`grid`: square lattice, the host for surface codes.
* :py:func:`all_to_all`: complete graph, for codes whose checks touch
  six qubits.

>>> g = heavy_hex(1, 1)
>>> g.num_qubits, len(g.edges), g.max_degree
(12, 12, 2)
>>> trivial_layout(3, g).qubits
(0, 1, 2)
"""

import hashlib
import itertools
import logging as log
from dataclasses import dataclass
from typing import Any, Dict, FrozenSet, Iterable, Iterator, List, Mapping as MappingType
from typing import Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np
from networkx.algorithms import isomorphism

from synprint.core.circuit import Circuit, CircuitBuilder
from synprint.core.types import Document, Edge


def _edge(a: int, b: int) -> Edge:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class ConnectivityGraph:
    """Undirected simple coupling graph over physical qubit indices."""
    nodes: Tuple[int, ...]
    edges: Tuple[Edge, ...]

    def __post_init__(self) -> None:
        nodes = tuple(sorted(set(int(n) for n in self.nodes)))
        node_set = set(nodes)
        edges: Set[Edge] = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise ValueError(f'self-loop on qubit {a}')
            if a not in node_set or b not in node_set:
                raise ValueError(f'edge ({a}, {b}) leaves the node set')
            edges.add(_edge(a, b))
        object.__setattr__(self, 'nodes', nodes)
        object.__setattr__(self, 'edges', tuple(sorted(edges)))

    @classmethod
    def from_edges(cls, num_qubits: int, edges: Iterable[Edge]) -> 'ConnectivityGraph':
        return cls(nodes=tuple(range(num_qubits)), edges=tuple(edges))

    @classmethod
    def from_networkx(cls, graph: nx.Graph) -> 'ConnectivityGraph':
        return cls(nodes=tuple(graph.nodes), edges=tuple(graph.edges))

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(self.nodes)
        graph.add_edges_from(self.edges)
        return graph

    @property
    def num_qubits(self) -> int:
        return len(self.nodes)

    @property
    def max_degree(self) -> int:
        degrees = dict(self.to_networkx().degree)
        return max(degrees.values()) if degrees else 0

    def has_edge(self, a: int, b: int) -> bool:
        return _edge(a, b) in set(self.edges)

    def is_connected(self) -> bool:
        return self.num_qubits > 0 and nx.is_connected(self.to_networkx())

    def subgraph(self, nodes: Iterable[int]) -> 'ConnectivityGraph':
        """Induced subgraph on ``nodes``."""
        keep = set(nodes)
        missing = keep - set(self.nodes)
        if missing:
            raise ValueError(f'qubits {sorted(missing)} are not in the graph')
        return ConnectivityGraph(
            nodes=tuple(keep),
            edges=tuple(
                (a, b) for a, b in self.edges if a in keep and b in keep))

    def to_dict(self) -> Document:
        return {
            'nodes': list(self.nodes),
            'edges': [list(edge) for edge in self.edges]}

    @classmethod
    def from_dict(cls, document: MappingType[str, Any]) -> 'ConnectivityGraph':
        return cls(
            nodes=tuple(document['nodes']),
            edges=tuple((a, b) for a, b in document['edges']))


def _from_labeled(graph: nx.Graph) -> ConnectivityGraph:
    """Relabel an arbitrary networkx graph to integers in sorted node order."""
    relabeled = nx.convert_node_labels_to_integers(graph, ordering='sorted')
    return ConnectivityGraph.from_networkx(relabeled)


def heavy_hex(rows: int, cols: int) -> ConnectivityGraph:
    """A heavy-hexagon lattice of ``rows`` by ``cols`` hexagonal cells.

    A hexagonal lattice of ``m x n`` cells has ``3mn + 2m + 2n - 1``
    edges; placing a qubit on each edge doubles the edge count.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f'heavy_hex needs rows, cols >= 1, got {rows}, {cols}')
    lattice = nx.hexagonal_lattice_graph(rows, cols)
    heavy = nx.Graph()
    heavy.add_nodes_from((0, node) for node in lattice.nodes)
    for a, b in lattice.edges:
        middle = (1, tuple(sorted((a, b))))
        heavy.add_edge((0, a), middle)
        heavy.add_edge(middle, (0, b))
    return _from_labeled(heavy)


def heavy_hex_edge_count(rows: int, cols: int) -> int:
    return 2 * (3 * rows * cols + 2 * rows + 2 * cols - 1)


def grid(rows: int, cols: int) -> ConnectivityGraph:
    """Square lattice; qubit ``r * cols + c`` sits at row ``r``, column ``c``."""
    if rows < 1 or cols < 1:
        raise ValueError(f'grid needs rows, cols >= 1, got {rows}, {cols}')
    edges = []
    for r in range(rows):
        for c in range(cols):
            q = r * cols + c
            if c + 1 < cols:
                edges.append((q, q + 1))
            if r + 1 < rows:
                edges.append((q, q + cols))
    return ConnectivityGraph.from_edges(rows * cols, edges)


def all_to_all(num_qubits: int) -> ConnectivityGraph:
    if num_qubits < 1:
        raise ValueError(f'all_to_all needs at least one qubit, got {num_qubits}')
    return ConnectivityGraph.from_edges(
        num_qubits, itertools.combinations(range(num_qubits), 2))


@dataclass(frozen=True)
class Mapping:
    """Logical circuit qubit ``i`` sits on physical qubit ``qubits[i]``."""
    qubits: Tuple[int, ...]

    def __post_init__(self) -> None:
        qubits = tuple(int(q) for q in self.qubits)
        if len(set(qubits)) != len(qubits):
            raise ValueError(f'mapping is not injective: {qubits}')
        if any(q < 0 for q in qubits):
            raise ValueError(f'negative physical qubit in {qubits}')
        object.__setattr__(self, 'qubits', qubits)

    @property
    def mapping_id(self) -> str:
        digest = hashlib.sha256(
            ','.join(str(q) for q in self.qubits).encode('utf-8'))
        return 'm' + digest.hexdigest()[:10]

    @property
    def image(self) -> FrozenSet[int]:
        return frozenset(self.qubits)

    def as_dict(self) -> Dict[int, int]:
        return dict(enumerate(self.qubits))

    def inverse(self) -> Dict[int, int]:
        return {q: i for i, q in enumerate(self.qubits)}

    def __len__(self) -> int:
        return len(self.qubits)

    def to_dict(self) -> Document:
        return {'mapping_id': self.mapping_id, 'qubits': list(self.qubits)}

    @classmethod
    def from_dict(cls, document: MappingType[str, Any]) -> 'Mapping':
        mapping = cls(qubits=tuple(document['qubits']))
        if 'mapping_id' in document and document['mapping_id'] != mapping.mapping_id:
            raise ValueError(
                f'mapping_id {document["mapping_id"]} does not match '
                f'qubits {mapping.qubits}')
        return mapping


def trivial_layout(circuit_qubits: int, graph: ConnectivityGraph) -> Mapping:
    """Logical qubit ``i`` on physical qubit ``i``."""
    if circuit_qubits > graph.num_qubits:
        raise ValueError(
            f'circuit needs {circuit_qubits} qubits but the graph has '
            f'{graph.num_qubits}')
    node_set = set(graph.nodes)
    missing = [q for q in range(circuit_qubits) if q not in node_set]
    if missing:
        raise ValueError(f'graph has no physical qubits {missing}')
    return Mapping(qubits=tuple(range(circuit_qubits)))


def coupling_pattern(circuit: Circuit) -> ConnectivityGraph:
    """The graph of qubit pairs a circuit couples, over its own indices."""
    return ConnectivityGraph(
        nodes=circuit.qubits, edges=tuple(circuit.coupled_pairs()))


def _mapped(mapping: Mapping, qubit: int) -> int:
    if qubit >= len(mapping.qubits):
        raise ValueError(
            f'circuit qubit {qubit} is not covered by mapping '
            f'{mapping.mapping_id}')
    return mapping.qubits[qubit]


def non_adjacent_pairs(
        circuit: Circuit,
        mapping: Mapping,
        graph: ConnectivityGraph,
) -> List[Edge]:
    edges = set(graph.edges)
    return sorted(
        (_mapped(mapping, a), _mapped(mapping, b))
        for a, b in circuit.coupled_pairs()
        if _edge(_mapped(mapping, a), _mapped(mapping, b)) not in edges)


def is_executable(circuit: Circuit, mapping: Mapping, graph: ConnectivityGraph) -> bool:
    node_set = set(graph.nodes)
    if any(_mapped(mapping, q) not in node_set for q in circuit.qubits):
        return False
    return not non_adjacent_pairs(circuit, mapping, graph)


def used_subgraph(
        circuit: Circuit,
        mapping: Mapping,
        graph: ConnectivityGraph,
) -> ConnectivityGraph:
    """Induced subgraph of ``graph`` on the physical qubits ``circuit``
    occupies under ``mapping``.

    Raises:
        ValueError: A two-qubit gate lands on a non-adjacent pair.
    """
    bad = non_adjacent_pairs(circuit, mapping, graph)
    if bad:
        raise ValueError(
            f'circuit is not executable under mapping {mapping.mapping_id}: '
            f'pairs {bad} are not coupled')
    return graph.subgraph(_mapped(mapping, q) for q in circuit.qubits)


def _monomorphisms(
        pattern: ConnectivityGraph,
        host: ConnectivityGraph,
        permutation: Optional[np.ndarray] = None,
) -> Iterator[Mapping]:
    """Subgraph monomorphisms of ``pattern`` into ``host`` in VF2 order.

    ``permutation`` relabels host nodes before the search, which changes
    the order candidates are tried in.
    """
    host_graph = host.to_networkx()
    back: Dict[int, int] = {node: node for node in host.nodes}
    if permutation is not None:
        forward = {node: int(permutation[i]) for i, node in enumerate(host.nodes)}
        back = {label: node for node, label in forward.items()}
        host_graph = nx.relabel_nodes(host_graph, forward)
    matcher = isomorphism.GraphMatcher(host_graph, pattern.to_networkx())
    order = pattern.nodes
    for found in matcher.subgraph_monomorphisms_iter():
        inverse = {p: back[h] for h, p in found.items()}
        yield Mapping(qubits=tuple(inverse[p] for p in order))


def canonical_embedding(
        pattern: ConnectivityGraph,
        host: ConnectivityGraph,
) -> Optional[Mapping]:
    """The first monomorphism in unshuffled search order, or None."""
    return next(_monomorphisms(pattern, host), None)


def _select_diverse(candidates: Sequence[Mapping], k: int) -> List[Mapping]:
    """Prefer mappings with unseen images, then fill in candidate order."""
    chosen: List[Mapping] = []
    images: Set[FrozenSet[int]] = set()
    for mapping in candidates:
        if len(chosen) == k:
            break
        if mapping.image not in images:
            chosen.append(mapping)
            images.add(mapping.image)
    for mapping in candidates:
        if len(chosen) == k:
            break
        if mapping not in chosen:
            chosen.append(mapping)
    return chosen


def find_isomorphic_embeddings(
        pattern: ConnectivityGraph,
        host: ConnectivityGraph,
        k: int,
        rng: np.random.Generator,
        scan_limit: int = 2000,
        restarts: int = 64,
) -> List[Mapping]:
    """Up to ``k`` distinct placements of ``pattern`` on ``host``.

    The mapping's logical index ``i`` is the ``i``-th pattern node in
    sorted order. A first search under a seeded relabeling of the host
    scans up to ``scan_limit`` monomorphisms; when it runs dry the result
    is exhaustive. Otherwise further seeded restarts each contribute
    their first hit so that the selection spreads over distinct images.
    """
    if k < 1:
        raise ValueError(f'k must be at least 1, got {k}')
    if pattern.num_qubits > host.num_qubits:
        return []
    candidates: List[Mapping] = []
    search = _monomorphisms(pattern, host, rng.permutation(host.num_qubits))
    exhausted = True
    for mapping in search:
        if len(candidates) == scan_limit:
            exhausted = False
            break
        candidates.append(mapping)
    if not candidates:
        return []
    if exhausted:
        order = rng.permutation(len(candidates))
        return _select_diverse([candidates[i] for i in order], k)

    fresh: List[Mapping] = []
    fresh_images: Set[FrozenSet[int]] = {candidates[0].image}
    fresh.append(candidates[0])
    for attempt in range(restarts):
        if len(fresh) >= k:
            break
        mapping = next(
            _monomorphisms(pattern, host, rng.permutation(host.num_qubits)),
            None)
        if mapping is None or mapping.image in fresh_images:
            log.debug('embedding restart %d repeated an image', attempt)
            continue
        fresh.append(mapping)
        fresh_images.add(mapping.image)
    pool = fresh + [m for m in candidates if m not in fresh]
    return _select_diverse(pool, k)


def remap(
        circuit: Circuit,
        old: Mapping,
        new: Mapping,
        graph: Optional[ConnectivityGraph] = None,
) -> Circuit:
    """Move a placed circuit from ``old`` to ``new``.

    ``circuit`` is over physical indices of ``old``. With ``graph`` given,
    every coupled pair must remain a hardware edge under ``new``.

    Raises:
        ValueError: ``new`` is shorter than ``old`` or breaks adjacency.
    """
    if len(new) < len(old):
        raise ValueError(
            f'mapping {new.mapping_id} covers {len(new)} qubits, '
            f'{old.mapping_id} covers {len(old)}')
    local = circuit.relabeled(old.inverse())
    if graph is not None:
        bad = non_adjacent_pairs(local, new, graph)
        if bad:
            raise ValueError(
                f'remapping to {new.mapping_id} breaks coupled pairs {bad}')
    return local.relabeled(new.as_dict())


def plan_mappings(
        circuit: Circuit,
        host: ConnectivityGraph,
        plan: str,
        k: int,
        rng: np.random.Generator,
) -> List[Mapping]:
    """Placements for a circuit over local indices ``0..n-1``.

    ``plan`` is ``'trivial'`` for one compiler-style placement, or
    ``'random'`` for ``k`` seeded embeddings.

    Raises:
        ValueError: Unknown plan, or the circuit cannot be placed on
            ``host`` without routing.
    """
    pattern = coupling_pattern(circuit)
    if plan == 'trivial':
        if len(circuit.qubits) <= host.num_qubits:
            mapping = trivial_layout(len(circuit.qubits), host)
            if is_executable(circuit, mapping, host):
                return [mapping]
        canonical = canonical_embedding(pattern, host)
        if canonical is None:
            raise ValueError(
                f'circuit {circuit.name!r} does not embed in the host graph')
        log.info(
            'trivial layout of %r is not executable; using canonical '
            'embedding %s', circuit.name, canonical.mapping_id)
        return [canonical]
    if plan == 'random':
        found = find_isomorphic_embeddings(pattern, host, k, rng)
        if not found:
            raise ValueError(
                f'circuit {circuit.name!r} does not embed in the host graph')
        if len(found) < k:
            log.warning(
                'only %d of %d embeddings exist for %r',
                len(found), k, circuit.name)
        return found
    raise ValueError(f'unknown mapping plan {plan!r}')


def brute_force_embeddings(
        pattern: ConnectivityGraph,
        host: ConnectivityGraph,
) -> List[Mapping]:
    """Every injective edge-preserving map, by exhaustive enumeration."""
    host_edges = set(host.edges)
    out = []
    for image in itertools.permutations(host.nodes, pattern.num_qubits):
        place = dict(zip(pattern.nodes, image))
        if all(_edge(place[a], place[b]) in host_edges for a, b in pattern.edges):
            out.append(Mapping(qubits=image))
    return out


def cycle(n: int) -> ConnectivityGraph:
    return ConnectivityGraph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def path(n: int) -> ConnectivityGraph:
    return ConnectivityGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def test_heavy_hex_shape() -> None:
    for rows, cols in [(1, 1), (1, 2), (2, 2), (2, 3)]:
        graph = heavy_hex(rows, cols)
        assert graph.max_degree <= 3
        assert graph.is_connected()
        assert len(graph.edges) == heavy_hex_edge_count(rows, cols)


def test_trivial_layout_bounds() -> None:
    graph = grid(4, 5)
    assert trivial_layout(5, graph).qubits == (0, 1, 2, 3, 4)
    assert trivial_layout(20, graph).qubits == tuple(range(20))
    try:
        trivial_layout(21, graph)
    except ValueError:
        return
    raise AssertionError('oversized layout was accepted')


def test_embedding_counts_match_brute_force() -> None:
    rng = np.random.default_rng(0)
    cases = [
        (path(3), cycle(5), 10),
        (cycle(3), cycle(3), 6),
        (path(4), grid(2, 3), None),
        (cycle(4), grid(2, 4), None),
        (path(3), heavy_hex(1, 1), None),
    ]
    for pattern, host, expected in cases:
        brute = brute_force_embeddings(pattern, host)
        if expected is not None:
            assert len(brute) == expected
        found = find_isomorphic_embeddings(pattern, host, len(brute) + 5, rng)
        assert set(found) == set(brute)


def test_embeddings_preserve_edges() -> None:
    host = heavy_hex(2, 3)
    found = find_isomorphic_embeddings(path(5), host, 16, np.random.default_rng(3))
    assert len(found) == 16
    assert len(set(found)) == 16
    assert len({m.image for m in found}) == 16
    host_edges = set(host.edges)
    for mapping in found:
        for i in range(4):
            assert _edge(mapping.qubits[i], mapping.qubits[i + 1]) in host_edges


def test_embedding_search_is_seeded() -> None:
    host = grid(4, 4)
    first = find_isomorphic_embeddings(cycle(4), host, 5, np.random.default_rng(8))
    second = find_isomorphic_embeddings(cycle(4), host, 5, np.random.default_rng(8))
    assert first == second


def _chain_circuit() -> Circuit:
    return CircuitBuilder().cnot(0, 1).cnot(2, 1).measure(1, 's0').build('chain')


def test_used_subgraph_is_induced() -> None:
    host = path(6)
    chain = _chain_circuit()
    used = used_subgraph(chain, Mapping(qubits=(3, 4, 5)), host)
    assert used.nodes == (3, 4, 5)
    assert used.edges == ((3, 4), (4, 5))
    try:
        used_subgraph(chain, Mapping(qubits=(0, 2, 4)), host)
    except ValueError:
        return
    raise AssertionError('non-adjacent placement was accepted')


def test_remap_moves_placed_circuit() -> None:
    host = path(6)
    old = Mapping(qubits=(0, 1, 2))
    placed = _chain_circuit().relabeled(old.as_dict())
    moved = remap(placed, old, Mapping(qubits=(5, 4, 3)), host)
    assert moved.coupled_pairs() == {(4, 5), (3, 4)}
    assert moved.qubits == (3, 4, 5)
    try:
        remap(placed, old, Mapping(qubits=(0, 2, 4)), host)
    except ValueError:
        return
    raise AssertionError('remap broke adjacency without complaint')


def test_remap_identity_and_round_trip() -> None:
    host = grid(3, 3)
    a = Mapping(qubits=(0, 1, 2))
    b = Mapping(qubits=(8, 5, 2))
    placed = _chain_circuit().relabeled(a.as_dict())
    assert remap(placed, a, a, host) == placed
    there = remap(placed, a, b, host)
    assert there.qubits == (2, 5, 8)
    assert remap(there, b, a, host) == placed
