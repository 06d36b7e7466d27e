from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from pyrds.estimators import homophily_by_category
from pyrds.exceptions import (ClampWarning, HomophilyError, NetworkGenerationError,
                              NetworkTransformError, RewireSkipWarning)
from pyrds.graph import AttributedGraph, NodePartition, undirected_graph

logger = logging.getLogger(__name__)

degree_kinds = ['geometric', 'power-law', 'sequence']
weight_schemes = ['lognormal', 'max', 'min']


@dataclass(frozen=True)
class DegreeDistribution:
    """Target degree distribution of a generated network

    Parameters
    ----------
    kind : str, optional
        One of 'geometric', 'power-law' or 'sequence', by default 'geometric'
    mean : float, optional
        Mean degree of the geometric kind, by default 7.0
    exponent : float, optional
        Exponent of the power-law kind, p(k) ~ k^-exponent, by default 2.5
    min_degree : int, optional
        Smallest degree of the power-law kind, by default 2
    cutoff : Optional[int], optional
        Largest degree of the power-law kind, by default N-1
    sequence : Optional[Tuple[int, ...]], optional
        Explicit degree per node for the sequence kind, by default None
    """
    kind: str = 'geometric'
    mean: float = 7.0
    exponent: float = 2.5
    min_degree: int = 2
    cutoff: Optional[int] = None
    sequence: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.kind not in degree_kinds:
            raise NetworkGenerationError(f'Degree distribution kind must be one of {degree_kinds}, got {self.kind!r}')
        if self.kind == 'geometric' and not self.mean >= 1:
            raise NetworkGenerationError('Geometric degree distribution needs a mean >= 1')
        if self.kind == 'power-law':
            if not self.exponent > 1:
                raise NetworkGenerationError('Power-law exponent must be > 1')
            if self.min_degree < 1 or (self.cutoff is not None and self.cutoff < self.min_degree):
                raise NetworkGenerationError('Power-law needs 1 <= min_degree <= cutoff')
        if self.kind == 'sequence':
            if self.sequence is None:
                raise NetworkGenerationError('Degree sequence kind needs an explicit sequence')
            seq = tuple(int(d) for d in self.sequence)
            if any(d < 0 for d in seq):
                raise NetworkGenerationError('Degrees in a sequence must be non-negative')
            object.__setattr__(self, 'sequence', seq)

    def sample(self, n_nodes: int, rng: np.random.Generator) -> np.ndarray:
        """Degree sequence for `n_nodes` nodes, capped at N-1 and with an even sum"""
        if self.kind == 'sequence':
            if len(self.sequence) != n_nodes:
                raise NetworkGenerationError(f'Degree sequence has {len(self.sequence)} entries for {n_nodes} nodes')
            degrees = np.array(self.sequence, dtype=np.int64)
        elif self.kind == 'geometric':
            degrees = rng.geometric(1.0 / self.mean, size=n_nodes)
        else:
            kmax = n_nodes - 1 if self.cutoff is None else min(self.cutoff, n_nodes - 1)
            ks = np.arange(min(self.min_degree, kmax), kmax + 1)
            p = ks.astype(float) ** -self.exponent
            degrees = rng.choice(ks, size=n_nodes, p=p / p.sum())
        degrees = np.clip(degrees, 0, n_nodes - 1).astype(np.int64)
        if degrees.sum() % 2:
            room = np.flatnonzero(degrees < n_nodes - 1)
            degrees[rng.choice(room)] += 1
        return degrees


@dataclass(frozen=True)
class AttributeSpec:
    """Categorical attribute planted on a generated network

    Parameters
    ----------
    name : str
        Attribute name
    proportions : Mapping[str, float]
        Category to population share, shares sum to 1
    homophily : Union[None, float, Mapping[str, float]], optional
        Target homophily, one number for every category or a per-category mapping;
        None (or unlisted categories) leaves mixing unconstrained, by default None
    """
    name: str
    proportions: Mapping[str, float]
    homophily: Union[None, float, Mapping[str, float]] = None

    def __post_init__(self):
        props = {str(k): float(v) for k, v in dict(self.proportions).items()}
        if not props:
            raise NetworkGenerationError(f'Attribute {self.name!r} needs at least one category')
        if any(v <= 0 for v in props.values()) or abs(sum(props.values()) - 1.0) > 1e-9:
            raise NetworkGenerationError(f'Proportions of {self.name!r} must be positive and sum to 1')
        object.__setattr__(self, 'proportions', props)
        targets = self.targets()
        for cat, h in targets.items():
            if cat not in props:
                raise NetworkGenerationError(f'Homophily target for unknown category {cat!r} of {self.name!r}')
            if not 0 <= h < 1:
                raise NetworkGenerationError(f'Homophily targets must lie in [0, 1), got {h} for {cat!r}')

    @property
    def categories(self) -> List[str]:
        return list(self.proportions)

    def targets(self) -> Dict[str, float]:
        """Homophily target per constrained category"""
        if self.homophily is None:
            return {}
        if isinstance(self.homophily, Mapping):
            return {str(k): float(v) for k, v in self.homophily.items()}
        return {cat: float(self.homophily) for cat in self.proportions}


@dataclass(frozen=True)
class GeneratorSpec:
    """Recipe for a synthetic attributed network

    Parameters
    ----------
    node_count : int
        Number of nodes before the giant component is extracted, at least 2
    degree_distribution : DegreeDistribution, optional
        Degree model of the configuration graph, by default geometric with mean 7
    attributes : Sequence[AttributeSpec], optional
        Attributes to plant, by default none
    rng_seed : int, optional
        Seed of the generator, by default 0
    tolerance : float, optional
        Accepted distance between measured and target homophily, by default 0.02
    max_passes : int, optional
        Rewiring passes (one proposal per edge each) before giving up, by default 50
    """
    node_count: int
    degree_distribution: DegreeDistribution = field(default_factory=DegreeDistribution)
    attributes: Sequence[AttributeSpec] = ()
    rng_seed: int = 0
    tolerance: float = 0.02
    max_passes: int = 50

    def __post_init__(self):
        if int(self.node_count) < 2:
            raise NetworkGenerationError('A generated network needs at least 2 nodes')
        object.__setattr__(self, 'attributes', tuple(self.attributes))
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise NetworkGenerationError(f'Attribute names must be unique, got {names}')
        if self.tolerance <= 0 or self.max_passes < 1:
            raise NetworkGenerationError('Tolerance must be > 0 and max_passes >= 1')


def configuration_pairs(degrees: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Erased configuration model: pair shuffled stubs, then drop self-loops and repeated pairs

    Parameters
    ----------
    degrees : np.ndarray
        Stub count per node
    rng : np.random.Generator
        Random stream

    Returns
    -------
    np.ndarray
        Undirected (u, v) pairs with u < v, each listed once
    """
    stubs = np.repeat(np.arange(len(degrees)), degrees)
    rng.shuffle(stubs)
    if len(stubs) % 2:
        stubs = stubs[:-1]
    u, v = stubs[0::2], stubs[1::2]
    keep = u != v
    pairs = np.column_stack([np.minimum(u, v)[keep], np.maximum(u, v)[keep]])
    if len(pairs) == 0:
        return pairs.reshape(0, 2)
    return np.unique(pairs, axis=0)


def assign_categories(spec: AttributeSpec, degrees: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Exact category counts (largest remainder), spread evenly over the degree ranking so every
    category gets the same degree profile. Ties in degree are broken at random."""
    n = len(degrees)
    cats = spec.categories
    shares = np.array([spec.proportions[c] for c in cats])
    raw = shares * n
    counts = np.floor(raw).astype(np.int64)
    short = n - counts.sum()
    counts[np.argsort(-(raw - counts), kind='stable')[:short]] += 1

    # interleave categories so every prefix of the ranking holds them in proportion
    assigned = np.zeros(len(cats))
    pattern = np.empty(n, dtype=np.int64)
    for r in range(n):
        k = int(np.argmax((r + 1) * counts / n - assigned))
        pattern[r] = k
        assigned[k] += 1
    rank = np.lexsort((rng.random(n), degrees))
    labels = np.empty(n, dtype=object)
    labels[rank] = np.asarray(cats, dtype=object)[pattern]
    return labels.astype(str)


class _MixingTracker(object):
    """In-group endpoint counts of one attribute, updated incrementally under degree-preserving swaps"""
    def __init__(self, name: str, codes: np.ndarray, categories: List[str], degrees: np.ndarray,
                targets: Mapping[str, float]) -> None:
        self.name = name
        self.categories = categories
        k = len(categories)
        self.codes = codes.tolist()
        self.share = (np.bincount(codes, minlength=k) / len(codes)).tolist()
        self.total = np.bincount(codes, weights=degrees, minlength=k).tolist()
        self.targets = [targets.get(c) for c in categories]
        self.constrained = [t is not None and self.total[i] > 0 and self.share[i] < 1
                            for i, t in enumerate(self.targets)]
        self.in_group = [0.0] * k

    def start(self, us: List[int], vs: List[int]) -> None:
        self.in_group = [0.0] * len(self.categories)
        c = self.codes
        for u, v in zip(us, vs):
            if c[u] == c[v]:
                self.in_group[c[u]] += 2

    def homophily(self, k: int, in_group: Optional[float] = None) -> float:
        in_group = self.in_group[k] if in_group is None else in_group
        return (in_group / self.total[k] - self.share[k]) / (1.0 - self.share[k])

    def error(self, k: int, in_group: Optional[float] = None) -> float:
        if not self.constrained[k]:
            return 0.0
        return (self.homophily(k, in_group) - self.targets[k]) ** 2

    def delta(self, old: Tuple[Tuple[int, int], ...], new: Tuple[Tuple[int, int], ...]) -> Dict[int, float]:
        c = self.codes
        out: Dict[int, float] = {}
        for edges, sign in ((old, -2), (new, 2)):
            for x, y in edges:
                if c[x] == c[y]:
                    out[c[x]] = out.get(c[x], 0) + sign
        return out

    def worst(self) -> Tuple[Optional[str], float]:
        gaps = [(abs(self.homophily(k) - self.targets[k]), self.categories[k])
                for k in range(len(self.categories)) if self.constrained[k]]
        if not gaps:
            return None, 0.0
        gap, cat = max(gaps)
        return cat, gap


def plant_homophily(pairs: np.ndarray,
                    n_nodes: int,
                    attributes: Mapping[str, np.ndarray],
                    specs: Sequence[AttributeSpec],
                    rng: np.random.Generator,
                    tolerance: float = 0.02,
                    max_passes: int = 50) -> np.ndarray:
    """Degree-preserving double-edge swaps that move the measured homophily of every constrained
    category towards its target. A swap is kept only when it lowers the squared distance to the targets.

    Parameters
    ----------
    pairs : np.ndarray
        Undirected (u, v) pairs
    n_nodes : int
        Number of nodes
    attributes : Mapping[str, np.ndarray]
        Category label per node for every attribute
    specs : Sequence[AttributeSpec]
        Attribute specifications holding the targets
    rng : np.random.Generator
        Random stream
    tolerance : float, optional
        Accepted distance to the targets, by default 0.02
    max_passes : int, optional
        Number of passes of one proposal per edge, by default 50

    Returns
    -------
    np.ndarray
        Rewired pairs, same degree sequence as the input

    Raises
    ------
    HomophilyError
        If the swaps stall before every target is within `tolerance`
    """
    n_pairs = len(pairs)
    constrained_specs = [s for s in specs if s.targets()]
    if n_pairs < 2 or not constrained_specs:
        return pairs
    us, vs = pairs[:, 0].tolist(), pairs[:, 1].tolist()
    degrees = np.bincount(pairs.ravel(), minlength=n_nodes)
    trackers = []
    for spec in constrained_specs:
        cats = spec.categories
        lookup = {c: i for i, c in enumerate(cats)}
        codes = np.array([lookup[str(v)] for v in attributes[spec.name]], dtype=np.int64)
        tracker = _MixingTracker(spec.name, codes, cats, degrees, spec.targets())
        tracker.start(us, vs)
        trackers.append(tracker)
    taken = {min(u, v) * n_nodes + max(u, v) for u, v in zip(us, vs)}

    def converged(limit: float) -> bool:
        return all(t.worst()[1] <= limit for t in trackers)

    for npass in range(max_passes):
        if converged(tolerance / 2):
            break
        first = rng.integers(n_pairs, size=n_pairs).tolist()
        second = rng.integers(n_pairs, size=n_pairs).tolist()
        flips = (rng.random(n_pairs) < 0.5).tolist()
        accepted = 0
        for i, j, flip in zip(first, second, flips):
            if i == j:
                continue
            a, b, c, d = us[i], vs[i], us[j], vs[j]
            if flip:
                c, d = d, c
            # (a,b),(c,d) -> (a,d),(c,b)
            if a == d or c == b:
                continue
            key1 = min(a, d) * n_nodes + max(a, d)
            key2 = min(c, b) * n_nodes + max(c, b)
            if key1 == key2 or key1 in taken or key2 in taken:
                continue
            old, new = ((a, b), (c, d)), ((a, d), (c, b))
            change = 0.0
            deltas = []
            for t in trackers:
                delta = t.delta(old, new)
                deltas.append(delta)
                for k, dk in delta.items():
                    change += t.error(k, t.in_group[k] + dk) - t.error(k)
            if change >= -1e-15:
                continue
            for t, delta in zip(trackers, deltas):
                for k, dk in delta.items():
                    t.in_group[k] += dk
            taken.discard(min(a, b) * n_nodes + max(a, b))
            taken.discard(min(c, d) * n_nodes + max(c, d))
            taken.add(key1)
            taken.add(key2)
            us[i], vs[i] = a, d
            us[j], vs[j] = c, b
            accepted += 1
        logger.debug('homophily pass %d: %d swaps accepted', npass + 1, accepted)
        if accepted == 0:
            break

    for t in trackers:
        cat, gap = t.worst()
        if gap > tolerance:
            raise HomophilyError(f'Could not plant the homophily of attribute {t.name!r}: category {cat!r} '
                                 f'is {gap:.3f} away from its target after rewiring stalled', attribute=t.name)
    return np.column_stack([us, vs]).astype(np.int64)


def generate(spec: GeneratorSpec, rounds: int = 3) -> AttributedGraph:
    """Generate a connected undirected network with planted attribute proportions and homophily

    The degree sequence feeds an erased configuration model, the giant component is kept,
    attributes are assigned by their proportions and discordant edges are swapped until every
    constrained category is within ``spec.tolerance`` of its homophily target. Restricting to the
    giant component after the swaps can shift the measured values, so planting is repeated up to
    `rounds` times.

    Parameters
    ----------
    spec : GeneratorSpec
        Network recipe
    rounds : int, optional
        Planting rounds, by default 3

    Returns
    -------
    AttributedGraph
        All-reciprocal connected graph

    Raises
    ------
    HomophilyError
        If a homophily target cannot be reached
    """
    rng = np.random.default_rng(spec.rng_seed)
    n = int(spec.node_count)
    if n == 2:
        pairs = np.array([[0, 1]])
    else:
        degrees = spec.degree_distribution.sample(n, rng)
        pairs = configuration_pairs(degrees, rng)
    graph = undirected_graph(n, pairs).restrict_to_giant()
    if graph.n_nodes < 2:
        raise NetworkGenerationError('Configuration model produced no edges; raise the degrees')
    logger.info('configuration graph: %d of %d nodes in the giant component, %d edges',
                graph.n_nodes, n, graph.n_edges // 2)

    degrees = graph.degrees()
    attributes = {a.name: assign_categories(a, degrees, rng) for a in spec.attributes}
    if attributes:
        graph = AttributedGraph(graph.n_nodes, graph.edges, graph.weights, attributes)

    for nround in range(rounds):
        pairs, _, _ = graph.undirected_pairs()
        attributes = {name: graph.attribute_values(name) for name in graph.attribute_names}
        pairs = plant_homophily(pairs, graph.n_nodes, attributes, spec.attributes, rng,
                                tolerance=spec.tolerance, max_passes=spec.max_passes)
        graph = undirected_graph(graph.n_nodes, pairs, attributes=attributes).restrict_to_giant()
        gaps = _homophily_gaps(graph, spec.attributes)
        if all(gap <= spec.tolerance for _, gap in gaps.values()):
            logger.info('generated %r after %d planting round(s)', graph, nround + 1)
            return graph
        logger.debug('giant component moved homophily off target, replanting (round %d)', nround + 1)
    name = max(gaps, key=lambda a: gaps[a][1])
    cat, gap = gaps[name]
    raise HomophilyError(f'Homophily of attribute {name!r} (category {cat!r}) ends {gap:.3f} away from '
                         f'its target after {rounds} planting rounds', attribute=name)


def _homophily_gaps(graph: AttributedGraph, specs: Sequence[AttributeSpec]) -> Dict[str, Tuple[Optional[str], float]]:
    gaps = {}
    if graph.n_edges < 4:
        return gaps
    for spec in specs:
        targets = spec.targets()
        if not targets:
            continue
        measured = homophily_by_category(graph, spec.name)
        worst = (None, 0.0)
        for cat, target in targets.items():
            h = measured.get(cat, np.nan)
            if np.isnan(h):
                continue
            if abs(h - target) > worst[1]:
                worst = (cat, abs(h - target))
        gaps[spec.name] = worst
    return gaps


def _require_undirected(graph: AttributedGraph, what: str) -> None:
    if not graph.is_undirected():
        raise NetworkTransformError(f'{what} needs an all-reciprocal graph; '
                                    f'{graph.irreciprocal_fraction():.1%} of the edges are one-way')


def node_types(graph: AttributedGraph, attribute: Optional[str] = None) -> np.ndarray:
    """Integer type per node: the category of `attribute`, or the joint category over all
    attributes when `attribute` is None"""
    names = graph.attribute_names if attribute is None else [attribute]
    if not names:
        return np.zeros(graph.n_nodes, dtype=np.int64)
    cols = np.column_stack([graph.attribute_codes(name) for name in names])
    _, types = np.unique(cols, axis=0, return_inverse=True)
    return np.asarray(types, dtype=np.int64).ravel()


def _type_index(types: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    order = np.argsort(types, kind='stable')
    sizes = np.bincount(types)
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    return order, starts, sizes


def _canonical_keys(u: np.ndarray, v: np.ndarray, n: int) -> np.ndarray:
    return np.minimum(u, v) * n + np.maximum(u, v)


def make_directed_variant(graph: AttributedGraph,
                          irreciprocal_fraction: float,
                          attachment_bias: float = 0.0,
                          partition: Optional[NodePartition] = None,
                          rng_seed: int = 0,
                          weight: float = 1.0,
                          return_stats: bool = False):
    """Add one-way edges to an undirected network until the requested share of edges is irreciprocal

    Sources are drawn uniformly; targets with probability proportional to ``1 + attachment_bias``
    for members of `partition` and 1 otherwise, so a positive bias gives group A extra in-edges.
    New edges never touch a pair that already holds an edge in either direction.

    Parameters
    ----------
    graph : AttributedGraph
        Connected all-reciprocal network
    irreciprocal_fraction : float
        Share of one-way edges in the output, in [0, 1)
    attachment_bias : float, optional
        Extra target weight of group A, > -1, by default 0.0
    partition : Optional[NodePartition], optional
        Group receiving the bias, required when the bias is non-zero, by default None
    rng_seed : int, optional
        Seed, by default 0
    weight : float, optional
        Weight of the added edges, by default 1.0
    return_stats : bool, optional
        Also return a dict of transform statistics, by default False

    Returns
    -------
    AttributedGraph
        Directed network restricted to its giant strongly connected component
    """
    if not 0 <= irreciprocal_fraction < 1:
        raise NetworkTransformError(f'Irreciprocal fraction must lie in [0, 1), got {irreciprocal_fraction}')
    if attachment_bias <= -1:
        raise NetworkTransformError('Attachment bias must be > -1')
    if attachment_bias != 0 and partition is None:
        raise NetworkTransformError('A non-zero attachment bias needs the partition it favours')
    _require_undirected(graph, 'make_directed_variant')
    if not graph.is_connected():
        raise NetworkTransformError('make_directed_variant needs a connected graph; restrict to the giant component first')

    n = graph.n_nodes
    n_recip = graph.n_edges
    n_new = int(round(irreciprocal_fraction * n_recip / (1.0 - irreciprocal_fraction)))
    free_pairs = n * (n - 1) // 2 - n_recip // 2
    if n_new > free_pairs:
        raise NetworkTransformError(f'Cannot add {n_new} one-way edges: only {free_pairs} node pairs are free')

    rng = np.random.default_rng(rng_seed)
    target_p = np.ones(n)
    if partition is not None:
        target_p = target_p + attachment_bias * partition.members
    target_p = target_p / target_p.sum()

    taken = _canonical_keys(graph.src, graph.dst, n)
    new_src: List[np.ndarray] = []
    new_dst: List[np.ndarray] = []
    need, stalls = n_new, 0
    while need > 0:
        k = int(need * 1.2) + 16
        src = rng.integers(n, size=k)
        dst = rng.choice(n, size=k, p=target_p)
        ok = src != dst
        src, dst = src[ok], dst[ok]
        keys = _canonical_keys(src, dst, n)
        _, first = np.unique(keys, return_index=True)
        first.sort()
        src, dst, keys = src[first], dst[first], keys[first]
        fresh = ~np.isin(keys, taken)
        src, dst, keys = src[fresh][:need], dst[fresh][:need], keys[fresh][:need]
        if len(src) == 0:
            stalls += 1
            if stalls > 100:
                raise NetworkTransformError(f'Could only place {n_new - need} of {n_new} one-way edges')
            continue
        new_src.append(src)
        new_dst.append(dst)
        taken = np.concatenate([taken, keys])
        need -= len(src)

    if n_new:
        added = np.column_stack([np.concatenate(new_src), np.concatenate(new_dst)])
        edges = np.concatenate([graph.edges, added])
        weights = np.concatenate([graph.weights, np.full(n_new, float(weight))])
        out = graph._replace(edges, weights).restrict_to_giant(directed=True)
    else:
        out = graph
    stats = {'added': n_new, 'irreciprocal_fraction': out.irreciprocal_fraction(),
             'retained_fraction': out.n_nodes / n}
    logger.info('directed variant: %d one-way edges added, irreciprocal share %.3f',
                n_new, stats['irreciprocal_fraction'])
    return (out, stats) if return_stats else out


def add_edges_preserving_homophily(graph: AttributedGraph,
                                   degree_increase: float,
                                   rng_seed: int = 0,
                                   attribute: Optional[str] = None,
                                   weight: float = 1.0,
                                   return_stats: bool = False):
    """Add reciprocal edges, raising the mean degree by `degree_increase`, with the mixing of the input

    Each new edge first picks a pair of node types with probability proportional to the number of
    existing edges between them, then joins two uniformly drawn non-adjacent nodes of those types.
    In-group shares, and with them the homophily of every type, are kept in expectation.

    Parameters
    ----------
    graph : AttributedGraph
        All-reciprocal network
    degree_increase : float
        Rise of the mean degree
    rng_seed : int, optional
        Seed, by default 0
    attribute : Optional[str], optional
        Attribute whose mixing is matched, None matches the joint mixing of all attributes,
        by default None
    weight : float, optional
        Weight of the added edges, by default 1.0
    return_stats : bool, optional
        Also return a dict of transform statistics, by default False

    Returns
    -------
    AttributedGraph
        Denser all-reciprocal network
    """
    _require_undirected(graph, 'add_edges_preserving_homophily')
    if degree_increase < 0:
        raise NetworkTransformError('Degree increase must be non-negative')
    n = graph.n_nodes
    n_new = int(round(degree_increase * n / 2.0))
    free_pairs = n * (n - 1) // 2 - graph.n_edges // 2
    if n_new > free_pairs:
        raise NetworkTransformError(f'Cannot raise the mean degree by {degree_increase}: '
                                    f'{n_new} new edges requested, {free_pairs} node pairs are free')
    if n_new == 0:
        return (graph, {'added': 0}) if return_stats else graph

    pairs, _, _ = graph.undirected_pairs()
    if len(pairs) == 0:
        raise NetworkTransformError('Input graph has no edges whose mixing could be copied')
    types = node_types(graph, attribute)
    n_types = int(types.max()) + 1
    mix_keys = _canonical_keys(types[pairs[:, 0]], types[pairs[:, 1]], n_types)
    mix, counts = np.unique(mix_keys, return_counts=True)
    mix_p = counts / counts.sum()
    order, starts, sizes = _type_index(types)

    rng = np.random.default_rng(rng_seed)
    taken = _canonical_keys(pairs[:, 0], pairs[:, 1], n)
    new_u: List[np.ndarray] = []
    new_v: List[np.ndarray] = []
    need, stalls = n_new, 0
    while need > 0:
        k = int(need * 1.3) + 16
        drawn = mix[rng.choice(len(mix), size=k, p=mix_p)]
        s, t = drawn // n_types, drawn % n_types
        u = order[starts[s] + (rng.random(k) * sizes[s]).astype(np.int64)]
        v = order[starts[t] + (rng.random(k) * sizes[t]).astype(np.int64)]
        ok = u != v
        u, v = u[ok], v[ok]
        keys = _canonical_keys(u, v, n)
        _, first = np.unique(keys, return_index=True)
        first.sort()
        u, v, keys = u[first], v[first], keys[first]
        fresh = ~np.isin(keys, taken)
        u, v, keys = u[fresh][:need], v[fresh][:need], keys[fresh][:need]
        if len(u) == 0:
            stalls += 1
            if stalls > 100:
                raise NetworkTransformError(f'Could only place {n_new - need} of {n_new} edges '
                                            f'without breaking the mixing of the input')
            continue
        new_u.append(u)
        new_v.append(v)
        taken = np.concatenate([taken, keys])
        need -= len(u)

    added = np.column_stack([np.concatenate(new_u), np.concatenate(new_v)])
    edges = np.concatenate([graph.edges, added, added[:, ::-1]])
    weights = np.concatenate([graph.weights, np.full(2 * n_new, float(weight))])
    out = graph._replace(edges, weights)
    stats = {'added': n_new, 'mean_degree_before': graph.n_edges / n, 'mean_degree_after': out.n_edges / n}
    logger.info('added %d edges, mean degree %.2f -> %.2f', n_new,
                stats['mean_degree_before'], stats['mean_degree_after'])
    return (out, stats) if return_stats else out


def rewire_preserving_attributes(graph: AttributedGraph,
                                 rng_seed: int = 0,
                                 attribute: Optional[str] = None,
                                 min_retained: float = 0.95,
                                 max_attempts: int = 10,
                                 return_stats: bool = False):
    """Visit every reciprocal edge once, in random order, and move one of its endpoints to a random
    node of the same type. Degrees are not preserved; node types at both ends of every edge are.

    Parameters
    ----------
    graph : AttributedGraph
        All-reciprocal network
    rng_seed : int, optional
        Seed, by default 0
    attribute : Optional[str], optional
        Attribute defining the type of a node, None uses the joint value of all attributes,
        by default None
    min_retained : float, optional
        Smallest share of nodes the giant component of the output may keep, by default 0.95
    max_attempts : int, optional
        Replacement draws per edge before it is skipped, by default 10
    return_stats : bool, optional
        Also return a dict of transform statistics, by default False

    Returns
    -------
    AttributedGraph
        Rewired network restricted to its giant reciprocal component

    Raises
    ------
    NetworkTransformError
        If the giant component keeps fewer than `min_retained` of the nodes
    """
    _require_undirected(graph, 'rewire_preserving_attributes')
    n = graph.n_nodes
    pairs, w_fwd, w_bwd = graph.undirected_pairs()
    n_pairs = len(pairs)
    types = node_types(graph, attribute)
    order, starts, sizes = (arr.tolist() for arr in _type_index(types))
    types = types.tolist()

    rng = np.random.default_rng(rng_seed)
    visit = rng.permutation(n_pairs).tolist()
    keep_first = (rng.random(n_pairs) < 0.5).tolist()
    draws = rng.random((n_pairs, max_attempts))
    us, vs = pairs[:, 0].tolist(), pairs[:, 1].tolist()
    taken = {u * n + v for u, v in zip(us, vs)}
    skipped = 0
    for i in visit:
        u, v = us[i], vs[i]
        keep, old = (u, v) if keep_first[i] else (v, u)
        t = types[old]
        size = sizes[t]
        if size < 2:
            skipped += 1
            continue
        for r in draws[i]:
            w = order[starts[t] + int(r * size)]
            key = min(keep, w) * n + max(keep, w)
            if w != keep and key not in taken:
                break
        else:
            skipped += 1
            continue
        taken.discard(min(u, v) * n + max(u, v))
        taken.add(key)
        if keep == u:
            vs[i] = w
        else:
            us[i] = w

    if skipped:
        warnings.warn(f'{skipped} of {n_pairs} edges could not be rewired and were kept', RewireSkipWarning)
    us, vs = np.asarray(us, dtype=np.int64), np.asarray(vs, dtype=np.int64)
    edges = np.concatenate([np.column_stack([us, vs]), np.column_stack([vs, us])])
    out = graph._replace(edges, np.concatenate([w_fwd, w_bwd])).restrict_to_giant()
    retained = out.n_nodes / max(n, 1)
    if retained < min_retained:
        raise NetworkTransformError(f'Rewired graph keeps only {retained:.1%} of the nodes in its giant '
                                    f'component (minimum {min_retained:.0%})')
    stats = {'rewired': n_pairs - skipped, 'skipped': skipped, 'retained_fraction': retained}
    logger.info('rewired %d edges (%d skipped), giant component keeps %.1f%% of the nodes',
                n_pairs - skipped, skipped, 100 * retained)
    return (out, stats) if return_stats else out


def assign_edge_weights(graph: AttributedGraph,
                        scheme: str = 'lognormal',
                        mu: float = 2.0,
                        sigma: float = 1.0,
                        rng_seed: int = 0,
                        symmetric: bool = True,
                        in_group_boost: float = 1.0,
                        boost_attribute: Optional[str] = None,
                        return_stats: bool = False):
    """Give every edge a weight

    'lognormal' draws fresh weights, one per reciprocal pair (or one per direction with
    ``symmetric=False``, to simulate raw message counts); 'max' and 'min' combine the existing
    weights of the two directions of every reciprocal pair.

    Parameters
    ----------
    graph : AttributedGraph
        Network to weight
    scheme : str, optional
        One of 'lognormal', 'max' or 'min', by default 'lognormal'
    mu : float, optional
        Mean of the underlying normal, by default 2.0
    sigma : float, optional
        Standard deviation of the underlying normal, by default 1.0
    rng_seed : int, optional
        Seed, by default 0
    symmetric : bool, optional
        Draw one value per reciprocal pair, by default True
    in_group_boost : float, optional
        Factor applied to edges joining two nodes of the same `boost_attribute` category, by default 1.0
    boost_attribute : Optional[str], optional
        Attribute the boost refers to, by default None
    return_stats : bool, optional
        Also return a dict of transform statistics, by default False

    Returns
    -------
    AttributedGraph
        Same edges, new weights (all >= 1 for lognormal draws)
    """
    if scheme not in weight_schemes:
        raise NetworkTransformError(f'Weight scheme must be one of {weight_schemes}, got {scheme!r}')
    rev = graph.reverse_edge_index
    n_edges = graph.n_edges
    clamped = 0
    if scheme == 'lognormal':
        if sigma < 0 or in_group_boost <= 0:
            raise NetworkTransformError('Lognormal weights need sigma >= 0 and a positive in-group boost')
        rng = np.random.default_rng(rng_seed)
        raw = rng.lognormal(mu, sigma, size=n_edges)
        if symmetric:
            lead = np.where((rev >= 0) & (graph.src > graph.dst), rev, np.arange(n_edges))
            raw = raw[lead]
        if boost_attribute is not None and in_group_boost != 1.0:
            codes = graph.attribute_codes(boost_attribute)
            raw = np.where(codes[graph.src] == codes[graph.dst], raw * in_group_boost, raw)
        low = raw < 1.0
        clamped = int(low.sum())
        weights = np.where(low, 1.0, raw)
        if clamped:
            warnings.warn(f'{clamped} weights below 1 were clamped to 1', ClampWarning)
    else:
        current = graph.weights
        partner = np.where(rev >= 0, current[np.maximum(rev, 0)], current)
        weights = np.maximum(current, partner) if scheme == 'max' else np.minimum(current, partner)
    out = graph._replace(weights=weights)
    stats = {'scheme': scheme, 'clamped': clamped}
    logger.info('assigned %s weights to %d edges (%d clamped)', scheme, n_edges, clamped)
    return (out, stats) if return_stats else out
