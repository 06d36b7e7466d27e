from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import sparse
from scipy.sparse import csgraph

from pyrds.exceptions import GraphError

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, Sequence]

degree_modes = ['reciprocal', 'out', 'in']


@dataclass(frozen=True, eq=False)
class NodePartition:
    """Binary split of the nodes into a group of interest (A) and its complement.

    Parameters
    ----------
    attribute : str
        Attribute the partition was built from
    target_value : str
        Category defining group A
    members : np.ndarray
        Boolean membership flag per node
    complemented : bool, optional
        True when A is every node *not* carrying `target_value`, by default False
    """
    attribute: str
    target_value: str
    members: np.ndarray = field(repr=False)
    complemented: bool = False

    def __post_init__(self):
        members = np.array(self.members, dtype=bool).ravel()
        members.setflags(write=False)
        object.__setattr__(self, 'members', members)

    @property
    def label(self) -> str:
        if self.complemented:
            return f'not {self.target_value}'
        return str(self.target_value)

    @property
    def size(self) -> int:
        return int(self.members.sum())

    def complement(self) -> NodePartition:
        return NodePartition(self.attribute, self.target_value, ~self.members, not self.complemented)

    def __len__(self) -> int:
        return len(self.members)


class AttributedGraph(object):
    """Immutable directed graph over dense integer nodes ``0..N-1`` with categorical node attributes
    and positive edge weights. An edge (u,v) is reciprocal when (v,u) is also present; a graph whose
    edges are all reciprocal is treated as undirected.
    """
    def __init__(self,
                n_nodes: int,
                edges: Optional[ArrayLike] = None,
                weights: Optional[ArrayLike] = None,
                attributes: Optional[Mapping[str, ArrayLike]] = None) -> None:
        """Build and validate a graph

        Parameters
        ----------
        n_nodes : int
            Number of nodes, identifiers are ``0..n_nodes-1``
        edges : Optional[ArrayLike], optional
            Sequence of (src, dst) pairs, by default no edges
        weights : Optional[ArrayLike], optional
            Positive weight per edge, by default 1.0 everywhere
        attributes : Optional[Mapping[str, ArrayLike]], optional
            Attribute name to a length ``n_nodes`` sequence of categories, by default none

        Raises
        ------
        GraphError
            On self-loops, duplicate edges, non-positive weights, nodes out of range or
            attribute columns of the wrong length
        """
        n_nodes = int(n_nodes)
        if n_nodes < 0:
            raise GraphError('Number of nodes must be non-negative')
        self._n = n_nodes

        edges = np.zeros((0, 2), dtype=np.int64) if edges is None else np.asarray(edges, dtype=np.int64)
        if edges.size == 0:
            edges = edges.reshape(0, 2)
        if edges.ndim != 2 or edges.shape[1] != 2:
            raise GraphError('Edges must be given as (src, dst) pairs')
        if weights is None:
            weights = np.ones(len(edges), dtype=float)
        else:
            weights = np.asarray(weights, dtype=float).ravel()
        if len(weights) != len(edges):
            raise GraphError(f'Got {len(weights)} weights for {len(edges)} edges')

        src, dst = edges[:, 0], edges[:, 1]
        if len(edges) > 0:
            bad = (src < 0) | (src >= n_nodes) | (dst < 0) | (dst >= n_nodes)
            if bad.any():
                u, v = edges[np.argmax(bad)]
                raise GraphError(f'Edge ({u}, {v}) references a node outside 0..{n_nodes - 1}')
            loops = src == dst
            if loops.any():
                raise GraphError(f'Self-loop on node {src[np.argmax(loops)]} is not allowed')
            if not np.all(weights > 0) or not np.all(np.isfinite(weights)):
                raise GraphError('All edge weights must be finite and > 0')

        order = np.lexsort((dst, src))
        src, dst, weights = src[order], dst[order], weights[order]
        keys = src * n_nodes + dst
        if len(keys) > 1:
            dup = keys[1:] == keys[:-1]
            if dup.any():
                i = np.argmax(dup)
                raise GraphError(f'Duplicate edge ({src[i]}, {dst[i]})')

        for arr in (src, dst, weights, keys):
            arr.setflags(write=False)
        self._src, self._dst, self._weights, self._keys = src, dst, weights, keys

        self._attributes: Dict[str, pd.Categorical] = {}
        for name, values in (attributes or {}).items():
            if isinstance(values, pd.Categorical):
                values = values.astype(str)
            cat = pd.Categorical(np.asarray(values, dtype=str))
            if len(cat) != n_nodes:
                raise GraphError(f'Attribute {name!r} has {len(cat)} values for {n_nodes} nodes')
            self._attributes[str(name)] = cat

    def __repr__(self) -> str:
        return (f'AttributedGraph(n_nodes={self.n_nodes}, n_edges={self.n_edges}, '
                f'reciprocal_fraction={1 - self.irreciprocal_fraction():.3f}, attributes={self.attribute_names})')

    def __eq__(self, other) -> bool:
        if not isinstance(other, AttributedGraph):
            return NotImplemented
        if self.n_nodes != other.n_nodes or self.n_edges != other.n_edges:
            return False
        if not (np.array_equal(self._keys, other._keys) and np.array_equal(self._weights, other._weights)):
            return False
        if self.attribute_names != other.attribute_names:
            return False
        return all(np.array_equal(self.attribute_values(a), other.attribute_values(a)) for a in self.attribute_names)

    __hash__ = None

    @property
    def n_nodes(self) -> int:
        return self._n

    @property
    def n_edges(self) -> int:
        return len(self._src)

    @property
    def nodes(self) -> range:
        return range(self._n)

    @property
    def edges(self) -> np.ndarray:
        """(E, 2) array of directed edges sorted by (src, dst)"""
        return np.column_stack([self._src, self._dst])

    @property
    def src(self) -> np.ndarray:
        return self._src

    @property
    def dst(self) -> np.ndarray:
        return self._dst

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def attribute_names(self) -> List[str]:
        return sorted(self._attributes)

    @property
    def attributes(self) -> pd.DataFrame:
        """Node attributes as a categorical DataFrame indexed by node"""
        return pd.DataFrame({name: self._attributes[name] for name in self.attribute_names},
                            index=pd.RangeIndex(self._n, name='node'))

    def _check_attribute(self, name: str) -> pd.Categorical:
        if name not in self._attributes:
            raise GraphError(f'Unknown attribute {name!r}; graph has {self.attribute_names}')
        return self._attributes[name]

    def attribute_values(self, name: str) -> np.ndarray:
        return np.asarray(self._check_attribute(name), dtype=str)

    def attribute_codes(self, name: str) -> np.ndarray:
        """Interned small-integer codes of an attribute, indexing into `categories(name)`"""
        return np.asarray(self._check_attribute(name).codes, dtype=np.int64)

    def categories(self, name: str) -> List[str]:
        return [str(c) for c in self._check_attribute(name).categories]

    def _check_node(self, node: int) -> int:
        if not (0 <= int(node) < self._n):
            raise GraphError(f'Unknown node {node}')
        return int(node)

    @cached_property
    def reverse_edge_index(self) -> np.ndarray:
        """Position of the reverse edge (v,u) for every edge (u,v), -1 where it is missing"""
        if len(self._keys) == 0:
            return np.zeros(0, dtype=np.int64)
        reverse = self._dst * self._n + self._src
        pos = np.minimum(np.searchsorted(self._keys, reverse), len(self._keys) - 1)
        index = np.where(self._keys[pos] == reverse, pos, -1)
        index.setflags(write=False)
        return index

    @cached_property
    def is_reciprocal(self) -> np.ndarray:
        """Boolean flag per edge, True where the reverse edge exists"""
        flags = self.reverse_edge_index >= 0
        flags.setflags(write=False)
        return flags

    def undirected_pairs(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Reciprocal edges listed once as (u, v) with u < v, with the weights of (u,v) and of (v,u)"""
        keep = self.is_reciprocal & (self._src < self._dst)
        rev = self.reverse_edge_index[keep]
        pairs = np.column_stack([self._src[keep], self._dst[keep]])
        return pairs, self._weights[keep], self._weights[rev]

    def irreciprocal_fraction(self) -> float:
        if self.n_edges == 0:
            return 0.0
        return float(1.0 - self.is_reciprocal.mean())

    def is_undirected(self) -> bool:
        return bool(np.all(self.is_reciprocal))

    @cached_property
    def _degree_cache(self) -> Dict[str, np.ndarray]:
        out = {
            'out': np.bincount(self._src, minlength=self._n),
            'in': np.bincount(self._dst, minlength=self._n),
            'reciprocal': np.bincount(self._src[self.is_reciprocal], minlength=self._n),
        }
        for arr in out.values():
            arr.setflags(write=False)
        return out

    def degrees(self, mode: str = 'reciprocal') -> np.ndarray:
        """Degree of every node

        Parameters
        ----------
        mode : str, optional
            One of 'reciprocal' (number of reciprocal partners), 'out' or 'in', by default 'reciprocal'

        Returns
        -------
        np.ndarray
            Integer degree per node
        """
        if mode not in degree_modes:
            raise GraphError(f'Degree mode must be one of {degree_modes}, got {mode!r}')
        return self._degree_cache[mode]

    def degree(self, node: int, mode: str = 'reciprocal') -> int:
        node = self._check_node(node)
        return int(self.degrees(mode)[node])

    def degree_distribution(self, mode: str = 'reciprocal', cumulative: bool = False) -> pd.Series:
        """Fraction of nodes per degree value; with `cumulative` the complementary cumulative
        distribution P(degree >= k)."""
        counts = pd.Series(self.degrees(mode)).value_counts().sort_index()
        dist = counts / max(self._n, 1)
        if cumulative:
            dist = dist[::-1].cumsum()[::-1]
        dist.index.name = 'degree'
        dist.name = 'ccdf' if cumulative else 'fraction'
        return dist

    @cached_property
    def _adjacency_cache(self) -> Dict[bool, sparse.csr_matrix]:
        directed = sparse.csr_matrix((self._weights, (self._src, self._dst)), shape=(self._n, self._n))
        recip = self.is_reciprocal
        undirected = sparse.csr_matrix((self._weights[recip], (self._src[recip], self._dst[recip])),
                                       shape=(self._n, self._n))
        directed.sort_indices()
        undirected.sort_indices()
        return {True: directed, False: undirected}

    def adjacency(self, directed: bool = True) -> sparse.csr_matrix:
        """Weighted adjacency in CSR form; with ``directed=False`` only reciprocal edges are kept"""
        return self._adjacency_cache[bool(directed)]

    def neighbors(self, node: int, directed: bool = True) -> np.ndarray:
        node = self._check_node(node)
        adj = self.adjacency(directed)
        return adj.indices[adj.indptr[node]:adj.indptr[node + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        key = int(u) * self._n + int(v)
        pos = np.searchsorted(self._keys, key)
        return bool(pos < len(self._keys) and self._keys[pos] == key)

    def edge_weight(self, u: int, v: int) -> float:
        key = int(u) * self._n + int(v)
        pos = np.searchsorted(self._keys, key)
        if pos >= len(self._keys) or self._keys[pos] != key:
            raise GraphError(f'No edge ({u}, {v})')
        return float(self._weights[pos])

    def _replace(self,
                edges: Optional[np.ndarray] = None,
                weights: Optional[np.ndarray] = None) -> AttributedGraph:
        edges = self.edges if edges is None else edges
        weights = self._weights if weights is None else weights
        return AttributedGraph(self._n, edges, weights, self._attributes)

    def reciprocal_subgraph(self) -> AttributedGraph:
        """Graph over the same nodes keeping only edges whose reverse is also present"""
        recip = self.is_reciprocal
        return self._replace(self.edges[recip], self._weights[recip])

    def subgraph(self, nodes: Iterable[int]) -> AttributedGraph:
        """Induced subgraph, relabeled densely in increasing order of the original identifiers"""
        keep = np.zeros(self._n, dtype=bool)
        idx = np.fromiter((int(n) for n in nodes), dtype=np.int64)
        if len(idx) and (idx.min() < 0 or idx.max() >= self._n):
            raise GraphError('Subgraph nodes must exist in the graph')
        keep[idx] = True
        new_id = np.cumsum(keep) - 1
        mask = keep[self._src] & keep[self._dst]
        edges = np.column_stack([new_id[self._src[mask]], new_id[self._dst[mask]]])
        attributes = {name: np.asarray(cat, dtype=str)[keep] for name, cat in self._attributes.items()}
        return AttributedGraph(int(keep.sum()), edges, self._weights[mask], attributes)

    @cached_property
    def _giant_reciprocal(self) -> frozenset:
        if self._n == 0:
            return frozenset()
        _, labels = csgraph.connected_components(self.adjacency(directed=False), directed=False)
        return _largest_component(self._n, labels)

    def giant_reciprocal_component(self) -> frozenset:
        """Node set of the largest connected component of the reciprocal-edge subgraph"""
        return self._giant_reciprocal

    @cached_property
    def _giant_strong(self) -> frozenset:
        if self._n == 0:
            return frozenset()
        _, labels = csgraph.connected_components(self.adjacency(directed=True), directed=True,
                                                 connection='strong')
        return _largest_component(self._n, labels)

    def giant_strongly_connected_component(self) -> frozenset:
        """Node set of the largest strongly connected component under directed reachability"""
        return self._giant_strong

    def is_connected(self, directed: bool = False) -> bool:
        """True when the reciprocal subgraph is connected (``directed=False``) or the graph is
        strongly connected (``directed=True``)"""
        if self._n == 0:
            return False
        if directed:
            return len(self.giant_strongly_connected_component()) == self._n
        return len(self.giant_reciprocal_component()) == self._n

    def restrict_to_giant(self, directed: bool = False) -> AttributedGraph:
        """Subgraph induced by the GSCC (``directed=True``) or the giant reciprocal component;
        for undirected runs the irreciprocal edges are dropped as well."""
        if directed:
            return self.subgraph(sorted(self.giant_strongly_connected_component()))
        return self.reciprocal_subgraph().subgraph(sorted(self.giant_reciprocal_component()))

    def partition(self, attribute: str, value: str) -> NodePartition:
        """Group of nodes carrying `value` on `attribute`

        Raises
        ------
        GraphError
            If the attribute or the category does not exist
        """
        values = self.attribute_values(attribute)
        if str(value) not in self.categories(attribute):
            raise GraphError(f'Attribute {attribute!r} has no category {value!r}; '
                             f'categories are {self.categories(attribute)}')
        return NodePartition(attribute, str(value), values == str(value))

    def true_proportion(self, partition: NodePartition) -> float:
        if self._n == 0:
            raise GraphError('True proportion is undefined on an empty graph')
        if len(partition) != self._n:
            raise GraphError(f'Partition covers {len(partition)} nodes, graph has {self._n}')
        return float(partition.members.sum() / self._n)


def _largest_component(n: int, labels: np.ndarray) -> frozenset:
    sizes = np.bincount(labels)
    smallest = np.full(len(sizes), n, dtype=np.int64)
    np.minimum.at(smallest, labels, np.arange(n))
    best = np.lexsort((smallest, -sizes))[0]
    return frozenset(np.flatnonzero(labels == best).tolist())


def degree(graph: AttributedGraph, node: int, mode: str = 'reciprocal') -> int:
    return graph.degree(node, mode)


def reciprocal_subgraph(graph: AttributedGraph) -> AttributedGraph:
    return graph.reciprocal_subgraph()


def giant_reciprocal_component(graph: AttributedGraph) -> frozenset:
    return graph.giant_reciprocal_component()


def giant_strongly_connected_component(graph: AttributedGraph) -> frozenset:
    return graph.giant_strongly_connected_component()


def true_proportion(graph: AttributedGraph, partition: NodePartition) -> float:
    return graph.true_proportion(partition)


def undirected_graph(n_nodes: int,
                    pairs: ArrayLike,
                    weights: Optional[ArrayLike] = None,
                    attributes: Optional[Mapping[str, ArrayLike]] = None) -> AttributedGraph:
    """Convenience constructor adding both directions of every (u, v) pair

    Parameters
    ----------
    n_nodes : int
        Number of nodes
    pairs : ArrayLike
        Undirected (u, v) pairs, each listed once
    weights : Optional[ArrayLike], optional
        Symmetric weight per pair, by default 1.0
    attributes : Optional[Mapping[str, ArrayLike]], optional
        Node attributes

    Returns
    -------
    AttributedGraph
        All-reciprocal graph
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    edges = np.concatenate([pairs, pairs[:, ::-1]])
    if weights is not None:
        weights = np.asarray(weights, dtype=float).ravel()
        weights = np.concatenate([weights, weights])
    return AttributedGraph(n_nodes, edges, weights, attributes)
