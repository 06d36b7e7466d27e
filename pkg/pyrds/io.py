import logging
import math
import warnings
from typing import Dict, List, Optional, Tuple

import numpy as np

from pyrds.estimators import StationaryVector
from pyrds.exceptions import GraphError, GraphFormatError, RelabelWarning
from pyrds.graph import AttributedGraph
from pyrds.sampler import RecruitmentSample

logger = logging.getLogger(__name__)


def _data_lines(path: str):
    with open(path, encoding='utf-8') as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith('#'):
                continue
            yield lineno, line


def _node_key(token: str):
    try:
        return (0, int(token), '')
    except ValueError:
        return (1, 0, token)


def read_attributes(attr_path: str) -> Tuple[List[str], Dict[str, Dict[str, str]]]:
    """Parse an attribute file of ``node<TAB>name=value[,name=value...]`` lines

    Returns
    -------
    Tuple[List[str], Dict[str, Dict[str, str]]]
        Node tokens in file order and their attribute mappings
    """
    order: List[str] = []
    values: Dict[str, Dict[str, str]] = {}
    names = None
    for lineno, line in _data_lines(attr_path):
        fields = line.split(None, 1)
        node = fields[0]
        if node in values:
            raise GraphFormatError(f'node {node} listed twice', lineno, attr_path)
        attrs: Dict[str, str] = {}
        if len(fields) > 1:
            for item in fields[1].split(','):
                name, sep, value = item.strip().partition('=')
                if not sep or not name.strip() or not value.strip():
                    raise GraphFormatError(f'expected name=value, got {item.strip()!r}', lineno, attr_path)
                attrs[name.strip()] = value.strip()
        if names is None:
            names = sorted(attrs)
        elif sorted(attrs) != names:
            raise GraphFormatError(f'node {node} has attributes {sorted(attrs)}, expected {names}', lineno, attr_path)
        order.append(node)
        values[node] = attrs
    return order, values


def load_graph(edge_path: str, attr_path: Optional[str] = None) -> AttributedGraph:
    """Read a graph from an edge file and an optional attribute file

    Edge lines are ``src<TAB>dst[<TAB>weight]`` (any whitespace separates fields, weight defaults to 1,
    a reciprocal tie is two lines); attribute lines are ``node<TAB>name=value[,name=value...]``.
    Files are UTF-8 and lines starting with '#' are skipped. When an attribute file is given it defines
    the node set; otherwise the nodes are those named by the edges. Identifiers other than ``0..N-1``
    are relabeled densely in sorted order.

    Parameters
    ----------
    edge_path : str
        Edge file
    attr_path : Optional[str], optional
        Attribute file, by default None

    Returns
    -------
    AttributedGraph
        The loaded graph

    Raises
    ------
    GraphFormatError
        On a malformed line, a self-loop, a duplicate edge, a non-positive weight or an edge naming
        a node missing from the attribute file
    """
    raw_edges: List[Tuple[str, str, float, int]] = []
    for lineno, line in _data_lines(edge_path):
        fields = line.split()
        if len(fields) not in (2, 3):
            raise GraphFormatError(f'expected "src dst [weight]", got {len(fields)} fields', lineno, edge_path)
        weight = 1.0
        if len(fields) == 3:
            try:
                weight = float(fields[2])
            except ValueError:
                raise GraphFormatError(f'weight {fields[2]!r} is not a number', lineno, edge_path) from None
            if not (weight > 0 and math.isfinite(weight)):
                raise GraphFormatError(f'weight must be finite and > 0, got {fields[2]}', lineno, edge_path)
        if fields[0] == fields[1]:
            raise GraphFormatError(f'self-loop on node {fields[0]}', lineno, edge_path)
        raw_edges.append((fields[0], fields[1], weight, lineno))

    attr_values: Dict[str, Dict[str, str]] = {}
    if attr_path is not None:
        tokens, attr_values = read_attributes(attr_path)
        known = set(tokens)
        for u, v, _, lineno in raw_edges:
            for node in (u, v):
                if node not in known:
                    raise GraphFormatError(f'edge references unknown node {node}', lineno, edge_path)
    else:
        tokens = [t for u, v, _, _ in raw_edges for t in (u, v)]

    ordered = sorted(set(tokens), key=_node_key)
    index = {token: i for i, token in enumerate(ordered)}
    if ordered != [str(i) for i in range(len(ordered))]:
        warnings.warn(f'Node identifiers of {edge_path} are not 0..{len(ordered) - 1}; '
                      f'relabeled in sorted order', RelabelWarning)

    seen: Dict[Tuple[int, int], int] = {}
    edges = np.empty((len(raw_edges), 2), dtype=np.int64)
    weights = np.empty(len(raw_edges))
    for k, (u, v, w, lineno) in enumerate(raw_edges):
        pair = (index[u], index[v])
        if pair in seen:
            raise GraphFormatError(f'duplicate edge {u} -> {v} (first on line {seen[pair]})', lineno, edge_path)
        seen[pair] = lineno
        edges[k] = pair
        weights[k] = w

    attributes = {}
    names = sorted(next(iter(attr_values.values()), {}))
    for name in names:
        attributes[name] = [attr_values[token][name] for token in ordered]
    graph = AttributedGraph(len(ordered), edges, weights, attributes)
    logger.info('loaded %r from %s', graph, edge_path)
    return graph


def save_graph(graph: AttributedGraph, edge_path: str, attr_path: Optional[str] = None) -> None:
    """Write a graph in the format read by `load_graph`; weights are written with full precision"""
    for name in graph.attribute_names:
        for value in [name] + graph.categories(name):
            if any(ch in value for ch in ',=\t\n') or value != value.strip() or not value:
                raise GraphError(f'Attribute {name!r} value {value!r} cannot be written to an attribute file')
    with open(edge_path, 'w', encoding='utf-8') as f:
        f.write('# src\tdst\tweight\n')
        for (u, v), w in zip(graph.edges.tolist(), graph.weights.tolist()):
            f.write(f'{u}\t{v}\t{w!r}\n')
    if attr_path is not None:
        names = graph.attribute_names
        columns = [graph.attribute_values(name) for name in names]
        with open(attr_path, 'w', encoding='utf-8') as f:
            f.write('# node\tname=value,...\n')
            for node in graph.nodes:
                pairs = ','.join(f'{name}={col[node]}' for name, col in zip(names, columns))
                f.write(f'{node}\t{pairs}\n' if pairs else f'{node}\n')
    logger.info('saved %r to %s', graph, edge_path)


def write_stationary(vector: StationaryVector, path: str) -> None:
    """Per-node stationary mass as ``node<TAB>probability`` lines under a ``#`` comment"""
    with open(path, 'w', encoding='utf-8') as f:
        f.write(f'# node\tprobability ({vector.mode} walk, residual {vector.residual:.3e})\n')
        vector.to_frame().to_csv(f, sep='\t', index=False, header=False, float_format='%.17g',
                                 lineterminator='\n')


def write_sample(sample: RecruitmentSample, path: str) -> None:
    """Recruitment record as a tab-separated table, one participation per line"""
    sample.to_frame().to_csv(path, sep='\t', lineterminator='\n')
