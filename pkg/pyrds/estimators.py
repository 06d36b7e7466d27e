import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import sparse

from pyrds.exceptions import ConvergenceError, EstimationError
from pyrds.graph import AttributedGraph, NodePartition

logger = logging.getLogger(__name__)

transition_modes = ['uniform', 'weighted']
_mode_aliases = {'weight-proportional': 'weighted'}


def transition_mode(mode: str) -> str:
    """Canonical transition mode name, accepting the same aliases as recruitment modes"""
    name = _mode_aliases.get(str(mode).lower(), str(mode).lower())
    if name not in transition_modes:
        raise EstimationError(f'Transition mode must be one of {transition_modes}, got {mode!r}')
    return name


def _inverse_weighted_share(in_group: np.ndarray, weights: np.ndarray) -> float:
    total = math.fsum(weights)
    if total <= 0:
        raise EstimationError('Sum of inverse weights must be positive')
    return math.fsum(weights[in_group]) / total


def rds2_from_degrees(in_group: np.ndarray, degrees: np.ndarray) -> float:
    """Inverse-degree weighted share of group members (the RDS-II estimator on raw arrays)

    Parameters
    ----------
    in_group : np.ndarray
        Boolean membership flag per participant
    degrees : np.ndarray
        Reported degree per participant, all >= 1

    Returns
    -------
    float
        Estimated population proportion
    """
    in_group = np.asarray(in_group, dtype=bool)
    degrees = np.asarray(degrees, dtype=float)
    if len(degrees) == 0:
        raise EstimationError('Cannot estimate from an empty sample')
    if len(in_group) != len(degrees):
        raise EstimationError('Membership flags and degrees must have the same length')
    if np.any(degrees <= 0):
        raise EstimationError('Reported degrees must all be >= 1')
    return _inverse_weighted_share(in_group, 1.0 / degrees)


def rds2_estimate(sample, partition: NodePartition) -> float:
    """RDS-II estimate of the proportion of `partition` from a recruitment sample.
    A node sampled several times contributes once per participation.

    Parameters
    ----------
    sample : RecruitmentSample
        Simulated recruitment record, reported degrees are used
    partition : NodePartition
        Group of interest

    Returns
    -------
    float
        Estimate in [0, 1]
    """
    nodes = np.asarray(sample.nodes)
    if len(nodes) == 0:
        raise EstimationError('Cannot estimate from an empty sample')
    return rds2_from_degrees(partition.members[nodes], sample.reported_degrees)


@dataclass(frozen=True, eq=False)
class StationaryVector:
    """Equilibrium of the recruitment Markov chain

    Parameters
    ----------
    probabilities : np.ndarray
        Stationary mass per node, sums to 1
    residual : float
        L1 norm of ``P^T x - x`` at the returned vector
    iterations : int
        Power iterations performed
    mode : str
        Transition mode the vector was computed for
    """
    probabilities: np.ndarray = field(repr=False)
    residual: float
    iterations: int = 0
    mode: str = 'uniform'

    def __post_init__(self):
        probs = np.array(self.probabilities, dtype=float).ravel()
        probs.setflags(write=False)
        object.__setattr__(self, 'probabilities', probs)

    def __len__(self) -> int:
        return len(self.probabilities)

    def __getitem__(self, item):
        return self.probabilities[item]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'node': np.arange(len(self)), 'probability': self.probabilities})


def transition_matrix(graph: AttributedGraph, mode: str = 'uniform', directed: bool = True) -> sparse.csr_matrix:
    """Row-stochastic transition matrix of a recruitment walk

    Parameters
    ----------
    graph : AttributedGraph
        Network the walk runs on
    mode : str, optional
        'uniform' (entry e_ij / d_i^out) or 'weighted' (entry w_ij / sum_k w_ik, alias
        'weight-proportional'), by default 'uniform'
    directed : bool, optional
        Use every directed edge, or only reciprocal edges when False, by default True

    Returns
    -------
    sparse.csr_matrix
        N x N transition matrix

    Raises
    ------
    EstimationError
        If a node has no outgoing edge
    """
    mode = transition_mode(mode)
    adj = graph.adjacency(directed).astype(float)
    if mode == 'uniform':
        adj = adj.copy()
        adj.data[:] = 1.0
    row_sums = np.asarray(adj.sum(axis=1)).ravel()
    dangling = np.flatnonzero(row_sums == 0)
    if len(dangling):
        shown = ', '.join(str(d) for d in dangling[:5])
        raise EstimationError(f'Node {shown} has no outgoing edge; transitions are undefined '
                              f'({len(dangling)} dangling node(s))')
    return sparse.csr_matrix(sparse.diags(1.0 / row_sums) @ adj)


def stationary_distribution(graph: AttributedGraph,
                            mode: str = 'uniform',
                            tolerance: float = 1e-12,
                            max_iters: int = 100_000,
                            directed: bool = True) -> StationaryVector:
    """Stationary vector of the recruitment walk by power iteration on the transposed operator.
    Each step averages the current iterate with its image (a lazy walk), which has the same
    equilibrium and removes periodicity.

    Parameters
    ----------
    graph : AttributedGraph
        Strongly connected network (connected, for ``directed=False``)
    mode : str, optional
        Transition mode, 'uniform' or 'weighted', by default 'uniform'
    tolerance : float, optional
        Stop when the L1 distance between successive iterates is at most this, by default 1e-12
    max_iters : int, optional
        Iteration budget, by default 100_000
    directed : bool, optional
        Walk on all directed edges, or reciprocal edges only, by default True

    Returns
    -------
    StationaryVector
        Normalized stationary vector with its residual

    Raises
    ------
    EstimationError
        If the chain is not irreducible
    ConvergenceError
        If the tolerance is not reached within `max_iters`
    """
    mode = transition_mode(mode)
    P = transition_matrix(graph, mode=mode, directed=directed)
    if not graph.is_connected(directed=directed):
        raise EstimationError('Stationary distribution requires a strongly connected graph; '
                              'restrict to the giant component first')
    PT = sparse.csr_matrix(P.T)
    n = graph.n_nodes
    x = np.full(n, 1.0 / n)
    diff = np.inf
    for it in range(1, max_iters + 1):
        y = 0.5 * (x + PT @ x)
        y /= y.sum()
        diff = float(np.abs(y - x).sum())
        x = y
        if diff <= tolerance:
            break
    else:
        residual = float(np.abs(PT @ x - x).sum())
        raise ConvergenceError(f'Power iteration did not converge in {max_iters} iterations '
                               f'(last step {diff:.3e}, residual {residual:.3e})', residual=residual)
    residual = float(np.abs(PT @ x - x).sum())
    logger.debug('stationary distribution converged after %d iterations, residual %.3e', it, residual)
    return StationaryVector(x, residual, it, mode)


def _stationary_mass(stationary: StationaryVector, nodes: np.ndarray) -> np.ndarray:
    if nodes.max() >= len(stationary) or nodes.min() < 0:
        raise EstimationError(f'Stationary vector covers {len(stationary)} nodes, but the sample reaches '
                              f'node {int(nodes.max())}; it was computed for another graph')
    mass = stationary.probabilities[nodes]
    if np.any(mass <= 0):
        raise EstimationError(f'Sampled node {nodes[np.argmax(mass <= 0)]} has zero stationary mass')
    return mass


def eig_estimate(sample, stationary: StationaryVector, partition: NodePartition) -> float:
    """Stationary-weighted estimate: every participant is weighted by the inverse of its
    stationary mass instead of its inverse degree

    Parameters
    ----------
    sample : RecruitmentSample
        Simulated recruitment record
    stationary : StationaryVector
        Equilibrium of the walk that generated the sample
    partition : NodePartition
        Group of interest

    Returns
    -------
    float
        Estimate in [0, 1]

    Raises
    ------
    EstimationError
        On an empty sample, a vector computed for a smaller graph or a sampled node without
        stationary mass
    """
    nodes = np.asarray(sample.nodes)
    if len(nodes) == 0:
        raise EstimationError('Cannot estimate from an empty sample')
    mass = _stationary_mass(stationary, nodes)
    return _inverse_weighted_share(partition.members[nodes], 1.0 / mass)


def snapshot_estimates(sample,
                       partition: NodePartition,
                       checkpoints: Sequence[int],
                       stationary: Optional[StationaryVector] = None) -> Dict[str, np.ndarray]:
    """Estimates over the first j participants for every checkpoint j

    Parameters
    ----------
    sample : RecruitmentSample
        Recruitment record at least as long as the last checkpoint
    partition : NodePartition
        Group of interest
    checkpoints : Sequence[int]
        Ascending prefix lengths
    stationary : Optional[StationaryVector], optional
        When given, 'eig' estimates are added next to 'rds2', by default None

    Returns
    -------
    Dict[str, np.ndarray]
        Estimator name to estimate per checkpoint
    """
    nodes = np.asarray(sample.nodes)
    checkpoints = np.asarray(checkpoints, dtype=np.int64)
    if len(checkpoints) == 0 or checkpoints[0] < 1 or np.any(np.diff(checkpoints) <= 0):
        raise EstimationError('Checkpoints must be ascending positive sample sizes')
    if checkpoints[-1] > len(nodes):
        raise EstimationError(f'Sample has {len(nodes)} participants, checkpoint {checkpoints[-1]} requested')
    in_group = partition.members[nodes]
    weights = {'rds2': 1.0 / np.asarray(sample.reported_degrees, dtype=float)}
    if stationary is not None:
        weights['eig'] = 1.0 / _stationary_mass(stationary, nodes)
    return {name: _prefix_shares(in_group, w, checkpoints) for name, w in weights.items()}


def _prefix_shares(in_group: np.ndarray, weights: np.ndarray, checkpoints: np.ndarray) -> np.ndarray:
    group_parts, total_parts = [], []
    out = np.empty(len(checkpoints))
    start = 0
    for k, stop in enumerate(checkpoints):
        seg_w = weights[start:stop]
        group_parts.append(math.fsum(seg_w[in_group[start:stop]]))
        total_parts.append(math.fsum(seg_w))
        out[k] = math.fsum(group_parts) / math.fsum(total_parts)
        start = stop
    return out


def homophily_from_mixing(s_aa: float, p_a: float) -> float:
    """Homophily of a group from its in-group tie share

    Parameters
    ----------
    s_aa : float
        Fraction of the group's tie endpoints landing inside the group
    p_a : float
        Population proportion of the group

    Returns
    -------
    float
        H = (s_aa - p_a) / (1 - p_a); 0 under random mixing, 1 when every tie stays in-group
    """
    if not 0 <= p_a < 1:
        raise EstimationError(f'Homophily is undefined for a group proportion of {p_a}')
    return (s_aa - p_a) / (1.0 - p_a)


def _edge_endpoints(graph: AttributedGraph, directed: bool) -> Tuple[np.ndarray, np.ndarray]:
    if directed:
        return graph.src, graph.dst
    recip = graph.is_reciprocal
    return graph.src[recip], graph.dst[recip]


def _group_homophily(members: np.ndarray, src: np.ndarray, dst: np.ndarray, label: str) -> float:
    p = float(members.mean()) if len(members) else 0.0
    if p >= 1:
        raise EstimationError(f'Homophily of {label!r} is undefined: the group covers every node')
    from_group = members[src]
    n_from = int(from_group.sum())
    if n_from == 0:
        raise EstimationError(f'Homophily of {label!r} is undefined: the group has no ties')
    s = int((from_group & members[dst]).sum()) / n_from
    return homophily_from_mixing(s, p)


def homophily_index(graph: AttributedGraph, partition: NodePartition, directed: bool = True) -> Tuple[float, float]:
    """Homophily of the group of interest and of its complement

    Parameters
    ----------
    graph : AttributedGraph
        Network, ties are read from out-edges
    partition : NodePartition
        Group of interest
    directed : bool, optional
        Use all directed edges, or only reciprocal ones when False, by default True

    Returns
    -------
    Tuple[float, float]
        (H of group A, H of the complement)

    Raises
    ------
    EstimationError
        If either group is empty, covers every node or has no ties
    """
    src, dst = _edge_endpoints(graph, directed)
    members = partition.members
    return (_group_homophily(members, src, dst, partition.label),
            _group_homophily(~members, src, dst, partition.complement().label))


def homophily_by_category(graph: AttributedGraph, attribute: str, directed: bool = True) -> pd.Series:
    """Homophily of every category of an attribute against the rest; undefined values are NaN"""
    src, dst = _edge_endpoints(graph, directed)
    values = graph.attribute_values(attribute)
    out = {}
    for cat in graph.categories(attribute):
        try:
            out[cat] = _group_homophily(values == cat, src, dst, cat)
        except EstimationError:
            out[cat] = np.nan
    series = pd.Series(out, name='homophily', dtype=float)
    series.index.name = attribute
    return series
