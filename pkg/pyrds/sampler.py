from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from collections import deque
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from pyrds.exceptions import ChainDeathError, SamplingConfigError
from pyrds.graph import AttributedGraph, NodePartition

logger = logging.getLogger(__name__)

SEED = -1

seed_modes = ['uniform', 'degree']
replacement_modes = ['with', 'without']
recruitment_modes = ['uniform', 'weighted']
chain_death_modes = ['reseed', 'fail']

_aliases = {
    'degree-proportional': 'degree',
    'weight-proportional': 'weighted',
    'swr': 'with',
    'swor': 'without',
}


def _pair(value, name: str) -> Tuple[float, float]:
    if np.isscalar(value):
        value = (value, value)
    pair = tuple(float(v) for v in value)
    if len(pair) != 2:
        raise SamplingConfigError(f'{name} needs one probability per group, got {value!r}')
    if not all(0 <= p <= 1 for p in pair):
        raise SamplingConfigError(f'{name} probabilities must lie in [0, 1], got {pair}')
    return pair


def _choice(value: str, options: List[str], name: str) -> str:
    value = _aliases.get(str(value).lower(), str(value).lower())
    if value not in options:
        raise SamplingConfigError(f'{name} must be one of {options}, got {value!r}')
    return value


@dataclass(frozen=True)
class SamplingConfig:
    """Every knob of one simulated recruitment process

    Parameters
    ----------
    seed_count : int, optional
        Number of seeds, by default 1
    seed_selection : str, optional
        'uniform' or 'degree' (probability proportional to degree), by default 'uniform'
    coupons_per_participant : int, optional
        Coupons handed to every participant, by default 1
    replacement : str, optional
        'with' or 'without' replacement, by default 'with'
    target_sample_size : int, optional
        Participants to recruit, seeds included, by default 500
    checkpoint_sizes : Optional[Sequence[int]], optional
        Ascending prefix lengths where estimates are taken, by default only the target size
    ignore_prob : Tuple[float, float], optional
        Probability that a tie to a group A peer (first) or complement peer (second) is ignored,
        by default (0, 0)
    reject_prob : Tuple[float, float], optional
        Probability that an invited group A (first) or complement (second) peer declines,
        by default (0, 0)
    recruitment_mode : str, optional
        'uniform' or 'weighted' (probability proportional to edge weight), by default 'uniform'
    on_chain_death : str, optional
        'reseed' continues from a fresh seed when no coupon is left, 'fail' raises, by default 'reseed'
    directed : bool, optional
        Recruit along out-edges and report out-degrees instead of reciprocal ties, by default False
    rng_seed : int, optional
        Seed of the chain, by default 0
    """
    seed_count: int = 1
    seed_selection: str = 'uniform'
    coupons_per_participant: int = 1
    replacement: str = 'with'
    target_sample_size: int = 500
    checkpoint_sizes: Optional[Sequence[int]] = None
    ignore_prob: Tuple[float, float] = (0.0, 0.0)
    reject_prob: Tuple[float, float] = (0.0, 0.0)
    recruitment_mode: str = 'uniform'
    on_chain_death: str = 'reseed'
    directed: bool = False
    rng_seed: int = 0

    def __post_init__(self):
        set_ = lambda name, value: object.__setattr__(self, name, value)
        for name in ('seed_count', 'coupons_per_participant', 'target_sample_size'):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise SamplingConfigError(f'{name} must be a positive integer, got {value!r}')
            set_(name, int(value))
        if self.seed_count > self.target_sample_size:
            raise SamplingConfigError(f'seed_count ({self.seed_count}) exceeds the target sample size '
                                      f'({self.target_sample_size})')
        set_('seed_selection', _choice(self.seed_selection, seed_modes, 'seed_selection'))
        set_('replacement', _choice(self.replacement, replacement_modes, 'replacement'))
        set_('recruitment_mode', _choice(self.recruitment_mode, recruitment_modes, 'recruitment_mode'))
        set_('on_chain_death', _choice(self.on_chain_death, chain_death_modes, 'on_chain_death'))
        set_('ignore_prob', _pair(self.ignore_prob, 'ignore_prob'))
        set_('reject_prob', _pair(self.reject_prob, 'reject_prob'))
        set_('directed', bool(self.directed))
        checkpoints = (self.target_sample_size,) if self.checkpoint_sizes is None else tuple(
            int(c) for c in self.checkpoint_sizes)
        if len(checkpoints) == 0 or checkpoints[0] < 1 or any(b <= a for a, b in zip(checkpoints, checkpoints[1:])):
            raise SamplingConfigError(f'Checkpoints must be ascending positive sizes, got {checkpoints}')
        if checkpoints[-1] > self.target_sample_size:
            raise SamplingConfigError(f'Checkpoint {checkpoints[-1]} exceeds the target sample size '
                                      f'{self.target_sample_size}')
        set_('checkpoint_sizes', checkpoints)

    @property
    def without_replacement(self) -> bool:
        return self.replacement == 'without'

    def check_graph(self, graph: AttributedGraph) -> None:
        """Raise if the config cannot run on `graph`"""
        if self.seed_count > graph.n_nodes:
            raise SamplingConfigError(f'seed_count ({self.seed_count}) exceeds the number of nodes ({graph.n_nodes})')
        if not graph.is_connected(directed=self.directed):
            kind = 'strongly connected' if self.directed else 'connected through reciprocal edges'
            raise SamplingConfigError(f'Recruitment needs a graph that is {kind}; restrict it to its giant component')


@dataclass(frozen=True, eq=False)
class RecruitmentSample:
    """Ordered record of one simulated chain, one entry per participation

    Parameters
    ----------
    nodes : np.ndarray
        Node id of every participant
    recruiters : np.ndarray
        Node id of the recruiter, ``SEED`` (-1) for seeds
    recruiter_positions : np.ndarray
        Position of the recruiter in this record, -1 for seeds
    waves : np.ndarray
        Recruitment depth, 0 for seeds
    reported_degrees : np.ndarray
        Degree each participant reported, at least 1
    chain_death_count : int
        Times the coupon queue ran empty
    reseed_count : int
        Fresh seeds drawn after a chain death
    """
    nodes: np.ndarray
    recruiters: np.ndarray
    recruiter_positions: np.ndarray
    waves: np.ndarray
    reported_degrees: np.ndarray
    chain_death_count: int = 0
    reseed_count: int = 0

    def __post_init__(self):
        for name in ('nodes', 'recruiters', 'recruiter_positions', 'waves', 'reported_degrees'):
            arr = np.array(getattr(self, name), dtype=np.int64).ravel()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.nodes)

    def __repr__(self) -> str:
        return (f'RecruitmentSample(size={len(self)}, max_wave={self.max_wave}, '
                f'chain_deaths={self.chain_death_count}, reseeds={self.reseed_count})')

    @property
    def max_wave(self) -> int:
        return int(self.waves.max()) if len(self) else 0

    def wave_sizes(self) -> pd.Series:
        """Number of participants per wave"""
        sizes = pd.Series(np.bincount(self.waves, minlength=self.max_wave + 1), name='participants')
        sizes.index.name = 'wave'
        return sizes

    def head(self, size: int) -> RecruitmentSample:
        """The first `size` participants, as seen at that point of the recruitment"""
        return RecruitmentSample(self.nodes[:size], self.recruiters[:size], self.recruiter_positions[:size],
                                 self.waves[:size], self.reported_degrees[:size],
                                 self.chain_death_count, self.reseed_count)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({
            'node': self.nodes,
            'recruiter': self.recruiters,
            'wave': self.waves,
            'reported_degree': self.reported_degrees,
        })
        frame.index.name = 'position'
        return frame


def select_seeds(graph: AttributedGraph,
                 count: int,
                 mode: str = 'uniform',
                 rng: Optional[np.random.Generator] = None,
                 directed: bool = False,
                 exclude: Optional[np.ndarray] = None) -> np.ndarray:
    """Draw distinct seed nodes

    Parameters
    ----------
    graph : AttributedGraph
        Population network
    count : int
        Number of seeds
    mode : str, optional
        'uniform' or 'degree' (probability proportional to the reciprocal degree, or out-degree when
        `directed`), by default 'uniform'
    rng : Optional[np.random.Generator], optional
        Random stream, by default a fresh unseeded one
    directed : bool, optional
        Use out-degrees for degree-proportional selection, by default False
    exclude : Optional[np.ndarray], optional
        Nodes that cannot be drawn, by default None

    Returns
    -------
    np.ndarray
        Seed node ids

    Raises
    ------
    SamplingConfigError
        If fewer than `count` nodes can be drawn
    """
    mode = _choice(mode, seed_modes, 'seed_selection')
    rng = np.random.default_rng() if rng is None else rng
    candidates = np.arange(graph.n_nodes)
    if exclude is not None and len(exclude):
        keep = np.ones(graph.n_nodes, dtype=bool)
        keep[np.asarray(exclude, dtype=np.int64)] = False
        candidates = candidates[keep]
    if count > len(candidates):
        raise SamplingConfigError(f'Cannot draw {count} seeds from {len(candidates)} available nodes')
    if mode == 'uniform':
        return rng.choice(candidates, size=count, replace=False)
    weights = graph.degrees('out' if directed else 'reciprocal')[candidates].astype(float)
    if np.count_nonzero(weights) < count:
        raise SamplingConfigError(f'Cannot draw {count} degree-proportional seeds: only '
                                  f'{np.count_nonzero(weights)} available nodes have ties')
    return rng.choice(candidates, size=count, replace=False, p=weights / weights.sum())


def _ignore_mask(peers: np.ndarray, members: np.ndarray, ignore_prob: Tuple[float, float],
                 rng: np.random.Generator) -> np.ndarray:
    if ignore_prob == (0.0, 0.0) or len(peers) == 0:
        return np.zeros(len(peers), dtype=bool)
    probs = np.where(members[peers], ignore_prob[0], ignore_prob[1])
    return rng.random(len(peers)) < probs


def draw_ignore_set(graph: AttributedGraph,
                    participant: int,
                    ignore_prob: Tuple[float, float],
                    partition: NodePartition,
                    rng: np.random.Generator,
                    directed: bool = False) -> np.ndarray:
    """Peers whose tie `participant` ignores for this participation: a tie to a group A peer is
    ignored with probability ``ignore_prob[0]``, to any other peer with ``ignore_prob[1]``"""
    peers = graph.neighbors(participant, directed=directed)
    return peers[_ignore_mask(peers, partition.members, _pair(ignore_prob, 'ignore_prob'), rng)]


def reported_degree(graph: AttributedGraph,
                    participant: int,
                    ignore_set: Sequence[int] = (),
                    directed: bool = False) -> int:
    """Degree net of ignored ties, never below 1"""
    mode = 'out' if directed else 'reciprocal'
    return max(1, graph.degree(participant, mode) - len(ignore_set))


class _UniformStream(object):
    """Uniform draws served from pre-generated blocks"""
    def __init__(self, rng: np.random.Generator, block: int = 4096) -> None:
        self.rng = rng
        self.block = block
        self._buffer: List[float] = []
        self._pos = 0

    def draw(self) -> float:
        if self._pos >= len(self._buffer):
            self._buffer = self.rng.random(self.block).tolist()
            self._pos = 0
        u = self._buffer[self._pos]
        self._pos += 1
        return u


class BaseRecruiter(ABC):
    """Picks the peer a coupon holder invites"""
    @abstractmethod
    def choose(self, weights: np.ndarray, u: float) -> int:
        """Index of the invited peer among the eligible ones

        Parameters
        ----------
        weights : np.ndarray
            Edge weight towards every eligible peer
        u : float
            Uniform draw in [0, 1)
        """
        return NotImplementedError


class UniformRecruiter(BaseRecruiter):
    """Every eligible peer is equally likely"""
    def choose(self, weights: np.ndarray, u: float) -> int:
        return min(int(u * len(weights)), len(weights) - 1)


class WeightedRecruiter(BaseRecruiter):
    """Peers are invited with probability proportional to the weight of the tie"""
    def choose(self, weights: np.ndarray, u: float) -> int:
        cumulative = np.cumsum(weights)
        idx = int(np.searchsorted(cumulative, u * cumulative[-1], side='right'))
        return min(idx, len(weights) - 1)


recruiters = {'uniform': UniformRecruiter, 'weighted': WeightedRecruiter}


def run_chain(graph: AttributedGraph,
              partition: NodePartition,
              config: SamplingConfig,
              rng: Optional[np.random.Generator] = None,
              seeds: Optional[Sequence[int]] = None) -> RecruitmentSample:
    """Simulate one recruitment chain until `config.target_sample_size` participants have joined

    Unredeemed coupons wait in a FIFO queue. The holder of the next coupon invites one eligible peer
    (a neighbour whose tie is not ignored and, without replacement, who has not participated yet);
    the peer declines with the reject probability of its group, which discards the coupon. A joining
    peer draws its own ignore set, reports its degree and receives
    ``config.coupons_per_participant`` coupons.

    Parameters
    ----------
    graph : AttributedGraph
        Population network, connected under the config's edge semantics
    partition : NodePartition
        Group A, drives the group-dependent ignore and reject probabilities
    config : SamplingConfig
        Recruitment settings
    rng : Optional[np.random.Generator], optional
        Random stream, by default one seeded with ``config.rng_seed``
    seeds : Optional[Sequence[int]], optional
        Explicit seed nodes replacing seed selection, by default None

    Returns
    -------
    RecruitmentSample
        Record with exactly ``config.target_sample_size`` participants

    Raises
    ------
    ChainDeathError
        When the queue runs empty with ``on_chain_death='fail'``, or no node is left to reseed from
    """
    config.check_graph(graph)
    if len(partition) != graph.n_nodes:
        raise SamplingConfigError(f'Partition covers {len(partition)} nodes, graph has {graph.n_nodes}')
    rng = np.random.default_rng(config.rng_seed) if rng is None else rng
    stream = _UniformStream(rng)
    recruiter = recruiters[config.recruitment_mode]()
    members = partition.members
    adj = graph.adjacency(directed=config.directed)
    indptr, indices = adj.indptr, adj.indices
    weights = adj.data
    ignoring = config.ignore_prob != (0.0, 0.0)
    reject_a, reject_b = config.reject_prob
    swor = config.without_replacement
    target = config.target_sample_size

    nodes: List[int] = []
    recruiter_nodes: List[int] = []
    positions: List[int] = []
    waves: List[int] = []
    degrees: List[int] = []
    kept_ties: List[Optional[Tuple[np.ndarray, np.ndarray]]] = []
    sampled = np.zeros(graph.n_nodes, dtype=bool)
    queue: deque = deque()

    def enroll(node: int, recruiter_pos: int) -> None:
        start, stop = indptr[node], indptr[node + 1]
        n_ignored = 0
        ties = None
        if ignoring:
            peers = indices[start:stop]
            ignored = _ignore_mask(peers, members, config.ignore_prob, rng)
            n_ignored = int(ignored.sum())
            ties = (peers[~ignored], weights[start:stop][~ignored])
        pos = len(nodes)
        nodes.append(node)
        positions.append(recruiter_pos)
        recruiter_nodes.append(SEED if recruiter_pos < 0 else nodes[recruiter_pos])
        waves.append(0 if recruiter_pos < 0 else waves[recruiter_pos] + 1)
        degrees.append(max(1, (stop - start) - n_ignored))
        kept_ties.append(ties)
        sampled[node] = True
        queue.extend([pos] * config.coupons_per_participant)

    if seeds is None:
        seeds = select_seeds(graph, config.seed_count, config.seed_selection, rng, directed=config.directed)
    else:
        seeds = np.asarray(seeds, dtype=np.int64).ravel()
        if len(np.unique(seeds)) != len(seeds) or np.any((seeds < 0) | (seeds >= graph.n_nodes)):
            raise SamplingConfigError('Explicit seeds must be distinct nodes of the graph')
        if len(seeds) > target:
            raise SamplingConfigError(f'{len(seeds)} seeds exceed the target sample size {target}')
    for s in seeds:
        enroll(int(s), -1)

    chain_deaths = reseeds = 0
    while len(nodes) < target:
        if not queue:
            chain_deaths += 1
            if config.on_chain_death == 'fail':
                raise ChainDeathError(f'Recruitment died out after {len(nodes)} of {target} participants',
                                      sample_size=len(nodes))
            exclude = np.flatnonzero(sampled) if swor else None
            try:
                fresh = select_seeds(graph, 1, config.seed_selection, rng, directed=config.directed,
                                     exclude=exclude)
            except SamplingConfigError:
                raise ChainDeathError(f'Population exhausted after {len(nodes)} of {target} participants',
                                      sample_size=len(nodes)) from None
            logger.debug('chain died at %d participants, reseeding from node %d', len(nodes), fresh[0])
            reseeds += 1
            enroll(int(fresh[0]), -1)
            continue

        pos = queue.popleft()
        holder = nodes[pos]
        ties = kept_ties[pos]
        if ties is None:
            start, stop = indptr[holder], indptr[holder + 1]
            peers, tie_weights = indices[start:stop], weights[start:stop]
        else:
            peers, tie_weights = ties
        if swor and len(peers):
            open_ = ~sampled[peers]
            peers, tie_weights = peers[open_], tie_weights[open_]
        if len(peers) == 0:
            continue
        peer = int(peers[recruiter.choose(tie_weights, stream.draw())])
        reject = reject_a if members[peer] else reject_b
        if reject > 0 and stream.draw() < reject:
            continue
        enroll(peer, pos)

    return RecruitmentSample(nodes, recruiter_nodes, positions, waves, degrees, chain_deaths, reseeds)
