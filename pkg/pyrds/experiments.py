from __future__ import annotations

import logging
import math
import multiprocessing
from dataclasses import replace
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from tqdm.auto import tqdm

from pyrds.estimators import StationaryVector, snapshot_estimates, transition_mode
from pyrds.exceptions import ExperimentError, MetricsError
from pyrds.graph import AttributedGraph, NodePartition
from pyrds.results import EstimateSeries, MetricsTable, curve_columns
from pyrds.sampler import SamplingConfig, run_chain

logger = logging.getLogger(__name__)

StationaryLike = Union[None, StationaryVector, Mapping[str, StationaryVector]]

grid_axes = ['p_i', "p'_i", 'p_r', "p'_r", 'ignore_prob', 'reject_prob', 'seed_count',
             'coupons_per_participant', 'seed_selection', 'replacement', 'recruitment_mode']


def replication_rng(master_seed: int, replication: int) -> np.random.Generator:
    """Independent stream of one replication, a pure function of (master seed, index)"""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(int(replication),)))


def _pick_stationary(stationary: StationaryLike, config: SamplingConfig) -> Optional[StationaryVector]:
    if stationary is None or isinstance(stationary, StationaryVector):
        return stationary
    for mode, vector in stationary.items():
        if transition_mode(mode) == config.recruitment_mode:
            return vector
    return None


def run_replication(graph: AttributedGraph,
                    partition: NodePartition,
                    config: SamplingConfig,
                    replication: int,
                    stationary: StationaryLike = None) -> EstimateSeries:
    """Run one chain on its own RNG stream and snapshot the estimates at every checkpoint"""
    sample = run_chain(graph, partition, config, rng=replication_rng(config.rng_seed, replication))
    estimates = snapshot_estimates(sample, partition, config.checkpoint_sizes, _pick_stationary(stationary, config))
    return EstimateSeries(replication, config.checkpoint_sizes, estimates,
                          sample.chain_death_count, sample.reseed_count)


_worker_state: Dict[str, Any] = {}


def _init_worker(graph, partition, config, stationary) -> None:
    _worker_state.update(graph=graph, partition=partition, config=config, stationary=stationary)


def _replication_worker(indices: Sequence[int]) -> List[EstimateSeries]:
    s = _worker_state
    return [run_replication(s['graph'], s['partition'], s['config'], i, s['stationary']) for i in indices]


def run_replications(graph: AttributedGraph,
                     partition: NodePartition,
                     config: SamplingConfig,
                     m: int,
                     stationary: StationaryLike = None,
                     n_jobs: int = 1,
                     progress: bool = True) -> List[EstimateSeries]:
    """Run `m` independent replications of a recruitment configuration

    Parameters
    ----------
    graph : AttributedGraph
        Population network, shared read-only by every replication
    partition : NodePartition
        Group of interest
    config : SamplingConfig
        Recruitment settings; ``config.rng_seed`` is the master seed
    m : int
        Number of replications
    stationary : StationaryLike, optional
        Stationary vector (or recruitment mode to vector mapping) enabling the 'eig' estimator,
        by default None
    n_jobs : int, optional
        Worker processes, by default 1
    progress : bool, optional
        Show a progress bar, by default True

    Returns
    -------
    List[EstimateSeries]
        One series per replication, ordered by replication index whatever the schedule
    """
    if m < 1:
        raise ExperimentError(f'Replication count must be positive, got {m}')
    config.check_graph(graph)
    vector = _pick_stationary(stationary, config)
    if vector is not None and len(vector) != graph.n_nodes:
        raise ExperimentError(f'Stationary vector covers {len(vector)} nodes, graph has {graph.n_nodes}')

    if n_jobs == 1:
        series = [run_replication(graph, partition, config, i, stationary)
                  for i in tqdm(range(m), disable=not progress, desc='replications')]
    else:
        n_jobs = multiprocessing.cpu_count() if n_jobs < 1 else n_jobs
        chunks = [c.tolist() for c in np.array_split(np.arange(m), min(m, 4 * n_jobs))]
        series = []
        with multiprocessing.Pool(n_jobs, initializer=_init_worker,
                                  initargs=(graph, partition, config, stationary)) as pool, \
                tqdm(total=m, disable=not progress, desc='replications') as bar:
            for done in pool.imap_unordered(_replication_worker, chunks):
                series.extend(done)
                bar.update(len(done))
        series.sort(key=lambda s: s.replication)

    deaths = sum(s.chain_death_count for s in series)
    if deaths:
        logger.info('%d chain deaths over %d replications (%d reseeds)', deaths, m,
                    sum(s.reseed_count for s in series))
    return series


def compute_metrics(series: Sequence[EstimateSeries], p_star: float,
                    metadata: Optional[Dict[str, Any]] = None) -> MetricsTable:
    """Average estimate, bias, standard deviation and mean absolute error per checkpoint

    With est_ij the estimate of replication i at checkpoint j: AE_j is the mean of est_ij,
    bias_j = |AE_j - P*|, SD_j the population standard deviation and MAE_j the mean of |est_ij - P*|.
    Sums are compensated, so the table does not depend on the order of the replications.

    Parameters
    ----------
    series : Sequence[EstimateSeries]
        Replications sharing checkpoints and estimators
    p_star : float
        True proportion of the group
    metadata : Optional[Dict[str, Any]], optional
        Stored on the table, by default None

    Returns
    -------
    MetricsTable
        One row per (checkpoint, estimator)

    Raises
    ------
    MetricsError
        On an empty list or replications with different checkpoints or estimators
    """
    if len(series) == 0:
        raise MetricsError('Cannot compute metrics without replications')
    checkpoints = series[0].checkpoints
    estimators = series[0].estimators
    for s in series[1:]:
        if not np.array_equal(s.checkpoints, checkpoints):
            raise MetricsError(f'Replication {s.replication} has checkpoints {s.checkpoints.tolist()}, '
                               f'expected {checkpoints.tolist()}')
        if s.estimators != estimators:
            raise MetricsError(f'Replication {s.replication} has estimators {s.estimators}, expected {estimators}')

    m = len(series)
    rows = []
    for j, checkpoint in enumerate(checkpoints):
        for name in estimators:
            values = [s.estimates[name][j] for s in series]
            ae = math.fsum(values) / m
            sd = math.sqrt(math.fsum((v - ae) ** 2 for v in values) / m)
            mae = math.fsum(abs(v - p_star) for v in values) / m
            rows.append([int(checkpoint), name, ae, abs(ae - p_star), sd, mae, m, float(p_star)])
    meta = {'replications': m}
    meta.update(metadata or {})
    return MetricsTable(pd.DataFrame(rows, columns=curve_columns), meta)


def run_experiment(graph: AttributedGraph,
                   partition: NodePartition,
                   config: SamplingConfig,
                   m: int,
                   stationary: StationaryLike = None,
                   n_jobs: int = 1,
                   progress: bool = True) -> MetricsTable:
    """`run_replications` followed by `compute_metrics` against the true proportion of the partition"""
    series = run_replications(graph, partition, config, m, stationary, n_jobs, progress)
    return compute_metrics(series, graph.true_proportion(partition),
                           {'master_seed': config.rng_seed, 'partition': partition.label})


def apply_axis(config: SamplingConfig, name: str, value) -> SamplingConfig:
    """Copy of `config` with one grid axis set

    p_i / p'_i and p_r / p'_r set the ignore and reject probability of group A / of its complement;
    ignore_prob and reject_prob set both groups at once.
    """
    if name == 'p_i':
        return replace(config, ignore_prob=(value, config.ignore_prob[1]))
    if name == "p'_i":
        return replace(config, ignore_prob=(config.ignore_prob[0], value))
    if name == 'p_r':
        return replace(config, reject_prob=(value, config.reject_prob[1]))
    if name == "p'_r":
        return replace(config, reject_prob=(config.reject_prob[0], value))
    if name in ('ignore_prob', 'reject_prob'):
        return replace(config, **{name: (value, value)})
    if name in grid_axes:
        return replace(config, **{name: value})
    raise ExperimentError(f'Unknown grid axis {name!r}; supported axes are {grid_axes}')


def grid_experiment(graph: AttributedGraph,
                    partition: NodePartition,
                    base_config: SamplingConfig,
                    axis1: Tuple[str, Sequence],
                    axis2: Optional[Tuple[str, Sequence]] = None,
                    m: int = 1000,
                    stationary: StationaryLike = None,
                    n_jobs: int = 1,
                    progress: bool = True) -> MetricsTable:
    """Metrics over the Cartesian product of two config axes, at the last checkpoint of every cell

    Every cell reuses the same graph and the same master seed, so cells differ only by their settings.

    Parameters
    ----------
    graph : AttributedGraph
        Population network
    partition : NodePartition
        Group of interest
    base_config : SamplingConfig
        Settings shared by all cells
    axis1 : Tuple[str, Sequence]
        (axis name, values)
    axis2 : Optional[Tuple[str, Sequence]], optional
        Second (axis name, values), by default a single-column grid
    m : int, optional
        Replications per cell, by default 1000
    stationary : StationaryLike, optional
        Enables 'eig' estimates, a mapping picks the vector matching each cell's recruitment mode,
        by default None
    n_jobs : int, optional
        Worker processes per cell, by default 1
    progress : bool, optional
        Show a progress bar over cells, by default True

    Returns
    -------
    MetricsTable
        Grid table, one row per (cell, estimator)
    """
    name1, values1 = axis1
    name2, values2 = axis2 if axis2 is not None else (None, [None])
    for name in (name1, name2):
        if name is not None and name not in grid_axes:
            raise ExperimentError(f'Unknown grid axis {name!r}; supported axes are {grid_axes}')
    p_star = graph.true_proportion(partition)
    cells = []
    pairs = [(v1, v2) for v1 in values1 for v2 in values2]
    for v1, v2 in tqdm(pairs, disable=not progress, desc='grid cells'):
        config = apply_axis(base_config, name1, v1)
        if name2 is not None:
            config = apply_axis(config, name2, v2)
        logger.debug('grid cell %s=%r, %s=%r', name1, v1, name2, v2)
        series = run_replications(graph, partition, config, m, stationary, n_jobs, progress=False)
        cells.append((v1, v2, compute_metrics(series, p_star)))
    metadata = {'axis1': name1, 'axis1_values': list(values1), 'axis2': name2,
                'axis2_values': list(values2), 'replications': m, 'master_seed': base_config.rng_seed,
                'checkpoint': base_config.checkpoint_sizes[-1], 'partition': partition.label}
    return MetricsTable.from_cells(cells, metadata)
