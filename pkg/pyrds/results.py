from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import asdf
import numpy as np
import pandas as pd

from pyrds.exceptions import MetricsError

logger = logging.getLogger(__name__)

metric_columns = ['AE', 'bias', 'SD', 'MAE', 'm', 'p_star']
curve_columns = ['checkpoint', 'estimator'] + metric_columns
grid_columns = ['axis1', 'axis2', 'estimator'] + metric_columns

# recorded next to every metrics file
design_flags = {
    'checkpoints': 'prefix of one chain per replication',
    'sd_convention': 'population (divide by m)',
    'coupon_queue': 'fifo',
    'seeds_in_sample': True,
    'ignore_set_on_repeat': 'redrawn',
    'rds2_degree': 'reported degree (out-degree in directed runs)',
    'eig_stationary': 'computed from the full graph',
    'rng_streams': 'SeedSequence(master_seed, spawn_key=(replication,))',
}


@dataclass(frozen=True, eq=False)
class EstimateSeries:
    """Estimates of one replication at every checkpoint

    Parameters
    ----------
    replication : int
        Replication index, also the RNG stream index
    checkpoints : np.ndarray
        Ascending sample sizes
    estimates : Dict[str, np.ndarray]
        Estimator name to one estimate per checkpoint
    chain_death_count : int
        Times the chain ran out of coupons
    reseed_count : int
        Fresh seeds drawn after chain deaths
    """
    replication: int
    checkpoints: np.ndarray
    estimates: Dict[str, np.ndarray] = field(repr=False)
    chain_death_count: int = 0
    reseed_count: int = 0

    def __post_init__(self):
        checkpoints = np.array(self.checkpoints, dtype=np.int64).ravel()
        if np.any(np.diff(checkpoints) <= 0):
            raise MetricsError('Checkpoints of an estimate series must be ascending')
        estimates = {}
        for name, values in self.estimates.items():
            values = np.array(values, dtype=float).ravel()
            if len(values) != len(checkpoints):
                raise MetricsError(f'Estimator {name!r} has {len(values)} values for {len(checkpoints)} checkpoints')
            estimates[str(name)] = values
        object.__setattr__(self, 'checkpoints', checkpoints)
        object.__setattr__(self, 'estimates', estimates)

    @property
    def estimators(self) -> List[str]:
        return list(self.estimates)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.estimates, index=pd.Index(self.checkpoints, name='checkpoint'))
        frame.insert(0, 'replication', self.replication)
        return frame


class MetricsTable(object):
    """AE, bias, SD and MAE per checkpoint (curves) or per grid cell (grids)"""
    def __init__(self, frame: pd.DataFrame, metadata: Optional[Dict[str, Any]] = None) -> None:
        if list(frame.columns) == curve_columns:
            self.kind = 'curve'
        elif list(frame.columns) == grid_columns:
            self.kind = 'grid'
        else:
            raise MetricsError(f'Metrics columns must be {curve_columns} or {grid_columns}, got {list(frame.columns)}')
        self.frame = frame.reset_index(drop=True)
        self.metadata = dict(metadata or {})

    def __repr__(self) -> str:
        return f'MetricsTable(kind={self.kind!r}, rows={len(self)}, estimators={self.estimators})'

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def estimators(self) -> List[str]:
        return list(dict.fromkeys(self.frame['estimator']))

    def summary(self, estimator: Optional[str] = None) -> pd.DataFrame:
        """Metrics rows, optionally for one estimator only"""
        if estimator is None:
            return self.frame.copy()
        if estimator not in self.estimators:
            raise MetricsError(f'No metrics for estimator {estimator!r}; available: {self.estimators}')
        return self.frame[self.frame['estimator'] == estimator].reset_index(drop=True)

    def row(self, estimator: str, checkpoint: Optional[int] = None) -> pd.Series:
        """Metrics of one estimator at a checkpoint, the last one by default"""
        if self.kind != 'curve':
            raise MetricsError('row() applies to curve tables, use cell() on grids')
        rows = self.summary(estimator)
        if checkpoint is None:
            return rows.iloc[-1]
        hit = rows[rows['checkpoint'] == checkpoint]
        if hit.empty:
            raise MetricsError(f'No checkpoint {checkpoint} in the table')
        return hit.iloc[0]

    def cell(self, axis1, axis2, estimator: str = 'rds2') -> pd.Series:
        """Metrics of one grid cell"""
        if self.kind != 'grid':
            raise MetricsError('cell() applies to grid tables')
        rows = self.summary(estimator)
        second = rows['axis2'].isna() if axis2 is None else rows['axis2'] == axis2
        hit = rows[(rows['axis1'] == axis1) & second]
        if hit.empty:
            raise MetricsError(f'No grid cell ({axis1!r}, {axis2!r}) for estimator {estimator!r}')
        return hit.iloc[0]

    @classmethod
    def from_cells(cls, cells: Sequence[tuple], metadata: Optional[Dict[str, Any]] = None) -> MetricsTable:
        """Grid table from ``(value1, value2, curve_table)`` triples, keeping the last checkpoint of each cell"""
        rows = []
        for value1, value2, table in cells:
            last = table.frame[table.frame['checkpoint'] == table.frame['checkpoint'].max()]
            for _, r in last.iterrows():
                rows.append([value1, value2, r['estimator']] + [r[c] for c in metric_columns])
        return cls(pd.DataFrame(rows, columns=grid_columns), metadata)


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (tuple, set, frozenset)):
        return list(obj)
    raise TypeError(f'{type(obj).__name__} is not JSON serializable')


def metadata_path(path: str) -> str:
    return str(path) + '.meta.json'


def write_metrics(table: MetricsTable, path: str, metadata: Optional[Dict[str, Any]] = None) -> None:
    """Write a metrics table as CSV, reals at 6 significant digits, plus a ``.meta.json`` sidecar
    holding the table metadata (config hash, master seed, ...) and the design flags of the run

    Parameters
    ----------
    table : MetricsTable
        Table to write
    path : str
        CSV destination
    metadata : Optional[Dict[str, Any]], optional
        Extra entries for the sidecar, by default None

    Raises
    ------
    MetricsError
        If the files cannot be written
    """
    columns = curve_columns if table.kind == 'curve' else grid_columns
    meta = {'kind': table.kind, 'design_flags': design_flags}
    meta.update(table.metadata)
    meta.update(metadata or {})
    try:
        table.frame.to_csv(path, index=False, columns=columns, float_format='%.6g', lineterminator='\n')
        with open(metadata_path(path), 'w', encoding='utf-8') as f:
            json.dump(meta, f, indent=2, sort_keys=True, default=_json_default)
            f.write('\n')
    except OSError as err:
        raise MetricsError(f'Cannot write metrics to {path}: {err}') from err
    logger.info('wrote %d metric rows to %s', len(table), path)


def read_metrics(path: str) -> MetricsTable:
    """Read a table written by `write_metrics`, with its sidecar metadata when present"""
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError) as err:
        raise MetricsError(f'Cannot read metrics from {path}: {err}') from err
    metadata = {}
    if os.path.exists(metadata_path(path)):
        with open(metadata_path(path), encoding='utf-8') as f:
            metadata = json.load(f)
        metadata.pop('kind', None)
        metadata.pop('design_flags', None)
    return MetricsTable(frame, metadata)


def save_series(series: Sequence[EstimateSeries], fname: str) -> str:
    """Archive raw estimate series into an asdf file

    Parameters
    ----------
    series : Sequence[EstimateSeries]
        Replications to store
    fname : str
        File name, '.asdf' is appended when missing

    Returns
    -------
    str
        Name of the written file
    """
    tree = {'series': [{
        'replication': int(s.replication),
        'checkpoints': np.array(s.checkpoints),
        'estimates': {name: np.array(v) for name, v in s.estimates.items()},
        'chain_death_count': int(s.chain_death_count),
        'reseed_count': int(s.reseed_count),
    } for s in series]}
    af = asdf.AsdfFile(tree=tree)
    if not fname.endswith('.asdf'):
        fname += '.asdf'
    af.write_to(fname)
    return fname


def load_series(fname: str) -> List[EstimateSeries]:
    """Read estimate series written by `save_series`"""
    with asdf.open(fname) as af:
        return [EstimateSeries(int(s['replication']),
                               np.array(s['checkpoints']),
                               {name: np.array(v) for name, v in s['estimates'].items()},
                               int(s['chain_death_count']),
                               int(s['reseed_count']))
                for s in af.tree['series']]
