import json
import os

import numpy as np
import pandas as pd
import pytest

from pyrds.exceptions import MetricsError
from pyrds.experiments import compute_metrics
from pyrds.results import (EstimateSeries, MetricsTable, curve_columns, grid_columns, load_series, metadata_path,
                           read_metrics, save_series, write_metrics)

series = [EstimateSeries(i, (50, 100), {'rds2': [0.3 + 0.01 * i, 0.35], 'eig': [0.4, 0.41 - 0.001 * i]},
                         chain_death_count=i, reseed_count=i)
          for i in range(4)]


def test_write_metrics(tmp_path):
    table = compute_metrics(series, 0.4, {'master_seed': 3})
    path = str(tmp_path / 'metrics.csv')
    write_metrics(table, path, {'config_hash': 'abc'})
    with open(path) as f:
        lines = f.read().split('\n')
    assert lines[0] == ','.join(curve_columns)
    assert len([line for line in lines if line]) == 1 + 4
    with open(metadata_path(path)) as f:
        meta = json.load(f)
    assert meta['kind'] == 'curve'
    assert meta['master_seed'] == 3
    assert meta['config_hash'] == 'abc'
    assert meta['replications'] == 4
    assert meta['design_flags']['sd_convention'].startswith('population')


def test_metrics_six_digits(tmp_path):
    table = compute_metrics([EstimateSeries(0, (10,), {'rds2': [1 / 3]})], 0.5)
    path = str(tmp_path / 'metrics.csv')
    write_metrics(table, path)
    with open(path) as f:
        row = f.read().split('\n')[1]
    assert row.split(',')[:3] == ['10', 'rds2', '0.333333']


def test_read_metrics(tmp_path):
    table = compute_metrics(series, 0.4, {'master_seed': 3})
    path = str(tmp_path / 'metrics.csv')
    write_metrics(table, path)
    back = read_metrics(path)
    assert back.kind == 'curve'
    assert back.estimators == ['rds2', 'eig']
    assert back.row('eig', 50)['AE'] == pytest.approx(0.4)
    assert back.metadata['master_seed'] == 3
    with pytest.raises(MetricsError):
        read_metrics(str(tmp_path / 'missing.csv'))


def test_write_metrics_unwritable(tmp_path):
    table = compute_metrics(series, 0.4)
    with pytest.raises(MetricsError):
        write_metrics(table, str(tmp_path / 'no' / 'such' / 'dir' / 'metrics.csv'))


def test_grid_table():
    cells = [(v, None, compute_metrics(series, v)) for v in (0.3, 0.5)]
    grid = MetricsTable.from_cells(cells, {'axis1': 'p_r'})
    assert grid.kind == 'grid'
    assert list(grid.frame.columns) == grid_columns
    assert len(grid) == 4
    assert grid.cell(0.5, None, 'rds2')['p_star'] == 0.5
    assert grid.cell(0.3, None, 'eig')['AE'] == pytest.approx(np.mean([0.41 - 0.001 * i for i in range(4)]))
    with pytest.raises(MetricsError):
        grid.cell(0.9, None)
    with pytest.raises(MetricsError):
        grid.row('rds2')


def test_bad_columns():
    with pytest.raises(MetricsError):
        MetricsTable(pd.DataFrame({'AE': [0.1]}))


def test_series_archive(tmp_path):
    fname = save_series(series, str(tmp_path / 'series'))
    assert fname.endswith('.asdf')
    assert os.path.exists(fname)
    back = load_series(fname)
    assert [s.replication for s in back] == [0, 1, 2, 3]
    assert sorted(back[2].estimators) == ['eig', 'rds2']
    assert np.array_equal(back[2].estimates['eig'], series[2].estimates['eig'])
    assert back[3].reseed_count == 3
    assert back[1].to_frame().index.tolist() == [50, 100]
