import numpy as np
import pytest

from pyrds.estimators import stationary_distribution
from pyrds.exceptions import ExperimentError, MetricsError
from pyrds.experiments import (apply_axis, compute_metrics, grid_experiment, replication_rng, run_experiment,
                               run_replications)
from pyrds.netgen import AttributeSpec, GeneratorSpec, assign_edge_weights, generate, make_directed_variant
from pyrds.results import EstimateSeries
from pyrds.sampler import SamplingConfig

base = SamplingConfig(seed_count=10, coupons_per_participant=3, target_sample_size=300,
                      checkpoint_sizes=(100, 300), rng_seed=1)


@pytest.fixture(scope='module')
def population():
    g = generate(GeneratorSpec(2000, attributes=[AttributeSpec('group', {'A': 0.4, 'B': 0.6}, homophily=0.4)],
                               rng_seed=11))
    return g, g.partition('group', 'A')


@pytest.fixture(scope='module')
def small():
    g = generate(GeneratorSpec(200, attributes=[AttributeSpec('group', {'A': 0.3, 'B': 0.7})], rng_seed=12))
    return g, g.partition('group', 'A')


def series_of(values, checkpoints=(10,)):
    return [EstimateSeries(i, checkpoints, {'rds2': [v]}) for i, v in enumerate(values)]


def test_metrics_examples():
    row = compute_metrics(series_of([0.4, 0.6]), 0.5).row('rds2')
    assert row['AE'] == pytest.approx(0.5)
    assert row['bias'] == pytest.approx(0.0, abs=1e-15)
    assert row['SD'] == pytest.approx(0.1)
    assert row['MAE'] == pytest.approx(0.1)
    row = compute_metrics(series_of([0.3] * 4), 0.5).row('rds2')
    assert row['SD'] == 0.0
    assert row['MAE'] == pytest.approx(row['bias'])
    row = compute_metrics(series_of([0.7]), 0.5).row('rds2')
    assert row['SD'] == 0.0
    assert row['m'] == 1


def test_metrics_order_invariant():
    rng = np.random.default_rng(0)
    values = rng.random(500)
    series = series_of(values)
    shuffled = [series[i] for i in rng.permutation(500)]
    first = compute_metrics(series, 0.4).frame
    second = compute_metrics(shuffled, 0.4).frame
    assert first.equals(second)
    row = first.iloc[0]
    assert row['MAE'] >= row['bias'] - 1e-12


def test_metrics_errors():
    with pytest.raises(MetricsError):
        compute_metrics([], 0.5)
    mixed = series_of([0.1]) + [EstimateSeries(1, (20,), {'rds2': [0.2]})]
    with pytest.raises(MetricsError):
        compute_metrics(mixed, 0.5)
    with pytest.raises(MetricsError):
        EstimateSeries(0, (10, 20), {'rds2': [0.1]})


def test_replication_streams_are_pure():
    a = replication_rng(7, 3).random(5)
    assert np.array_equal(a, replication_rng(7, 3).random(5))
    assert not np.array_equal(a, replication_rng(7, 4).random(5))
    assert not np.array_equal(a, replication_rng(8, 3).random(5))


def test_replications_deterministic(small):
    g, part = small
    cfg = SamplingConfig(seed_count=2, coupons_per_participant=2, target_sample_size=50,
                         checkpoint_sizes=(25, 50), rng_seed=3)
    first = run_replications(g, part, cfg, 6, progress=False)
    second = run_replications(g, part, cfg, 6, progress=False)
    assert [s.replication for s in first] == list(range(6))
    for a, b in zip(first, second):
        assert np.array_equal(a.estimates['rds2'], b.estimates['rds2'])
    pooled = run_replications(g, part, cfg, 6, n_jobs=2, progress=False)
    for a, b in zip(first, pooled):
        assert a.replication == b.replication
        assert np.array_equal(a.estimates['rds2'], b.estimates['rds2'])


def test_single_replication(small):
    g, part = small
    series = run_replications(g, part, SamplingConfig(target_sample_size=20), 1, progress=False)
    assert len(series) == 1
    with pytest.raises(ExperimentError):
        run_replications(g, part, SamplingConfig(target_sample_size=20), 0, progress=False)


def test_eig_series_with_stationary(small):
    g, part = small
    vector = stationary_distribution(g, directed=False)
    series = run_replications(g, part, SamplingConfig(target_sample_size=20), 3, stationary=vector,
                              progress=False)
    assert series[0].estimators == ['rds2', 'eig']
    np.testing.assert_allclose(series[0].estimates['eig'], series[0].estimates['rds2'], atol=1e-9)


def test_apply_axis():
    cfg = apply_axis(SamplingConfig(reject_prob=(0.1, 0.2)), 'p_r', 0.5)
    assert cfg.reject_prob == (0.5, 0.2)
    assert apply_axis(cfg, "p'_i", 0.3).ignore_prob == (0.0, 0.3)
    assert apply_axis(cfg, 'reject_prob', 0.4).reject_prob == (0.4, 0.4)
    assert apply_axis(cfg, 'coupons_per_participant', 3).coupons_per_participant == 3
    with pytest.raises(ExperimentError):
        apply_axis(cfg, 'target_sample_size', 10)


def test_grid_single_cell_matches_run(small):
    g, part = small
    cfg = SamplingConfig(seed_count=2, target_sample_size=40, checkpoint_sizes=(20, 40), rng_seed=5)
    grid = grid_experiment(g, part, cfg, ('p_r', [0.0]), m=8, progress=False)
    curve = run_experiment(g, part, cfg, 8, progress=False)
    cell = grid.cell(0.0, None)
    row = curve.row('rds2', 40)
    for column in ('AE', 'bias', 'SD', 'MAE'):
        assert cell[column] == row[column]


def test_grid_shape(small):
    g, part = small
    cfg = SamplingConfig(seed_count=2, target_sample_size=30, rng_seed=6)
    grid = grid_experiment(g, part, cfg, ('p_i', [0.0, 0.2, 0.4]), ('coupons_per_participant', [1, 2, 3]),
                           m=3, progress=False)
    assert grid.kind == 'grid'
    assert len(grid.summary('rds2')) == 9
    assert grid.metadata['axis2_values'] == [1, 2, 3]
    with pytest.raises(ExperimentError):
        grid_experiment(g, part, cfg, ('colour', [1]), m=1, progress=False)


def test_baseline_is_nearly_unbiased(population):
    g, part = population
    row = run_experiment(g, part, base, 100, progress=False).row('rds2')
    assert row['bias'] <= 0.03


def test_group_dependent_rejection_biases(population):
    g, part = population
    cfg = apply_axis(base, 'p_r', 0.5)
    row = run_experiment(g, part, cfg, 100, progress=False).row('rds2')
    assert row['AE'] < row['p_star'] - 0.10


def test_group_independent_failures_stay_unbiased(population):
    g, part = population
    cfg = apply_axis(apply_axis(base, 'ignore_prob', 0.3), 'reject_prob', 0.3)
    row = run_experiment(g, part, cfg, 100, progress=False).row('rds2')
    assert row['bias'] <= 0.04


def test_directed_walk_needs_stationary_weights(population):
    g, part = population
    directed = make_directed_variant(g, 0.3, attachment_bias=3.0, partition=part, rng_seed=2)
    part = directed.partition('group', 'A')
    vector = stationary_distribution(directed, directed=True)
    cfg = SamplingConfig(seed_count=10, target_sample_size=300, directed=True, rng_seed=4)
    table = run_experiment(directed, part, cfg, 200, stationary=vector, progress=False)
    assert table.row('rds2')['bias'] >= 0.04
    assert table.row('eig')['bias'] <= 0.02


def test_preferential_recruitment(population):
    g, part = population
    weighted = assign_edge_weights(g, rng_seed=3, in_group_boost=5.0, boost_attribute='group')
    vector = stationary_distribution(weighted, mode='weighted', directed=False)
    cfg = SamplingConfig(seed_count=10, target_sample_size=300, recruitment_mode='weighted', rng_seed=5)
    table = run_experiment(weighted, part, cfg, 200, stationary={'weighted': vector}, progress=False)
    assert table.row('rds2')['bias'] >= 0.01
    assert table.row('eig')['bias'] <= 0.02


def test_replacement_barely_matters_at_small_fractions(population):
    g, part = population
    cfg = SamplingConfig(seed_count=10, coupons_per_participant=3, target_sample_size=200, rng_seed=8)
    with_ = run_experiment(g, part, cfg, 200, progress=False).row('rds2')
    without = run_experiment(g, part, apply_axis(cfg, 'replacement', 'without'), 200, progress=False).row('rds2')
    assert abs(with_['AE'] - without['AE']) <= 0.02
    assert without['SD'] <= with_['SD'] + 0.02


def test_more_coupons_cost_accuracy(population):
    g, part = population
    cfg = SamplingConfig(seed_count=10, coupons_per_participant=1, target_sample_size=300, rng_seed=9)
    one = run_experiment(g, part, cfg, 200, progress=False).row('rds2')
    three = run_experiment(g, part, apply_axis(cfg, 'coupons_per_participant', 3), 200, progress=False).row('rds2')
    assert three['MAE'] >= one['MAE']


def test_grid_over_recruitment_modes(small):
    g, part = small
    weighted = assign_edge_weights(g, rng_seed=4)
    vectors = {'uniform': stationary_distribution(weighted, directed=False),
               'weight-proportional': stationary_distribution(weighted, mode='weighted', directed=False)}
    cfg = SamplingConfig(seed_count=2, target_sample_size=40, rng_seed=7)
    grid = grid_experiment(weighted, part, cfg, ('recruitment_mode', ['uniform', 'weighted']), m=4,
                           stationary=vectors, progress=False)
    frame = grid.frame
    for mode in ('uniform', 'weighted'):
        assert sorted(frame.loc[frame['axis1'] == mode, 'estimator']) == ['eig', 'rds2']
    uniform_eig = frame[(frame['axis1'] == 'uniform') & (frame['estimator'] == 'eig')]['AE'].iloc[0]
    uniform_rds2 = frame[(frame['axis1'] == 'uniform') & (frame['estimator'] == 'rds2')]['AE'].iloc[0]
    assert uniform_eig == pytest.approx(uniform_rds2, abs=1e-9)
