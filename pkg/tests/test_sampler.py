import numpy as np
import pytest

from pyrds.exceptions import ChainDeathError, SamplingConfigError
from pyrds.graph import AttributedGraph, NodePartition, undirected_graph
from pyrds.sampler import (SEED, SamplingConfig, WeightedRecruiter, draw_ignore_set, reported_degree, run_chain,
                           select_seeds)

pair = undirected_graph(2, [[0, 1]])
star = undirected_graph(7, [[0, k] for k in range(1, 7)],
                        attributes={'group': ['B', 'A', 'A', 'B', 'B', 'B', 'B']})
ring = undirected_graph(10, [[k, (k + 1) % 10] for k in range(10)])
# ring with chords, not bipartite
mixed = undirected_graph(10, [[k, (k + 1) % 10] for k in range(10)] + [[0, 5], [2, 7], [1, 4], [3, 9], [6, 8]])
nobody = NodePartition('group', 'A', np.zeros(10, dtype=bool))


@pytest.mark.parametrize('kwargs', [
    {'ignore_prob': (1.5, 0.0)},
    {'reject_prob': -0.1},
    {'reject_prob': (0.1, 0.2, 0.3)},
    {'seed_count': 0},
    {'seed_count': 11, 'target_sample_size': 10},
    {'target_sample_size': 100, 'checkpoint_sizes': [10, 200]},
    {'target_sample_size': 100, 'checkpoint_sizes': [50, 20]},
    {'seed_selection': 'random'},
    {'replacement': 'sometimes'},
    {'recruitment_mode': 'closest'},
    {'on_chain_death': 'ignore'},
])
def test_sampling_config_validation(kwargs):
    with pytest.raises(SamplingConfigError):
        SamplingConfig(**kwargs)


def test_sampling_config_normalizes():
    cfg = SamplingConfig(replacement='SWOR', seed_selection='degree-proportional',
                         recruitment_mode='weight-proportional', reject_prob=0.2, target_sample_size=50)
    assert cfg.without_replacement
    assert cfg.seed_selection == 'degree'
    assert cfg.recruitment_mode == 'weighted'
    assert cfg.reject_prob == (0.2, 0.2)
    assert cfg.checkpoint_sizes == (50,)


def test_check_graph():
    with pytest.raises(SamplingConfigError):
        SamplingConfig(seed_count=3, target_sample_size=5).check_graph(pair)
    split = undirected_graph(4, [[0, 1], [2, 3]])
    with pytest.raises(SamplingConfigError):
        SamplingConfig(target_sample_size=5).check_graph(split)


def test_select_seeds():
    rng = np.random.default_rng(0)
    seeds = select_seeds(ring, 10, 'uniform', rng)
    assert sorted(seeds.tolist()) == list(range(10))
    seeds = select_seeds(ring, 4, 'uniform', rng, exclude=np.arange(6))
    assert sorted(seeds.tolist()) == [6, 7, 8, 9]
    with pytest.raises(SamplingConfigError):
        select_seeds(ring, 11, 'uniform', rng)


def test_select_seeds_frequencies():
    rng = np.random.default_rng(1)
    draws = np.array([select_seeds(star, 1, 'degree', rng)[0] for _ in range(20000)])
    assert np.mean(draws == 0) == pytest.approx(0.5, abs=0.02)
    square = undirected_graph(4, [[0, 1], [1, 2], [2, 3], [3, 0]])
    draws = np.array([select_seeds(square, 1, 'uniform', rng)[0] for _ in range(40000)])
    assert np.bincount(draws, minlength=4) / len(draws) == pytest.approx([0.25] * 4, abs=0.01)


def test_ignore_sets():
    part = star.partition('group', 'A')
    rng = np.random.default_rng(2)
    assert len(draw_ignore_set(star, 0, (0.0, 0.0), part, rng)) == 0
    assert sorted(draw_ignore_set(star, 0, (1.0, 1.0), part, rng).tolist()) == [1, 2, 3, 4, 5, 6]
    assert sorted(draw_ignore_set(star, 0, (1.0, 0.0), part, rng).tolist()) == [1, 2]
    assert sorted(draw_ignore_set(star, 0, (0.0, 1.0), part, rng).tolist()) == [3, 4, 5, 6]


@pytest.mark.parametrize('ignored, expected', [
    ([], 6),
    ([1, 2], 4),
    ([1, 2, 3, 4, 5, 6], 1),
])
def test_reported_degree(ignored, expected):
    assert reported_degree(star, 0, ignored) == expected


def test_two_node_walk():
    cfg = SamplingConfig(target_sample_size=3)
    sample = run_chain(pair, NodePartition('group', 'A', [True, False]), cfg, seeds=[0])
    assert sample.nodes.tolist() == [0, 1, 0]
    assert sample.waves.tolist() == [0, 1, 2]
    assert sample.recruiters.tolist() == [SEED, 0, 1]
    assert sample.recruiter_positions.tolist() == [-1, 0, 1]
    assert sample.reported_degrees.tolist() == [1, 1, 1]
    assert sample.max_wave == 2


def test_reject_all_fails():
    cfg = SamplingConfig(target_sample_size=5, reject_prob=1.0, on_chain_death='fail')
    with pytest.raises(ChainDeathError) as err:
        run_chain(ring, nobody, cfg)
    assert err.value.sample_size == 1


def test_reject_all_reseeds():
    cfg = SamplingConfig(target_sample_size=5, reject_prob=1.0)
    sample = run_chain(ring, nobody, cfg)
    assert len(sample) == 5
    assert sample.chain_death_count == 4
    assert sample.reseed_count == 4
    assert sample.waves.tolist() == [0] * 5


def test_swor_exhaustion():
    cfg = SamplingConfig(target_sample_size=20, replacement='without')
    with pytest.raises(ChainDeathError):
        run_chain(ring, nobody, cfg)
    with pytest.raises(ChainDeathError):
        run_chain(ring, nobody, SamplingConfig(target_sample_size=20, replacement='without',
                                               on_chain_death='fail'))


def test_swor_distinct_and_recruitment_structure():
    cfg = SamplingConfig(seed_count=2, coupons_per_participant=3, target_sample_size=10,
                         replacement='without', rng_seed=4)
    sample = run_chain(mixed, nobody, cfg)
    assert sorted(sample.nodes.tolist()) == list(range(10))
    for pos in range(len(sample)):
        rpos = sample.recruiter_positions[pos]
        if rpos < 0:
            assert sample.waves[pos] == 0
            assert sample.recruiters[pos] == SEED
        else:
            assert rpos < pos
            assert sample.waves[pos] == sample.waves[rpos] + 1
            assert sample.recruiters[pos] == sample.nodes[rpos]
            assert mixed.has_edge(sample.nodes[rpos], sample.nodes[pos])
    assert sample.wave_sizes().sum() == 10
    assert len(sample.head(4)) == 4
    assert list(sample.to_frame().columns) == ['node', 'recruiter', 'wave', 'reported_degree']


def test_chain_is_deterministic():
    cfg = SamplingConfig(seed_count=3, coupons_per_participant=2, target_sample_size=200,
                         ignore_prob=(0.3, 0.1), reject_prob=(0.2, 0.0), rng_seed=9)
    part = NodePartition('group', 'A', np.arange(10) < 4)
    first, second = run_chain(mixed, part, cfg), run_chain(mixed, part, cfg)
    assert np.array_equal(first.nodes, second.nodes)
    assert np.array_equal(first.reported_degrees, second.reported_degrees)
    other = run_chain(mixed, part, SamplingConfig(seed_count=3, coupons_per_participant=2, target_sample_size=200,
                                                  ignore_prob=(0.3, 0.1), reject_prob=(0.2, 0.0), rng_seed=10))
    assert not np.array_equal(first.nodes, other.nodes)


def test_weighted_recruiter():
    recruiter = WeightedRecruiter()
    rng = np.random.default_rng(5)
    picks = np.array([recruiter.choose(np.array([10.0, 5.0]), u) for u in rng.random(100_000)])
    assert np.mean(picks == 0) == pytest.approx(2 / 3, abs=0.01)
    assert recruiter.choose(np.array([1.0, 0.0]), 0.999999) == 0


def test_weighted_chain_on_star():
    g = undirected_graph(3, [[0, 1], [0, 2]], weights=[10.0, 5.0])
    cfg = SamplingConfig(target_sample_size=30001, recruitment_mode='weighted', rng_seed=6)
    sample = run_chain(g, NodePartition('group', 'A', [False, True, False]), cfg, seeds=[0])
    leaves = sample.nodes[1::2]
    assert np.all(sample.nodes[::2] == 0)
    assert np.mean(leaves == 1) == pytest.approx(2 / 3, abs=0.02)


def test_random_walk_visits_degree_share():
    cfg = SamplingConfig(target_sample_size=1_000_000, rng_seed=7)
    sample = run_chain(mixed, nobody, cfg)
    visits = np.bincount(sample.nodes, minlength=10) / len(sample)
    degrees = mixed.degrees().astype(float)
    assert 0.5 * np.abs(visits - degrees / degrees.sum()).sum() <= 0.01


def test_directed_chain_reports_out_degree():
    g = AttributedGraph(3, [[0, 1], [1, 2], [2, 0], [0, 2]])
    cfg = SamplingConfig(target_sample_size=50, directed=True, rng_seed=3)
    sample = run_chain(g, NodePartition('group', 'A', [True, False, False]), cfg)
    out = g.degrees('out')
    assert sample.reported_degrees.tolist() == out[sample.nodes].tolist()
    for pos in range(1, len(sample)):
        assert g.has_edge(sample.recruiters[pos], sample.nodes[pos])
