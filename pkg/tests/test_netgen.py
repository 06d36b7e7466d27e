import numpy as np
import pytest

from pyrds.estimators import homophily_by_category
from pyrds.exceptions import HomophilyError, NetworkGenerationError, NetworkTransformError
from pyrds.graph import AttributedGraph, undirected_graph
from pyrds.netgen import (AttributeSpec, DegreeDistribution, GeneratorSpec, add_edges_preserving_homophily,
                          assign_categories, assign_edge_weights, configuration_pairs, generate,
                          make_directed_variant, node_types, rewire_preserving_attributes)


def homophilous_spec(node_count, h, seed=0):
    return GeneratorSpec(node_count, attributes=[AttributeSpec('group', {'A': 0.4, 'B': 0.6}, homophily=h)],
                         rng_seed=seed)


@pytest.fixture(scope='module')
def network():
    return generate(homophilous_spec(1000, 0.4, seed=1))


@pytest.mark.parametrize('h', [0.0, 0.4])
def test_generated_homophily(h):
    g = generate(homophilous_spec(2000, h, seed=2))
    assert g.is_undirected()
    assert g.is_connected()
    measured = homophily_by_category(g, 'group')
    assert measured['A'] == pytest.approx(h, abs=0.02)
    assert measured['B'] == pytest.approx(h, abs=0.02)
    assert g.true_proportion(g.partition('group', 'A')) == pytest.approx(0.4, abs=0.03)


def test_generate_is_deterministic():
    assert generate(homophilous_spec(300, 0.2, seed=5)) == generate(homophilous_spec(300, 0.2, seed=5))


def test_generate_without_attributes():
    g = generate(GeneratorSpec(500, degree_distribution=DegreeDistribution('power-law', exponent=2.5), rng_seed=3))
    assert g.is_connected()
    assert g.attribute_names == []
    assert g.degrees().min() >= 1


def test_generate_two_nodes():
    g = generate(GeneratorSpec(2))
    assert g.n_nodes == 2
    assert g.edges.tolist() == [[0, 1], [1, 0]]


def test_generate_unreachable_homophily():
    attr = AttributeSpec('group', {'A': 0.5, 'B': 0.5}, homophily={'A': 0.9, 'B': 0.0})
    with pytest.raises(HomophilyError) as err:
        generate(GeneratorSpec(500, attributes=[attr], rng_seed=4))
    assert err.value.attribute == 'group'


@pytest.mark.parametrize('kwargs', [
    {'name': 'group', 'proportions': {'A': 0.5, 'B': 0.4}},
    {'name': 'group', 'proportions': {'A': 1.2, 'B': -0.2}},
    {'name': 'group', 'proportions': {'A': 0.5, 'B': 0.5}, 'homophily': 1.0},
    {'name': 'group', 'proportions': {'A': 0.5, 'B': 0.5}, 'homophily': {'C': 0.2}},
])
def test_attribute_spec_validation(kwargs):
    with pytest.raises(NetworkGenerationError):
        AttributeSpec(**kwargs)


def test_generator_spec_validation():
    with pytest.raises(NetworkGenerationError):
        GeneratorSpec(1)
    with pytest.raises(NetworkGenerationError):
        GeneratorSpec(10, attributes=[AttributeSpec('a', {'x': 1.0}), AttributeSpec('a', {'y': 1.0})])
    with pytest.raises(NetworkGenerationError):
        DegreeDistribution('poisson')


def test_degree_sample_is_graphical_sized():
    rng = np.random.default_rng(0)
    for kind in ('geometric', 'power-law'):
        degrees = DegreeDistribution(kind).sample(50, rng)
        assert len(degrees) == 50
        assert degrees.sum() % 2 == 0
        assert degrees.max() <= 49


def test_configuration_pairs_are_simple():
    rng = np.random.default_rng(1)
    degrees = DegreeDistribution().sample(300, rng)
    pairs = configuration_pairs(degrees, rng)
    assert np.all(pairs[:, 0] != pairs[:, 1])
    keys = {tuple(sorted(p)) for p in pairs.tolist()}
    assert len(keys) == len(pairs)
    assert np.all(np.bincount(pairs.ravel(), minlength=300) <= degrees)


def test_assign_categories_proportions():
    rng = np.random.default_rng(2)
    degrees = rng.integers(1, 20, size=1000)
    labels = assign_categories(AttributeSpec('group', {'A': 0.25, 'B': 0.75}), degrees, rng)
    assert np.sum(labels == 'A') == 250
    assert degrees[labels == 'A'].mean() == pytest.approx(degrees[labels == 'B'].mean(), rel=0.05)


def test_node_types():
    g = AttributedGraph(4, attributes={'a': ['x', 'x', 'y', 'y'], 'b': ['p', 'q', 'p', 'p']})
    joint = node_types(g)
    assert len(np.unique(joint)) == 3
    assert joint[2] == joint[3]
    assert len(np.unique(node_types(g, 'a'))) == 2


def test_directed_variant(network):
    assert make_directed_variant(network, 0.0) == network
    g = make_directed_variant(network, 0.5, rng_seed=3)
    assert g.irreciprocal_fraction() == pytest.approx(0.5, abs=0.02)
    assert g.is_connected(directed=True)
    assert g.reciprocal_subgraph().n_edges == network.n_edges
    assert list(g.attribute_values('group')) == list(network.attribute_values('group'))


def test_directed_variant_bias(network):
    part = network.partition('group', 'A')
    g = make_directed_variant(network, 0.3, attachment_bias=3.0, partition=part, rng_seed=4)
    in_deg = g.degrees('in')
    members = g.partition('group', 'A').members
    assert in_deg[members].mean() > in_deg[~members].mean() + 2


def test_directed_variant_errors(network):
    with pytest.raises(NetworkTransformError):
        make_directed_variant(network, 1.0)
    with pytest.raises(NetworkTransformError):
        make_directed_variant(network, 0.2, attachment_bias=1.0)
    with pytest.raises(NetworkTransformError):
        make_directed_variant(AttributedGraph(3, [[0, 1], [1, 2], [2, 0]]), 0.2)


def test_add_edges(network):
    assert add_edges_preserving_homophily(network, 0) == network
    g, stats = add_edges_preserving_homophily(network, 20, rng_seed=5, return_stats=True)
    mean_before = network.n_edges / network.n_nodes
    assert g.n_edges / g.n_nodes == pytest.approx(mean_before + 20, abs=0.2)
    assert stats['added'] == 10000
    assert g.is_undirected()
    before = homophily_by_category(network, 'group')
    after = homophily_by_category(g, 'group')
    assert after['A'] == pytest.approx(before['A'], abs=0.02)
    assert after['B'] == pytest.approx(before['B'], abs=0.02)


@pytest.fixture(scope='module', params=[1, 2, 3, 4, 5])
def seeded_network(request):
    return generate(homophilous_spec(1000, 0.4, seed=request.param))


def test_transforms_keep_homophily_across_seeds(seeded_network):
    before = homophily_by_category(seeded_network, 'group')
    mean_before = seeded_network.n_edges / seeded_network.n_nodes
    added = add_edges_preserving_homophily(seeded_network, 20, rng_seed=5)
    rewired = rewire_preserving_attributes(seeded_network, rng_seed=6, attribute='group')
    assert added.n_edges / added.n_nodes == pytest.approx(mean_before + 20, abs=0.2)
    for g in (added, rewired):
        after = homophily_by_category(g, 'group')
        assert after['A'] == pytest.approx(before['A'], abs=0.02)
        assert after['B'] == pytest.approx(before['B'], abs=0.02)


def test_add_edges_capacity():
    g = undirected_graph(4, [[0, 1], [2, 3]], attributes={'group': ['A', 'A', 'B', 'B']})
    with pytest.raises(NetworkTransformError):
        add_edges_preserving_homophily(g, 10)


def test_rewire(network):
    g, stats = rewire_preserving_attributes(network, rng_seed=6, attribute='group', return_stats=True)
    assert stats['retained_fraction'] >= 0.95
    assert stats['rewired'] + stats['skipped'] == network.n_edges // 2
    assert g.is_connected()
    before = homophily_by_category(network, 'group')
    after = homophily_by_category(g, 'group')
    assert after['A'] == pytest.approx(before['A'], abs=0.02)
    assert after['B'] == pytest.approx(before['B'], abs=0.02)
    assert not np.array_equal(np.sort(network.degrees()), np.sort(g.degrees()))


def test_rewire_too_fragmented():
    g = undirected_graph(6, [[0, 1], [1, 2], [2, 3], [3, 4], [4, 5]])
    with pytest.raises(NetworkTransformError):
        rewire_preserving_attributes(g, min_retained=1.01)


@pytest.mark.parametrize('scheme, expected', [('max', 10.0), ('min', 5.0)])
def test_combined_weights(scheme, expected):
    g = AttributedGraph(2, [[0, 1], [1, 0]], weights=[10.0, 5.0])
    out = assign_edge_weights(g, scheme=scheme)
    assert out.weights.tolist() == [expected, expected]
    same = AttributedGraph(2, [[0, 1], [1, 0]], weights=[3.0, 3.0])
    assert assign_edge_weights(same, scheme=scheme).weights.tolist() == [3.0, 3.0]


def test_lognormal_weights(network):
    g = assign_edge_weights(network, rng_seed=7)
    assert np.all(g.weights >= 1)
    assert np.array_equal(g.weights, g.weights[g.reverse_edge_index])
    raw = assign_edge_weights(network, rng_seed=7, symmetric=False)
    assert not np.array_equal(raw.weights, raw.weights[raw.reverse_edge_index])
    assert assign_edge_weights(network, rng_seed=7) == g


def test_in_group_boost(network):
    g = assign_edge_weights(network, rng_seed=8, in_group_boost=3.0, boost_attribute='group')
    codes = g.attribute_codes('group')
    same = codes[g.src] == codes[g.dst]
    assert g.weights[same].mean() > 2 * g.weights[~same].mean()


def test_weight_scheme_unknown(network):
    with pytest.raises(NetworkTransformError):
        assign_edge_weights(network, scheme='mean')
