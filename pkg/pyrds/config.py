"""Experiment configuration files.

A configuration is an INI file (``key = value`` lines under ``[section]`` headers, ``#`` or ``;``
comments). Recognised sections:

``[experiment]``
    seed, replications, estimators (rds2 and/or eig), n_jobs, output_dir
``[generator]`` or ``[graph]`` (exactly one)
    generator: node_count, degree_kind, mean_degree, exponent, min_degree, cutoff, degree_sequence,
    rng_seed, tolerance, max_passes; graph: edges, attributes, restrict_to_giant
``[attribute:<name>]`` (generator only, one per attribute)
    proportions (``A:0.4, B:0.6``), homophily (one number or ``A:0.4, B:0.3``)
``[transform:<kind>]`` (applied in file order)
    add_edges: degree_increase, attribute, rng_seed; rewire: attribute, rng_seed, min_retained;
    weights: scheme, mu, sigma, symmetric, in_group_boost, boost_attribute, rng_seed;
    directed: irreciprocal_fraction, attachment_bias, rng_seed
``[partition]``
    attribute, value
``[sampling]``
    every SamplingConfig field except rng_seed (taken from the experiment seed); ``coupons`` and
    ``checkpoints`` are accepted as short names
``[grid]``
    axis1, values1, axis2, values2
"""
from __future__ import annotations

import configparser
import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, replace
from typing import Any, Dict, List, Optional, Tuple

from pyrds.estimators import StationaryVector, stationary_distribution, transition_mode
from pyrds.exceptions import ConfigError, PyRDSError
from pyrds.experiments import grid_axes
from pyrds.graph import AttributedGraph, NodePartition
from pyrds.io import load_graph
from pyrds.netgen import (AttributeSpec, DegreeDistribution, GeneratorSpec, add_edges_preserving_homophily,
                          assign_edge_weights, generate, make_directed_variant, rewire_preserving_attributes)
from pyrds.sampler import SamplingConfig

logger = logging.getLogger(__name__)

estimator_names = ['rds2', 'eig']
transform_kinds = ['add_edges', 'rewire', 'weights', 'directed']

_keys = {
    'experiment': {'seed', 'replications', 'estimators', 'n_jobs', 'output_dir'},
    'generator': {'node_count', 'degree_kind', 'mean_degree', 'exponent', 'min_degree', 'cutoff',
                  'degree_sequence', 'rng_seed', 'tolerance', 'max_passes'},
    'graph': {'edges', 'attributes', 'restrict_to_giant'},
    'attribute': {'proportions', 'homophily'},
    'partition': {'attribute', 'value'},
    'sampling': {'seed_count', 'seed_selection', 'coupons', 'coupons_per_participant', 'replacement',
                 'target_sample_size', 'checkpoints', 'checkpoint_sizes', 'ignore_prob', 'reject_prob',
                 'recruitment_mode', 'on_chain_death', 'directed'},
    'grid': {'axis1', 'values1', 'axis2', 'values2'},
    'transform:add_edges': {'degree_increase', 'attribute', 'rng_seed'},
    'transform:rewire': {'attribute', 'rng_seed', 'min_retained'},
    'transform:weights': {'scheme', 'mu', 'sigma', 'symmetric', 'in_group_boost', 'boost_attribute', 'rng_seed'},
    'transform:directed': {'irreciprocal_fraction', 'attachment_bias', 'rng_seed'},
}

_int_axes = {'seed_count', 'coupons_per_participant'}
_float_axes = {'p_i', "p'_i", 'p_r', "p'_r", 'ignore_prob', 'reject_prob'}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce an experiment from its master seed

    Parameters
    ----------
    sampling : SamplingConfig
        Recruitment settings, ``sampling.rng_seed`` is the master seed
    generator : Optional[GeneratorSpec], optional
        Synthetic network recipe, by default None
    graph_path : Optional[str], optional
        Edge file of an existing network, by default None
    attr_path : Optional[str], optional
        Attribute file of an existing network, by default None
    restrict_to_giant : bool, optional
        Restrict a loaded network to its giant component under the run's edge semantics, by default True
    transforms : Tuple[Tuple[str, Dict[str, Any]], ...], optional
        (kind, keyword arguments) applied in order to the network, by default none
    partition_attribute : Optional[str], optional
        Attribute defining group A, by default None
    partition_value : Optional[str], optional
        Category defining group A, by default None
    estimators : Tuple[str, ...], optional
        Estimators to evaluate, by default ('rds2',)
    replications : int, optional
        Replication count m, by default 1000
    grid : Optional[Tuple[Tuple[str, tuple], Optional[Tuple[str, tuple]]]], optional
        Grid axes, by default None
    output_dir : str, optional
        Directory of the output files, by default '.'
    n_jobs : int, optional
        Worker processes, by default 1
    generator_seed_from_master : bool, optional
        The generator seed follows the master seed, by default False
    """
    sampling: SamplingConfig
    generator: Optional[GeneratorSpec] = None
    graph_path: Optional[str] = None
    attr_path: Optional[str] = None
    restrict_to_giant: bool = True
    transforms: Tuple[Tuple[str, Dict[str, Any]], ...] = ()
    partition_attribute: Optional[str] = None
    partition_value: Optional[str] = None
    estimators: Tuple[str, ...] = ('rds2',)
    replications: int = 1000
    grid: Optional[Tuple[Tuple[str, tuple], Optional[Tuple[str, tuple]]]] = None
    output_dir: str = '.'
    n_jobs: int = 1
    generator_seed_from_master: bool = False

    def __post_init__(self):
        if (self.generator is None) == (self.graph_path is None):
            raise ConfigError('Exactly one of a generator or a graph path must be given')
        for name in self.estimators:
            if name not in estimator_names:
                raise ConfigError(f'Unknown estimator {name!r}; choose from {estimator_names}')
        for kind, _ in self.transforms:
            if kind not in transform_kinds:
                raise ConfigError(f'Unknown transform {kind!r}; choose from {transform_kinds}')
        if self.replications < 1:
            raise ConfigError('replications must be positive')
        if (self.partition_attribute is None) != (self.partition_value is None):
            raise ConfigError('A partition needs both an attribute and a value')
        if self.grid is not None:
            for axis in self.grid:
                if axis is not None and axis[0] not in grid_axes:
                    raise ConfigError(f'Unknown grid axis {axis[0]!r}; supported axes are {grid_axes}')

    @property
    def master_seed(self) -> int:
        return self.sampling.rng_seed

    def with_seed(self, seed: int) -> ExperimentConfig:
        """Copy with a new master seed (and generator seed, when it follows the master seed)"""
        generator = self.generator
        if generator is not None and self.generator_seed_from_master:
            generator = replace(generator, rng_seed=seed)
        return replace(self, sampling=replace(self.sampling, rng_seed=seed), generator=generator)

    def config_hash(self) -> str:
        """SHA-256 of every setting that can change the results"""
        state = asdict(self)
        state.pop('output_dir')
        state.pop('n_jobs')
        blob = json.dumps(state, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode('utf-8')).hexdigest()

    def build_graph(self) -> AttributedGraph:
        """Generate or load the network, apply the transforms and restrict it to its giant component
        under the sampling edge semantics"""
        if self.generator is not None:
            graph = generate(self.generator)
        else:
            graph = load_graph(self.graph_path, self.attr_path)
        for kind, kwargs in self.transforms:
            kwargs = dict(kwargs)
            if kind == 'add_edges':
                graph = add_edges_preserving_homophily(graph, **kwargs)
            elif kind == 'rewire':
                graph = rewire_preserving_attributes(graph, **kwargs)
            elif kind == 'weights':
                graph = assign_edge_weights(graph, **kwargs)
            else:
                group = self.partition(graph) if self.partition_attribute is not None else None
                graph = make_directed_variant(graph, partition=group, **kwargs)
            logger.info('after %s: %r', kind, graph)
        if self.restrict_to_giant:
            graph = graph.restrict_to_giant(directed=self.sampling.directed)
        return graph

    def partition(self, graph: AttributedGraph) -> NodePartition:
        if self.partition_attribute is None:
            raise ConfigError('The configuration has no [partition] section')
        return graph.partition(self.partition_attribute, self.partition_value)

    def stationary(self, graph: AttributedGraph) -> Optional[Dict[str, StationaryVector]]:
        """Stationary vectors for 'eig', one per recruitment mode the experiment uses"""
        if 'eig' not in self.estimators:
            return None
        modes = {self.sampling.recruitment_mode}
        for axis in self.grid or ():
            if axis is not None and axis[0] == 'recruitment_mode':
                modes.update(transition_mode(v) for v in axis[1])
        return {mode: stationary_distribution(graph, mode=mode, directed=self.sampling.directed)
                for mode in sorted(modes)}


def _split(value: str) -> List[str]:
    return [v.strip() for v in value.split(',') if v.strip()]


def _number(value: str, cast, where: str):
    try:
        return cast(value)
    except ValueError:
        raise ConfigError(f'{where}: {value!r} is not a valid {cast.__name__}') from None


def _mapping(value: str, where: str) -> Dict[str, float]:
    out = {}
    for item in _split(value):
        key, sep, number = item.rpartition(':')
        if not sep or not key.strip():
            raise ConfigError(f'{where}: expected category:number, got {item!r}')
        out[key.strip()] = _number(number.strip(), float, where)
    return out


def _pair(value: str, where: str) -> Tuple[float, float]:
    parts = [_number(v, float, where) for v in _split(value)]
    if len(parts) == 1:
        return parts[0], parts[0]
    if len(parts) != 2:
        raise ConfigError(f'{where}: expected one or two probabilities, got {value!r}')
    return parts[0], parts[1]


def _boolean(section: configparser.SectionProxy, key: str, where: str) -> bool:
    try:
        return section.getboolean(key)
    except ValueError:
        raise ConfigError(f'{where}: {section[key]!r} is not a boolean') from None


def _check_keys(parser: configparser.ConfigParser, name: str, allowed_key: str) -> None:
    unknown = set(parser[name]) - _keys[allowed_key]
    if unknown:
        raise ConfigError(f'Unknown key(s) {sorted(unknown)} in [{name}]; allowed: {sorted(_keys[allowed_key])}')


def _axis(parser: configparser.ConfigParser, n: int) -> Optional[Tuple[str, tuple]]:
    grid = parser['grid']
    name = grid.get(f'axis{n}')
    if name is None:
        return None
    if f'values{n}' not in grid:
        raise ConfigError(f'[grid] axis{n} needs values{n}')
    where = f'[grid] values{n}'
    raw = _split(grid[f'values{n}'])
    if name in _float_axes:
        values = tuple(_number(v, float, where) for v in raw)
    elif name in _int_axes:
        values = tuple(_number(v, int, where) for v in raw)
    else:
        values = tuple(raw)
    if not values:
        raise ConfigError(f'{where} is empty')
    return name, values


def _generator(parser: configparser.ConfigParser, master_seed: int) -> Tuple[GeneratorSpec, bool]:
    gen = parser['generator']
    where = '[generator]'
    if 'node_count' not in gen:
        raise ConfigError('[generator] needs node_count')
    kind = gen.get('degree_kind', 'geometric')
    degree_kwargs: Dict[str, Any] = {'kind': kind}
    if 'mean_degree' in gen:
        degree_kwargs['mean'] = _number(gen['mean_degree'], float, where)
    if 'exponent' in gen:
        degree_kwargs['exponent'] = _number(gen['exponent'], float, where)
    if 'min_degree' in gen:
        degree_kwargs['min_degree'] = _number(gen['min_degree'], int, where)
    if 'cutoff' in gen:
        degree_kwargs['cutoff'] = _number(gen['cutoff'], int, where)
    if 'degree_sequence' in gen:
        degree_kwargs['sequence'] = tuple(_number(v, int, where) for v in _split(gen['degree_sequence']))

    attributes = []
    for section in parser.sections():
        if not section.startswith('attribute:'):
            continue
        _check_keys(parser, section, 'attribute')
        name = section.split(':', 1)[1].strip()
        sec = parser[section]
        if 'proportions' not in sec:
            raise ConfigError(f'[{section}] needs proportions')
        homophily = None
        if 'homophily' in sec:
            raw = sec['homophily']
            homophily = _mapping(raw, f'[{section}] homophily') if ':' in raw else _number(raw, float, f'[{section}]')
        attributes.append(AttributeSpec(name, _mapping(sec['proportions'], f'[{section}] proportions'), homophily))

    from_master = 'rng_seed' not in gen
    kwargs: Dict[str, Any] = {}
    if 'tolerance' in gen:
        kwargs['tolerance'] = _number(gen['tolerance'], float, where)
    if 'max_passes' in gen:
        kwargs['max_passes'] = _number(gen['max_passes'], int, where)
    spec = GeneratorSpec(node_count=_number(gen['node_count'], int, where),
                         degree_distribution=DegreeDistribution(**degree_kwargs),
                         attributes=attributes,
                         rng_seed=master_seed if from_master else _number(gen['rng_seed'], int, where),
                         **kwargs)
    return spec, from_master


def _transform(parser: configparser.ConfigParser, section: str) -> Tuple[str, Dict[str, Any]]:
    kind = section.split(':', 1)[1].strip()
    if kind not in transform_kinds:
        raise ConfigError(f'Unknown transform [{section}]; choose from {transform_kinds}')
    _check_keys(parser, section, f'transform:{kind}')
    sec = parser[section]
    where = f'[{section}]'
    kwargs: Dict[str, Any] = {}
    for key in sec:
        if key in ('attribute', 'boost_attribute', 'scheme'):
            kwargs[key] = sec[key].strip()
        elif key == 'symmetric':
            kwargs[key] = _boolean(sec, key, where)
        elif key == 'rng_seed':
            kwargs[key] = _number(sec[key], int, where)
        else:
            kwargs[key] = _number(sec[key], float, where)
    if kind == 'add_edges' and 'degree_increase' not in kwargs:
        raise ConfigError(f'{where} needs degree_increase')
    if kind == 'directed' and 'irreciprocal_fraction' not in kwargs:
        raise ConfigError(f'{where} needs irreciprocal_fraction')
    return kind, kwargs


def _sampling(parser: configparser.ConfigParser, master_seed: int) -> SamplingConfig:
    kwargs: Dict[str, Any] = {'rng_seed': master_seed}
    if parser.has_section('sampling'):
        _check_keys(parser, 'sampling', 'sampling')
        sec = parser['sampling']
        where = '[sampling]'
        names = {'coupons': 'coupons_per_participant', 'checkpoints': 'checkpoint_sizes'}
        for key in sec:
            target = names.get(key, key)
            if target in ('seed_count', 'coupons_per_participant', 'target_sample_size'):
                kwargs[target] = _number(sec[key], int, where)
            elif target == 'checkpoint_sizes':
                kwargs[target] = tuple(_number(v, int, where) for v in _split(sec[key]))
            elif target in ('ignore_prob', 'reject_prob'):
                kwargs[target] = _pair(sec[key], f'{where} {key}')
            elif target == 'directed':
                kwargs[target] = _boolean(sec, key, where)
            else:
                kwargs[target] = sec[key].strip()
    return SamplingConfig(**kwargs)


def load_config(path: str) -> ExperimentConfig:
    """Read an experiment configuration file

    Parameters
    ----------
    path : str
        INI file, relative graph paths are resolved against its directory

    Returns
    -------
    ExperimentConfig
        Validated configuration

    Raises
    ------
    ConfigError
        On a missing file, unknown sections or keys, or invalid values
    """
    parser = configparser.ConfigParser(interpolation=None, default_section='__none__',
                                       inline_comment_prefixes=('#', ';'))
    try:
        with open(path, encoding='utf-8') as f:
            parser.read_file(f)
    except OSError as err:
        raise ConfigError(f'Cannot read config {path}: {err}') from err
    except configparser.Error as err:
        raise ConfigError(f'Malformed config {path}: {err}') from err
    base = os.path.dirname(os.path.abspath(path))

    for section in parser.sections():
        head = section.split(':', 1)[0]
        if section in _keys and section != 'attribute':
            _check_keys(parser, section, section)
        elif ':' not in section or head not in ('attribute', 'transform'):
            raise ConfigError(f'Unknown section [{section}] in {path}')

    try:
        exp = parser['experiment'] if parser.has_section('experiment') else {}
        where = '[experiment]'
        master_seed = _number(exp.get('seed', '0'), int, where)
        sampling = _sampling(parser, master_seed)
        generator, from_master = None, False
        if parser.has_section('generator'):
            generator, from_master = _generator(parser, master_seed)
        elif any(s.startswith('attribute:') for s in parser.sections()):
            raise ConfigError('[attribute:*] sections need a [generator] section')
        graph_path = attr_path = None
        restrict = True
        if parser.has_section('graph'):
            g = parser['graph']
            if 'edges' not in g:
                raise ConfigError('[graph] needs edges')
            graph_path = os.path.join(base, g['edges'].strip())
            attr_path = os.path.join(base, g['attributes'].strip()) if 'attributes' in g else None
            if 'restrict_to_giant' in g:
                restrict = _boolean(g, 'restrict_to_giant', '[graph]')
        transforms = tuple(_transform(parser, s) for s in parser.sections() if s.startswith('transform:'))
        part = parser['partition'] if parser.has_section('partition') else {}
        grid = None
        if parser.has_section('grid'):
            axis1 = _axis(parser, 1)
            if axis1 is None:
                raise ConfigError('[grid] needs axis1')
            grid = (axis1, _axis(parser, 2))
        output_dir = exp.get('output_dir', '.').strip()
        return ExperimentConfig(
            sampling=sampling,
            generator=generator,
            graph_path=graph_path,
            attr_path=attr_path,
            restrict_to_giant=restrict,
            transforms=transforms,
            partition_attribute=part.get('attribute', None),
            partition_value=part.get('value', None),
            estimators=tuple(_split(exp.get('estimators', 'rds2'))),
            replications=_number(exp.get('replications', '1000'), int, where),
            grid=grid,
            output_dir=output_dir if os.path.isabs(output_dir) else os.path.join(base, output_dir),
            n_jobs=_number(exp.get('n_jobs', '1'), int, where),
            generator_seed_from_master=from_master,
        )
    except ConfigError:
        raise
    except PyRDSError as err:
        raise ConfigError(f'Invalid config {path}: {err}') from err
