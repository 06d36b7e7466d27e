import argparse
import logging
import os
import sys
from typing import List, Optional

from pyrds.config import ExperimentConfig, load_config
from pyrds.estimators import stationary_distribution
from pyrds.exceptions import PyRDSError
from pyrds.experiments import compute_metrics, grid_experiment, run_replications
from pyrds.graph import AttributedGraph
from pyrds.io import load_graph, save_graph, write_sample, write_stationary
from pyrds.netgen import (add_edges_preserving_homophily, assign_edge_weights, make_directed_variant,
                          rewire_preserving_attributes)
from pyrds.properties import NetworkProperties
from pyrds.results import save_series, write_metrics
from pyrds.sampler import run_chain

logger = logging.getLogger(__name__)


def _config(args) -> ExperimentConfig:
    if args.config is None:
        raise PyRDSError(f'{args.command} needs --config')
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _graph(args) -> AttributedGraph:
    if getattr(args, 'edges', None) is not None:
        return load_graph(args.edges, args.attributes)
    return _config(args).build_graph()


def _output_dir(cfg: ExperimentConfig, args) -> str:
    out = args.out_dir if getattr(args, 'out_dir', None) else cfg.output_dir
    os.makedirs(out, exist_ok=True)
    return out


def cmd_generate(args) -> int:
    cfg = _config(args)
    if cfg.generator is None:
        raise PyRDSError('generate needs a [generator] section')
    graph = cfg.build_graph()
    out = _output_dir(cfg, args)
    save_graph(graph, os.path.join(out, 'graph.tsv'), os.path.join(out, 'attributes.tsv'))
    print(f'{graph!r} written to {out}')
    return 0


def cmd_transform(args) -> int:
    graph = load_graph(args.edges, args.attributes)
    seed = 0 if args.seed is None else args.seed
    if args.kind == 'add-edges':
        graph, stats = add_edges_preserving_homophily(graph, args.degree_increase, rng_seed=seed,
                                                      attribute=args.attribute, return_stats=True)
    elif args.kind == 'rewire':
        graph, stats = rewire_preserving_attributes(graph, rng_seed=seed, attribute=args.attribute,
                                                    min_retained=args.min_retained, return_stats=True)
    elif args.kind == 'weight':
        graph, stats = assign_edge_weights(graph, scheme=args.scheme, mu=args.mu, sigma=args.sigma,
                                           rng_seed=seed, symmetric=not args.asymmetric,
                                           in_group_boost=args.boost, boost_attribute=args.boost_attribute,
                                           return_stats=True)
    else:
        partition = None
        if args.partition_attribute is not None:
            partition = graph.partition(args.partition_attribute, args.partition_value)
        graph, stats = make_directed_variant(graph, args.fraction, attachment_bias=args.bias,
                                             partition=partition, rng_seed=seed, return_stats=True)
    save_graph(graph, args.out_edges, args.out_attributes)
    print(' '.join(f'{k}={v}' for k, v in stats.items()))
    return 0


def cmd_analyze(args) -> int:
    props = NetworkProperties(_graph(args))
    print(props.to_text())
    return 0


def cmd_stationary(args) -> int:
    graph = _graph(args)
    vector = stationary_distribution(graph, mode=args.mode, directed=args.directed,
                                     tolerance=args.tolerance, max_iters=args.max_iters)
    write_stationary(vector, args.out)
    print(f'stationary vector of {len(vector)} nodes, residual {vector.residual:.3e}, '
          f'{vector.iterations} iterations')
    return 0


def cmd_simulate(args) -> int:
    cfg = _config(args)
    graph = cfg.build_graph()
    sample = run_chain(graph, cfg.partition(graph), cfg.sampling)
    out = _output_dir(cfg, args)
    write_sample(sample, os.path.join(out, 'sample.tsv'))
    print(repr(sample))
    return 0


def cmd_experiment(args) -> int:
    cfg = _config(args)
    graph = cfg.build_graph()
    partition = cfg.partition(graph)
    stationary = cfg.stationary(graph)
    out = _output_dir(cfg, args)
    progress = not args.no_progress
    n_jobs = cfg.n_jobs if args.jobs is None else args.jobs
    meta = {'config_hash': cfg.config_hash(), 'master_seed': cfg.master_seed, 'partition': partition.label,
            'p_star': graph.true_proportion(partition), 'nodes': graph.n_nodes}
    if cfg.grid is not None:
        axis1, axis2 = cfg.grid
        table = grid_experiment(graph, partition, cfg.sampling, axis1, axis2, cfg.replications,
                                stationary=stationary, n_jobs=n_jobs, progress=progress)
        path = os.path.join(out, 'grid_metrics.csv')
    else:
        series = run_replications(graph, partition, cfg.sampling, cfg.replications,
                                  stationary=stationary, n_jobs=n_jobs, progress=progress)
        table = compute_metrics(series, graph.true_proportion(partition))
        path = os.path.join(out, 'metrics.csv')
        if args.save_series:
            save_series(series, os.path.join(out, 'series.asdf'))
    write_metrics(table, path, meta)
    print(table.summary().to_string(index=False))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='experiment configuration file')
    common.add_argument('--seed', type=int, help='override the master seed')
    common.add_argument('-v', '--verbose', action='count', default=0, help='-v for info, -vv for debug logging')

    source = argparse.ArgumentParser(add_help=False)
    source.add_argument('--edges', help='edge file, used instead of the network of --config')
    source.add_argument('--attributes', help='attribute file for --edges')

    parser = argparse.ArgumentParser(prog='pyrds', description='Respondent-driven sampling simulation lab')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('generate', parents=[common], help='generate a network from the [generator] section')
    p.add_argument('--out-dir', help='output directory, by default the configured one')
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser('transform', parents=[common], help='transform a network file')
    p.add_argument('kind', choices=['add-edges', 'rewire', 'weight', 'directed-variant'])
    p.add_argument('--edges', required=True)
    p.add_argument('--attributes')
    p.add_argument('--out-edges', required=True)
    p.add_argument('--out-attributes')
    p.add_argument('--degree-increase', type=float, default=20.0)
    p.add_argument('--attribute', help='attribute whose mixing (add-edges) or values (rewire) are kept')
    p.add_argument('--min-retained', type=float, default=0.95)
    p.add_argument('--scheme', choices=['lognormal', 'max', 'min'], default='lognormal')
    p.add_argument('--mu', type=float, default=2.0)
    p.add_argument('--sigma', type=float, default=1.0)
    p.add_argument('--asymmetric', action='store_true', help='draw one lognormal weight per direction')
    p.add_argument('--boost', type=float, default=1.0, help='weight factor of in-group edges')
    p.add_argument('--boost-attribute')
    p.add_argument('--fraction', type=float, default=0.5, help='irreciprocal fraction of the directed variant')
    p.add_argument('--bias', type=float, default=0.0, help='attachment bias towards the partition')
    p.add_argument('--partition-attribute')
    p.add_argument('--partition-value')
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser('analyze', parents=[common, source], help='proportions, homophily, degrees and components')
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser('stationary', parents=[common, source], help='stationary vector of the recruitment walk')
    p.add_argument('--mode', choices=['uniform', 'weighted', 'weight-proportional'], default='uniform')
    p.add_argument('--directed', action='store_true')
    p.add_argument('--tolerance', type=float, default=1e-12)
    p.add_argument('--max-iters', type=int, default=100_000)
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_stationary)

    p = sub.add_parser('simulate', parents=[common], help='run one recruitment chain')
    p.add_argument('--out-dir')
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser('experiment', parents=[common], help='replications or grids, written as metrics files')
    p.add_argument('--out-dir')
    p.add_argument('--jobs', type=int, help='worker processes, by default the configured n_jobs')
    p.add_argument('--save-series', action='store_true', help='archive raw estimates to series.asdf')
    p.add_argument('--no-progress', action='store_true')
    p.set_defaults(func=cmd_experiment)
    return parser


def run_cli(argv: Optional[List[str]] = None) -> int:
    """Run the command line and return its exit status: 0 on success, 1 on a run failure,
    2 on a usage error"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')
    logging.getLogger('pyrds').setLevel(level)
    try:
        return args.func(args)
    except (PyRDSError, OSError) as err:
        print(f'pyrds: error: {err}', file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())
