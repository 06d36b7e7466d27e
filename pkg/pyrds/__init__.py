from .graph import AttributedGraph, NodePartition, undirected_graph
from .netgen import (AttributeSpec, DegreeDistribution, GeneratorSpec, add_edges_preserving_homophily,
                     assign_edge_weights, generate, make_directed_variant, rewire_preserving_attributes)
from .sampler import RecruitmentSample, SamplingConfig, run_chain, select_seeds
from .estimators import (StationaryVector, eig_estimate, homophily_index, rds2_estimate,
                         stationary_distribution, transition_matrix)
from .properties import NetworkProperties
from .experiments import compute_metrics, grid_experiment, run_replications
from .results import EstimateSeries, MetricsTable, read_metrics, write_metrics
from .io import load_graph, save_graph
from .config import ExperimentConfig, load_config
