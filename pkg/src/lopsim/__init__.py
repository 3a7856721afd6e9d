"""Distributed local search for locally optimal labeling problems, simulated."""

from .algorithm import AlgorithmConfig, RunResult, desk_scale_parameters, literal_parameters, run, simulated_round_cost
from .baseline import FixTrace, cascade_path, sequential_fix
from .errors import LopError
from .graph import LabeledGraph, build_graph, generate, load_graph, save_graph
from .improving import ImprovingSet, best_relabeling, find_improving_set, improvement, maximal_sequence
from .lop import (
    Labeling,
    LopProblem,
    Relabel,
    defective_coloring,
    locally_optimal_cut,
    total_potential,
    verify_solution,
)
from .mpx import MpxClustering, assign_clusters, ball_containment_rate, decomposition_quality, draw_shifts

__version__ = "0.1.0"
