"""
cylfpp - First-passage percolation on thin cylinders

Exact passage times T_n, t_n and a_n on cylinders [0,n] x G, block
decompositions, beta schedules for the renormalization argument, a
reproducible Monte Carlo harness, and statistical checks of the central
limit behaviour of the passage times.

Version: 1.0.0
"""

__version__ = "1.0.0"

from .graph import GraphSpec, build_box_cylinder, build_product_cylinder, graph_metrics
from .weights import WeightDistribution, derive_stream, sample_weights
from .passage import (
    cylinder_point_time,
    essential_edge_count,
    shortest_path,
    side_to_side_time,
    strip_point_time,
)
from .decomposition import alpha_threshold, beta_schedule, block_times, verify_schedule
from .montecarlo import ExperimentPlan, run_experiment, sweep
from .main import main

__all__ = [
    "GraphSpec",
    "build_box_cylinder",
    "build_product_cylinder",
    "graph_metrics",
    "WeightDistribution",
    "derive_stream",
    "sample_weights",
    "shortest_path",
    "side_to_side_time",
    "cylinder_point_time",
    "strip_point_time",
    "essential_edge_count",
    "block_times",
    "beta_schedule",
    "verify_schedule",
    "alpha_threshold",
    "ExperimentPlan",
    "run_experiment",
    "sweep",
    "main",
]
