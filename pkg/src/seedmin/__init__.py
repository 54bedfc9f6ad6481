"""Adaptive seed minimization on probabilistic influence graphs.

Given a directed graph with edge probabilities and an activation target,
pick seed nodes one round at a time: sample multi-root reverse-reachable
sets on the residual graph, select the node (or batch) with a coverage
certificate, observe the true cascade, and repeat until the target is met.
Exact brute-force counterparts for tiny instances live in ``seedmin.exact``.
"""

from seedmin.graph import ProbGraph, NodeMap, GraphFormatError, load_edge_list, induce_residual
from seedmin.diffusion import (
    Realization,
    CascadeResult,
    sample_realization,
    cascade,
    truncated_spread,
    observe_step,
)
from seedmin.sampler import RRSet, SampleSet, draw_root_count, generate_rr_set
from seedmin.selection import SelectionParams, RoundOutcome, compute_params, select_seed, select_batch
from seedmin.adaptive import ResidualState, RunReport, run_adaptive, run_vanilla, run_experiment

__version__ = "0.1.0"
