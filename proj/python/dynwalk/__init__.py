"""Random walk on a dynamical random-cluster environment on random regular graphs."""

from ._core import (
    DynwalkError,
    Graph,
    complete_graph_k4,
    cycle_counts,
    derive_constants,
    exact_rc_distribution,
    generate_regular,
    kappa,
    load_graph,
    omega,
    open_prob_cut,
    open_prob_noncut,
    run_experiment,
    save_graph,
    simulate_counters,
    tilde_omega,
    verify,
)

__all__ = [
    "DynwalkError",
    "Graph",
    "complete_graph_k4",
    "cycle_counts",
    "derive_constants",
    "exact_rc_distribution",
    "generate_regular",
    "kappa",
    "load_graph",
    "omega",
    "open_prob_cut",
    "open_prob_noncut",
    "run_experiment",
    "save_graph",
    "simulate_counters",
    "tilde_omega",
    "verify",
]
