"""Iterative dual-RL pipeline bindings.

Thin wrapper over the compiled extension: f-divergence conjugates, gridworld
dataset generation, the filtering/weighted-BC pipeline, and exact tabular
oracles for verification.
"""

from ._idrl import (
    check_monotonicity,
    dataset_info,
    default_config_json,
    eval_policy_file,
    exact_regularized_solution,
    exact_visitation,
    f_p_star,
    f_p_star_prime,
    f_prime,
    f_prime_inv,
    f_value,
    gen_dataset,
    mix_files,
    full_scale_config_json,
    run_pipeline,
)

__all__ = [
    "check_monotonicity",
    "dataset_info",
    "default_config_json",
    "eval_policy_file",
    "exact_regularized_solution",
    "exact_visitation",
    "f_p_star",
    "f_p_star_prime",
    "f_prime",
    "f_prime_inv",
    "f_value",
    "gen_dataset",
    "mix_files",
    "full_scale_config_json",
    "run_pipeline",
]
