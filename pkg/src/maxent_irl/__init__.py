"""Maximum-entropy inverse reinforcement learning on finite MDPs.

The package recovers reward parameters from demonstrated trajectories by
maximizing the likelihood of a maximum-entropy trajectory distribution.
Exact inference comes in two equivalent routes — a per-length dynamic
program and a faster padded (absorbing-state) one — alongside classic
approximate baselines and a model-free importance-sampling estimator.
"""

from .baselines import (approx_irl_learn, enumerate_ensemble,
                        oracle_marginals, path_log_weights,
                        ziebart2008_marginals, ziebart2010_marginals)
from .envs import (make_gridworld, make_linear_chain, make_nchain,
                   make_random_mdp)
from .fileio import (load_features, load_marginals, load_mdp,
                     load_reward_params, load_trajectories, save_learn_result,
                     save_marginals, save_mdp, save_trajectories, write_csv)
from .exact import (MarginalSet, backward_messages_padded,
                    backward_messages_varlen, forward_messages, infer_padded,
                    infer_varlen, log_likelihood, log_partition,
                    loglik_gradient, marginals_padded, marginals_varlen,
                    model_expectations)
from .learning import (LearnResult, OptimizerConfig, importance_gradient,
                       importance_model_expectation, learn_exact_padded,
                       learn_exact_varlen, learn_importance,
                       sample_importance_trajectories)
from .mdp import (Adjacency, Dataset, Mdp, PaddedMdp, build_adjacency,
                  pad_dataset, pad_mdp, trajectory_log_prior,
                  trajectory_states, validate_trajectory)
from .policy import (MlPath, destination_posterior, filter_by_final_state,
                     ile, policy_value, sample_rollouts, value_iteration,
                     viterbi_ml_path)
from .rewards import (FeatureSet, PaddedRewardModel, RewardParams,
                      RewardTables, build_padded_reward, discount_weights,
                      empirical_expectations, pad_reward_tables,
                      reward_tables, traj_features, traj_reward)

__version__ = "0.1.0"

__all__ = [
    "Adjacency", "Dataset", "FeatureSet", "LearnResult", "MarginalSet",
    "Mdp", "MlPath", "OptimizerConfig", "PaddedMdp", "PaddedRewardModel",
    "RewardParams", "RewardTables", "approx_irl_learn",
    "backward_messages_padded", "backward_messages_varlen",
    "build_adjacency", "build_padded_reward", "destination_posterior",
    "discount_weights", "empirical_expectations", "enumerate_ensemble",
    "filter_by_final_state", "forward_messages", "ile",
    "importance_gradient", "importance_model_expectation", "infer_padded",
    "infer_varlen", "learn_exact_padded", "learn_exact_varlen",
    "learn_importance", "load_features", "load_marginals", "load_mdp",
    "load_reward_params", "load_trajectories",
    "log_likelihood", "log_partition", "loglik_gradient",
    "make_gridworld", "make_linear_chain", "make_nchain", "make_random_mdp",
    "marginals_padded", "marginals_varlen", "model_expectations",
    "oracle_marginals", "pad_dataset", "pad_mdp", "pad_reward_tables",
    "path_log_weights", "policy_value", "reward_tables",
    "sample_importance_trajectories",
    "sample_rollouts", "save_learn_result", "save_marginals", "save_mdp",
    "save_trajectories", "traj_features", "traj_reward",
    "trajectory_log_prior", "trajectory_states", "validate_trajectory",
    "value_iteration", "viterbi_ml_path", "write_csv",
    "ziebart2008_marginals", "ziebart2010_marginals",
]
