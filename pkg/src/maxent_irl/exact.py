"""Exact inference over the finite-horizon trajectory distribution.

The model weights every feasible trajectory ``tau`` of length 1..L by
``q(tau) * exp(R(tau))`` where ``q`` is the dynamics prior (start probability
times transition probabilities) and ``R`` the discounted linear reward.
Everything here runs in natural-log space with shift-by-max log-sum-exp;
``-inf`` is the log of a structural zero, and exponentiating an all ``-inf``
reduction correctly yields an empty (zero) sum.

Two equivalent routes compute the per-time-step marginals:

* the variable-length route keeps one backward table per total trajectory
  length (quadratic in L);
* the padded route runs a single backward pass over the absorbing-state
  extension of the MDP (linear in L).

Both consume the same forward messages, which are computed on the original
MDP in either case.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .mdp import trajectory_log_prior
from .rewards import (NEG_INF, discount_weights, empirical_expectations,
                      traj_reward_from_tables)


def forward_messages(mdp, reward, horizon):
    """Forward (prefix) messages.

    ``alpha[l][s]`` aggregates every length-``l+1`` prefix ending at ``s``:
    start probability, transition probabilities, and all rewards collected up
    to and including the arrival reward of ``s``.

    Args:
        mdp: `Mdp` (the original one, also when running the padded route).
        reward: `RewardTables`.
        horizon: Maximum trajectory length ``L >= 1``.

    Returns:
        ``(L, S)`` array of log messages.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    gamma = mdp.discount
    log_t = mdp.log_transitions
    log_alpha = np.full((horizon, mdp.num_states), NEG_INF)
    with np.errstate(divide="ignore"):
        log_alpha[0] = np.log(mdp.start_dist) + reward.r_s
    for l in range(1, horizon):
        g = gamma ** (l - 1)
        w = (log_alpha[l - 1][:, None, None] + log_t
             + g * (reward.r_sa[:, :, None] + reward.r_sas))
        log_alpha[l] = logsumexp(w, axis=(0, 1)) + gamma ** l * reward.r_s
    return log_alpha


def log_partition(log_alpha):
    """Log normalizer: total weight of trajectories of every length 1..L."""
    return float(logsumexp(log_alpha))


def backward_messages_varlen(mdp, reward, horizon):
    """Backward (suffix) messages, one table per total trajectory length.

    ``beta[l-1][t-1][s]`` aggregates every suffix of length ``t`` that starts
    at ``s`` inside a trajectory of total length ``l`` (so the suffix occupies
    time steps ``l-t+1 .. l`` and its rewards are discounted accordingly).
    Entries with ``t > l`` stay ``-inf``.  Terminal states have no suffixes of
    length > 1.

    Returns:
        ``(L, L, S)`` array of log messages.
    """
    gamma = mdp.discount
    log_t = mdp.log_transitions
    n = mdp.num_states
    log_beta = np.full((horizon, horizon, n), NEG_INF)
    for l in range(1, horizon + 1):
        log_beta[l - 1, 0] = gamma ** (l - 1) * reward.r_s
    for l in range(2, horizon + 1):
        for t in range(1, l):
            g = gamma ** (l - t - 1)
            w = (log_t
                 + g * (reward.r_s[:, None, None] + reward.r_sa[:, :, None]
                        + reward.r_sas)
                 + log_beta[l - 1, t - 1][None, None, :])
            log_beta[l - 1, t] = logsumexp(w, axis=(1, 2))
    return log_beta


def backward_messages_padded(padded_mdp, padded_reward, horizon):
    """Single backward pass over the padded MDP.

    ``beta[t-1][s]`` aggregates every padded suffix of length ``t`` starting
    at ``s`` (time step ``L-t+1``).  Because padded trajectories all have
    length exactly ``L``, one table replaces the per-length family: a real
    trajectory that stops early simply continues into the auxiliary state at
    zero reward.  The auxiliary state's entry is exactly 1 (log 0) at every
    length.

    Args:
        padded_mdp: `PaddedMdp`.
        padded_reward: `PaddedRewardModel`.
        horizon: Padded trajectory length ``L``.

    Returns:
        ``(L, S+1)`` array of log messages.
    """
    mdp = padded_mdp.padded
    gamma = mdp.discount
    log_t = mdp.log_transitions
    log_beta = np.full((horizon, mdp.num_states), NEG_INF)
    log_beta[0] = gamma ** (horizon - 1) * padded_reward.r_s
    with np.errstate(invalid="ignore"):
        body = (padded_reward.r_s[:, None, None]
                + padded_reward.r_sa[:, :, None] + padded_reward.r_sas)
    for t in range(1, horizon):
        g = gamma ** (horizon - t - 1)
        w = log_t + g * body + log_beta[t - 1][None, None, :]
        log_beta[t] = logsumexp(w, axis=(1, 2))
    return log_beta


@dataclass(frozen=True, eq=False)
class MarginalSet:
    """Per-time-step trajectory marginals.

    ``p_s[t-1][s]`` is the probability that a trajectory has length >= t and
    visits ``s`` at step ``t``; the state-action and transition variants
    additionally require the trajectory to continue (length >= t+1).  Hence
    ``p_s[0]`` sums to one, later rows sum to the survival probability, and
    summing ``p_sa`` over actions leaves the deficit equal to the probability
    of stopping at exactly ``(t, s)``.

    Attributes:
        log_z: Log partition value used for normalization.
        p_s: ``(L, S)``.
        p_sa: ``(L-1, S, A)``.
        p_sas: ``(L-1, S, A, S)``.
    """

    log_z: float
    p_s: np.ndarray
    p_sa: np.ndarray
    p_sas: np.ndarray


def marginals_varlen(log_alpha, log_beta, mdp, reward, log_z):
    """Combine variable-length messages into a `MarginalSet`.

    At time ``t`` a trajectory either stops at ``s`` (weight 1) or continues
    through some ``(a, s')`` into a suffix of any remaining length; the
    suffix aggregate sums ``beta`` tables over all total lengths > t.
    """
    horizon, n = log_alpha.shape
    m = mdp.num_actions
    gamma = mdp.discount
    log_t = mdp.log_transitions

    log_p_s = np.full((horizon, n), NEG_INF)
    log_p_sa = np.full((horizon - 1, n, m), NEG_INF)
    log_p_sas = np.full((horizon - 1, n, m, n), NEG_INF)
    log_p_s[horizon - 1] = log_alpha[horizon - 1] - log_z

    for t in range(1, horizon):
        # all suffixes starting at time t+1: beta_{l, l-t} for l = t+1 .. L
        tails = np.stack([log_beta[l - 1, l - t - 1]
                          for l in range(t + 1, horizon + 1)])
        log_tail = logsumexp(tails, axis=0)
        g = gamma ** (t - 1)
        w = (log_t + g * (reward.r_sa[:, :, None] + reward.r_sas)
             + log_tail[None, None, :])
        log_p_sas[t - 1] = log_alpha[t - 1][:, None, None] + w - log_z
        log_p_sa[t - 1] = (log_alpha[t - 1][:, None]
                           + logsumexp(w, axis=2) - log_z)
        stop_or_go = np.logaddexp(0.0, logsumexp(w, axis=(1, 2)))
        log_p_s[t - 1] = log_alpha[t - 1] + stop_or_go - log_z

    return MarginalSet(log_z=log_z, p_s=np.exp(log_p_s),
                       p_sa=np.exp(log_p_sa), p_sas=np.exp(log_p_sas))


def marginals_padded(log_alpha, log_beta, padded_mdp, padded_reward, log_z):
    """Combine forward messages with padded backward messages.

    The auxiliary child of each state contributes exactly the stop weight the
    variable-length route adds by hand, so no explicit stop term appears.
    Marginals are reported over the original states and actions only.
    """
    horizon, n = log_alpha.shape
    m = padded_mdp.base.num_actions
    gamma = padded_mdp.padded.discount
    log_t = padded_mdp.padded.log_transitions[:n]  # rows of original states

    log_p_s = np.full((horizon, n), NEG_INF)
    log_p_sa = np.full((horizon - 1, n, m), NEG_INF)
    log_p_sas = np.full((horizon - 1, n, m, n), NEG_INF)
    log_p_s[horizon - 1] = log_alpha[horizon - 1] - log_z

    body = padded_reward.r_sa[:n, :, None] + padded_reward.r_sas[:n]
    for t in range(1, horizon):
        g = gamma ** (t - 1)
        w = log_t + g * body + log_beta[horizon - t - 1][None, None, :]
        log_p_s[t - 1] = log_alpha[t - 1] + logsumexp(w, axis=(1, 2)) - log_z
        live = w[:, :m, :n]  # original actions and successors only
        log_p_sas[t - 1] = log_alpha[t - 1][:, None, None] + live - log_z
        log_p_sa[t - 1] = (log_alpha[t - 1][:, None]
                           + logsumexp(live, axis=2) - log_z)

    return MarginalSet(log_z=log_z, p_s=np.exp(log_p_s),
                       p_sa=np.exp(log_p_sa), p_sas=np.exp(log_p_sas))


# ---------------------------------------------------------------------------
# Likelihood and gradient


def log_likelihood(data, mdp, reward, log_z):
    """Average log-probability the model assigns to the demonstrations.

    Raises:
        ValueError: if any demonstration is infeasible under the dynamics
            (zero start probability or a zero-probability transition).
    """
    total = 0.0
    for traj in data:
        log_q = trajectory_log_prior(mdp, traj)
        if log_q == NEG_INF:
            raise ValueError(
                f"trajectory starting at state {traj[0][0]} has zero prior "
                "probability"
            )
        total += traj_reward_from_tables(traj, reward, mdp.discount) + log_q
    return total / len(data) - log_z


def model_expectations(marginals, feats, gamma):
    """Expected discounted feature sums under the model's marginals."""
    horizon = marginals.p_s.shape[0]
    w = discount_weights(gamma, horizon)
    occ_s = w @ marginals.p_s
    occ_sa = np.einsum("t,tsa->sa", w[:horizon - 1], marginals.p_sa)
    occ_sas = np.einsum("t,tsap->sap", w[:horizon - 1], marginals.p_sas)
    return (
        occ_s @ feats.phi_s,
        np.einsum("sa,sad->d", occ_sa, feats.phi_sa),
        np.einsum("sap,sapd->d", occ_sas, feats.phi_sas),
    )


def loglik_gradient(data, marginals, feats, gamma):
    """Ascent gradient of the average log-likelihood.

    Per block this is the empirical discounted feature expectation minus the
    model's, so it vanishes exactly at the feature-matching optimum.

    Returns:
        Tuple ``(g_s, g_sa, g_sas)`` of gradient blocks.
    """
    emp = empirical_expectations(data, feats, gamma)
    mod = model_expectations(marginals, feats, gamma)
    return tuple(e - m for e, m in zip(emp, mod))


# ---------------------------------------------------------------------------
# Convenience pipelines


def infer_varlen(mdp, reward, horizon):
    """Run the full variable-length route; returns a `MarginalSet`."""
    log_alpha = forward_messages(mdp, reward, horizon)
    log_beta = backward_messages_varlen(mdp, reward, horizon)
    log_z = log_partition(log_alpha)
    return marginals_varlen(log_alpha, log_beta, mdp, reward, log_z)


def infer_padded(padded_mdp, reward, padded_reward, horizon):
    """Run the full padded route; returns a `MarginalSet` over original
    states/actions."""
    log_alpha = forward_messages(padded_mdp.base, reward, horizon)
    log_beta = backward_messages_padded(padded_mdp, padded_reward, horizon)
    log_z = log_partition(log_alpha)
    return marginals_padded(log_alpha, log_beta, padded_mdp, padded_reward,
                            log_z)
