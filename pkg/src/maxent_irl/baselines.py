"""Reference implementations: brute-force enumeration and two classic
approximations.

The enumeration oracle materializes the entire trajectory set and normalizes
explicitly — exponential, but an independent ground truth for everything the
message-passing route computes.

The two approximate algorithms transcribe, quirks included, the
expected-visitation recursions that earlier work used in place of exact
marginals.  Both share a notable failure mode: on any MDP with a uniform
start distribution and uniform transitions their visitation tables equal
``1/S`` for every reward function, so the gradient carries no reward signal
at all.  They exist here as comparison baselines.
"""

import math

import numpy as np
from scipy.special import logsumexp

from .exact import MarginalSet, forward_messages, log_partition
from .learning import LearnResult, OptimizerConfig
from .mdp import trajectory_log_prior
from .rewards import (NEG_INF, RewardParams, discount_weights,
                      empirical_expectations, reward_tables,
                      traj_reward_from_tables)


def enumerate_ensemble(mdp, adjacency, horizon, max_paths=1_000_000):
    """Every feasible trajectory of length 1..horizon, in DFS order.

    A trajectory may stop at any state; interior states must allow
    continuation, so terminal states (empty child sets) only ever appear
    last.

    Args:
        mdp: `Mdp`.
        adjacency: `Adjacency` of ``mdp``.
        horizon: Maximum length.
        max_paths: Guard against combinatorial blow-up.

    Returns:
        List of trajectories.

    Raises:
        RuntimeError: when the trajectory count exceeds ``max_paths``.
    """
    out = []

    def visit(states, actions):
        if len(out) >= max_paths:
            raise RuntimeError(
                f"trajectory set exceeds the {max_paths}-path budget"
            )
        out.append(tuple(zip(states[:-1], actions))
                   + ((states[-1], None),))
        if len(states) == horizon:
            return
        for a, s2 in adjacency.children[states[-1]]:
            visit(states + (s2,), actions + (a,))

    for s0 in np.nonzero(mdp.start_dist > 0)[0]:
        visit((int(s0),), ())
    return out


def path_log_weights(mdp, reward, paths):
    """Unnormalized log model weights ``log q(tau) + R(tau)`` of paths."""
    return np.array([
        trajectory_log_prior(mdp, p)
        + traj_reward_from_tables(p, reward, mdp.discount)
        for p in paths
    ])


def oracle_marginals(mdp, adjacency, reward, horizon, max_paths=1_000_000):
    """Brute-force `MarginalSet` by explicit normalization over all paths."""
    paths = enumerate_ensemble(mdp, adjacency, horizon, max_paths)
    log_w = path_log_weights(mdp, reward, paths)
    log_z = float(logsumexp(log_w))
    prob = np.exp(log_w - log_z)
    n, m = mdp.num_states, mdp.num_actions
    p_s = np.zeros((horizon, n))
    p_sa = np.zeros((max(horizon - 1, 0), n, m))
    p_sas = np.zeros((max(horizon - 1, 0), n, m, n))
    for p, path in zip(prob, paths):
        for t, (s, a) in enumerate(path):
            p_s[t, s] += p
            if a is not None:
                p_sa[t, s, a] += p
                p_sas[t, s, a, path[t + 1][0]] += p
    return MarginalSet(log_z=log_z, p_s=p_s, p_sa=p_sa, p_sas=p_sas)


# ---------------------------------------------------------------------------
# Approximate expected-visitation algorithms


def _require_state_reward(reward):
    if np.any(reward.r_sa != 0.0) or np.any(reward.r_sas != 0.0):
        raise ValueError(
            "the approximate algorithms only support state rewards"
        )


def _soft_policy(mdp, r_s, horizon, variant):
    """Backward soft-value sweeps yielding a stochastic policy.

    The classic recursions: ``Z_a(s,a) = sum_s' T e^{R(s)} Z_s(s')`` and
    ``Z_s = sum_a Z_a``, run for ``horizon`` sweeps.  The 2008 flavor starts
    from ``Z_s = 1`` everywhere; the 2010 flavor starts from the terminal
    indicator and re-adds it after every sweep.  Computed in log space;
    states the sweeps never reach fall back to a uniform policy.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    log_t = mdp.log_transitions
    terminal_log = np.where(mdp.terminal_mask, 0.0, NEG_INF)
    log_zs = np.zeros(mdp.num_states) if variant == "2008" else terminal_log.copy()
    for _ in range(horizon):
        w = log_t + r_s[:, None, None] + log_zs[None, None, :]
        log_za = logsumexp(w, axis=2)
        log_zs = logsumexp(log_za, axis=1)
        if variant == "2010":
            log_zs = np.logaddexp(log_zs, terminal_log)
    policy = np.full((mdp.num_states, mdp.num_actions),
                     1.0 / mdp.num_actions)
    reached = log_zs > NEG_INF
    policy[reached] = np.exp(log_za[reached] - log_zs[reached, None])
    return policy


def ziebart2008_marginals(mdp, reward, horizon):
    """Expected state visitation table of the 2008-style recursion.

    The forward update is transcribed verbatim, quirk included: the previous
    visitation is read at the *successor* index while the policy and
    transition refer to the current state, i.e.
    ``D[s, t+1] = sum_a sum_s' D[s', t] p(a|s) T(s'|s, a)``.

    Args:
        mdp: `Mdp`.
        reward: `RewardTables`; must carry state rewards only.
        horizon: Number of columns.

    Returns:
        ``(S, horizon)`` visitation table; column 0 is the start distribution.
    """
    _require_state_reward(reward)
    policy = _soft_policy(mdp, reward.r_s, horizon, "2008")
    d = np.zeros((mdp.num_states, horizon))
    d[:, 0] = mdp.start_dist
    for t in range(1, horizon):
        inner = np.einsum("saq,q->sa", mdp.transitions, d[:, t - 1])
        d[:, t] = np.einsum("sa,sa->s", policy, inner)
    return d


def ziebart2010_marginals(mdp, reward, horizon):
    """Expected state visitation table of the 2010-style recursion.

    Same backward pass family as the 2008 variant (terminal-seeded), with the
    usual predecessor push-forward
    ``D[s', t+1] = sum_s sum_a D[s, t] p(a|s) T(s'|s, a)``.

    Args / Returns: as `ziebart2008_marginals`.
    """
    _require_state_reward(reward)
    policy = _soft_policy(mdp, reward.r_s, horizon, "2010")
    d = np.zeros((mdp.num_states, horizon))
    d[:, 0] = mdp.start_dist
    for t in range(1, horizon):
        d[:, t] = np.einsum("s,sa,saq->q", d[:, t - 1], policy,
                            mdp.transitions)
    return d


_VISITATION = {"2008": ziebart2008_marginals, "2010": ziebart2010_marginals}


def approx_irl_learn(mdp, feats, data, variant="2008", config=None,
                     horizon=None):
    """Run the optimizer with an approximate-visitation gradient.

    Plain ``step_size / sqrt(iteration)`` ascent on a gradient that
    substitutes the variant's expected-visitation feature counts for the
    exact marginals — the historical setup this reproduces.  No line search:
    the surrogate gradient is not the derivative of any tracked objective,
    so a sufficient-decrease test against the true log-likelihood would veto
    every step and freeze the parameters at zero.  The true log-likelihood
    is still evaluated alongside for the trace.

    Args:
        mdp: `Mdp`.
        feats: State-only `FeatureSet` (the variants support nothing else).
        data: `Dataset`.
        variant: ``"2008"`` or ``"2010"``.
        config: `OptimizerConfig`.

    Returns:
        A `LearnResult` (typically with ``converged=False``; that is the
        point of the comparison).
    """
    if variant not in _VISITATION:
        raise ValueError(f"unknown variant {variant!r}")
    d_s, d_sa, d_sas = feats.dims
    if d_sa or d_sas:
        raise ValueError(
            "the approximate algorithms only support state features"
        )
    config = config or OptimizerConfig()
    horizon = data.max_len if horizon is None else int(horizon)
    if horizon < data.max_len:
        raise ValueError("horizon shorter than the longest demonstration")
    gamma = mdp.discount
    emp_vec = np.concatenate(empirical_expectations(data, feats, gamma))
    log_prior = sum(trajectory_log_prior(mdp, t) for t in data) / len(data)
    w_t = discount_weights(gamma, horizon)

    def evaluate(x):
        params = RewardParams.from_vector(x, feats)
        tables = reward_tables(feats, params)
        log_z = log_partition(forward_messages(mdp, tables, horizon))
        visits = _VISITATION[variant](mdp, tables, horizon)
        model = (visits @ w_t) @ feats.phi_s
        ll = float(x @ emp_vec + log_prior - log_z)
        return ll, emp_vec - model, log_z

    x = RewardParams.zeros(feats).to_vector()
    ll, grad, log_z = evaluate(x)
    ginf = float(np.max(np.abs(grad))) if grad.size else 0.0
    trace = [(ll, ginf)]
    iters = 0
    while iters < config.max_iters and ginf >= config.grad_tol:
        iters += 1
        x = x + config.step_size / math.sqrt(iters) * grad
        if config.bounds is not None:
            x = np.clip(x, *config.bounds)
        ll, grad, log_z = evaluate(x)
        ginf = float(np.max(np.abs(grad))) if grad.size else 0.0
        trace.append((ll, ginf))
    return LearnResult(
        params=RewardParams.from_vector(x, feats),
        log_z=log_z, log_likelihood=ll,
        grad_inf_norm=ginf,
        trace=tuple(trace), converged=ginf < config.grad_tol,
        iterations=iters,
        method=f"ziebart{variant}", horizon=horizon,
    )
