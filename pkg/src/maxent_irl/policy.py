"""Policy computation and evaluation utilities.

Value conventions match the trajectory reward: visiting state ``s`` at step
``t`` (1-based) earns ``gamma**(t-1) * r_s(s)``, taking an action earns the
state-action and transition rewards at the same discount, and an episode ends
upon *arrival* at a terminal state (which still collects its state reward).
A state with no valid action behaves like a terminal state.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .mdp import Dataset, validate_trajectory
from .rewards import NEG_INF

END = -1  # policy entry for states where the episode ends


def _expected_step_reward(mdp, reward):
    """rho[s, a] = r_sa + E_{s'}[r_sas]; -inf on invalid actions."""
    rho = reward.r_sa + np.einsum("saq,saq->sa", mdp.transitions, reward.r_sas)
    return np.where(mdp.valid_sa, rho, NEG_INF)


def _halting_mask(mdp):
    """States at which an episode must end (terminal or no valid action)."""
    return mdp.terminal_mask | ~mdp.valid_sa.any(axis=1)


def value_iteration(mdp, reward, tol=1e-10, max_sweeps=200_000, horizon=None):
    """Bellman-optimality sweeps until the value change drops below ``tol``.

    Args:
        mdp: `Mdp`.
        reward: `RewardTables`.
        tol: Sweep-to-sweep infinity-norm tolerance (infinite-horizon mode).
        max_sweeps: Safety cap; exceeded means the values diverge (e.g.
            ``gamma == 1`` with positive-reward cycles).
        horizon: When given, run exactly ``horizon - 1`` backups — the value
            of acting optimally for at most ``horizon`` states — instead of
            iterating to a fixed point.  Always terminates, which matters for
            learned rewards that make endless accumulation optimal.

    Returns:
        Tuple ``(values, policy)``: ``values`` is the optimal state value
        vector; ``policy[s]`` is the greedy action (ties broken by the lowest
        action index) or ``END`` where episodes end.
    """
    halt = _halting_mask(mdp)
    rho = _expected_step_reward(mdp, reward)
    values = np.where(halt, reward.r_s, 0.0)
    if horizon is not None:
        if horizon < 1:
            raise ValueError("horizon must be at least 1")
        values = reward.r_s.copy()  # one state left: arrive, collect, stop
        for _ in range(horizon - 1):
            q = rho + mdp.discount * (mdp.transitions @ values)
            values = np.where(halt, reward.r_s, reward.r_s + q.max(axis=1))
    else:
        for _ in range(max_sweeps):
            q = rho + mdp.discount * (mdp.transitions @ values)
            new = np.where(halt, reward.r_s, reward.r_s + q.max(axis=1))
            if np.max(np.abs(new - values)) < tol:
                values = new
                break
            values = new
        else:
            raise RuntimeError(
                f"value iteration did not converge within {max_sweeps} sweeps"
            )
    q = rho + mdp.discount * (mdp.transitions @ values)
    policy = np.where(halt, END, q.argmax(axis=1))
    return values, policy


def policy_value(mdp, reward, policy, return_policy_matrix=False,
                 horizon=None):
    """Evaluate a deterministic policy by solving the linear Bellman system.

    Args:
        mdp: `Mdp`.
        reward: `RewardTables` (typically the ground-truth reward).
        policy: Integer vector; entries may be ``END`` for halting states.
        horizon: When given, evaluate the policy over at most ``horizon``
            states by backward induction instead of solving the fixed point.

    Returns:
        State value vector of the policy.

    Raises:
        ValueError: if the policy picks an invalid action, or the linear
            system is singular (an improper policy under ``gamma == 1``).
    """
    n = mdp.num_states
    halt = _halting_mask(mdp)
    rho = _expected_step_reward(mdp, reward)
    p_pi = np.zeros((n, n))
    r_pi = reward.r_s.copy()
    for s in range(n):
        a = int(policy[s])
        if halt[s] or a == END:
            continue
        if not mdp.valid_sa[s, a]:
            raise ValueError(f"policy picks invalid action {a} at state {s}")
        p_pi[s] = mdp.transitions[s, a]
        r_pi[s] += rho[s, a]
    if horizon is not None:
        if horizon < 1:
            raise ValueError("horizon must be at least 1")
        values = reward.r_s.copy()
        for _ in range(horizon - 1):
            cont = r_pi + mdp.discount * (p_pi @ values)
            values = np.where(halt, reward.r_s, cont)
    else:
        system = np.eye(n) - mdp.discount * p_pi
        try:
            values = np.linalg.solve(system, r_pi)
        except np.linalg.LinAlgError as exc:
            raise ValueError(
                "singular policy-evaluation system (improper policy with "
                "gamma == 1?)"
            ) from exc
    if return_policy_matrix:
        return values, p_pi
    return values


def ile(mdp, reward_true, reward_learned, horizon=None):
    """Inverse-learning error: L1 gap between the true-reward values of the
    optimal policy and of the policy that is optimal for the learned reward.

    Both policies are evaluated under ``reward_true`` with the same
    procedure, so a learned reward whose greedy policy matches the optimal
    one scores exactly zero.  Pass ``horizon`` to plan and evaluate over at
    most that many states — learned rewards can make endless accumulation
    look optimal, in which case the infinite-horizon values do not exist.
    """
    _, pi_star = value_iteration(mdp, reward_true, horizon=horizon)
    _, pi_learned = value_iteration(mdp, reward_learned, horizon=horizon)
    v_star = policy_value(mdp, reward_true, pi_star, horizon=horizon)
    v_learned = policy_value(mdp, reward_true, pi_learned, horizon=horizon)
    return float(np.abs(v_star - v_learned).sum())


# ---------------------------------------------------------------------------
# Rollouts


def sample_rollouts(mdp, policy, n, max_len, seed):
    """Sample ``n`` episodes following a policy.

    Episodes stop on arrival at a halting state or after ``max_len`` states.
    Each trajectory draws from its own seeded substream, so results are
    reproducible regardless of sampling order.

    Args:
        mdp: `Mdp`.
        policy: Either an integer vector (deterministic) or an ``(S, A)``
            matrix of action probabilities.
        n: Number of trajectories.
        max_len: Maximum number of states per trajectory.
        seed: Root seed.

    Returns:
        A `Dataset`.
    """
    policy = np.asarray(policy)
    halt = _halting_mask(mdp)
    streams = [np.random.default_rng(s)
               for s in np.random.SeedSequence(seed).spawn(n)]
    trajectories = []
    for rng in streams:
        s = int(rng.choice(mdp.num_states, p=mdp.start_dist))
        traj = []
        while True:
            if halt[s] or len(traj) + 1 == max_len:
                traj.append((s, None))
                break
            if policy.ndim == 1:
                a = int(policy[s])
            else:
                a = int(rng.choice(mdp.num_actions, p=policy[s]))
            traj.append((s, a))
            s = int(rng.choice(mdp.num_states, p=mdp.transitions[s, a]))
        trajectories.append(tuple(traj))
    return Dataset.from_trajectories(trajectories)


def filter_by_final_state(data, states):
    """Keep only trajectories ending in one of ``states`` (e.g. successes)."""
    keep = tuple(t for t in data if t[-1][0] in set(states))
    if not keep:
        raise ValueError("no trajectory ends in the requested states")
    return Dataset.from_trajectories(keep)


# ---------------------------------------------------------------------------
# Maximum-likelihood path


@dataclass(frozen=True, eq=False)
class MlPath:
    """Result of `viterbi_ml_path`: the path and its log objective."""

    trajectory: tuple
    log_weight: float


def viterbi_ml_path(mdp, reward, horizon, start_dist=None, end_dist=None):
    """Most likely trajectory of free length <= ``horizon``.

    Maximizes ``log f(s_1) + sum log T + R(tau) + log g(s_end)`` over feasible
    paths, i.e. the trajectory posterior when the start distribution is
    replaced by ``f`` and the final state is weighted by ``g``.  With
    one-hot ``f`` and ``g`` this is the maximum-likelihood path between two
    states.  Ties are broken deterministically: shortest length first, then
    the lexicographically smallest state sequence (and smallest action index
    among equal-value steps).

    Args:
        mdp: `Mdp`.
        reward: `RewardTables`.
        horizon: Maximum path length.
        start_dist: Non-negative weights over start states (``f``); defaults
            to the MDP's start distribution.
        end_dist: Non-negative weights over end states (``g``); defaults to
            1 everywhere (any end state).

    Returns:
        An `MlPath`.

    Raises:
        ValueError: when no feasible path connects the supports.
    """
    gamma = mdp.discount
    log_t = mdp.log_transitions
    if start_dist is None:
        start_dist = mdp.start_dist
    if end_dist is None:
        end_dist = np.ones(mdp.num_states)
    with np.errstate(divide="ignore"):
        log_f = np.log(np.asarray(start_dist, dtype=float))
        log_g = np.log(np.asarray(end_dist, dtype=float))

    # Forward max-plus pass to find the optimal value and the shortest
    # optimal length.
    best_val = NEG_INF
    best_len = None
    m_t = log_f + reward.r_s
    for length in range(1, horizon + 1):
        if length > 1:
            g = gamma ** (length - 2)
            w = (m_t[:, None, None] + log_t
                 + g * (reward.r_sa[:, :, None] + reward.r_sas))
            m_t = w.max(axis=(0, 1)) + gamma ** (length - 1) * reward.r_s
        val = np.max(m_t + log_g)
        if val > best_val:
            best_val, best_len = val, length
    if best_val == NEG_INF:
        raise ValueError("no feasible path between the given supports")

    # Suffix max-plus table for the chosen length; reconstruction compares
    # candidate terms against these exact table entries, so tie-breaking is
    # bitwise deterministic.
    n = mdp.num_states
    suffix = np.full((best_len, n), NEG_INF)
    suffix[best_len - 1] = log_g
    for t in range(best_len - 1, 0, -1):
        g = gamma ** (t - 1)
        w = (log_t + g * (reward.r_sa[:, :, None] + reward.r_sas)
             + (gamma ** t * reward.r_s + suffix[t])[None, None, :])
        suffix[t - 1] = w.max(axis=(1, 2))

    first = log_f + reward.r_s + suffix[0]
    s = int(np.argmax(first))  # first occurrence = smallest state index
    traj = []
    for t in range(1, best_len):
        g = gamma ** (t - 1)
        cand = (log_t[s] + g * (reward.r_sa[s][:, None] + reward.r_sas[s])
                + (gamma ** t * reward.r_s + suffix[t])[None, :])
        target = suffix[t - 1][s]
        # smallest next state, then smallest action, among exact maximizers
        next_s, act = min(
            (int(s2), int(a)) for a, s2 in zip(*np.nonzero(cand == target))
        )
        traj.append((s, act))
        s = next_s
    traj.append((s, None))

    # Report the exact objective of the reconstructed path.
    total = float(log_f[traj[0][0]])
    for t, (st, a) in enumerate(traj):
        total += gamma ** t * reward.r_s[st]
        if a is not None:
            s2 = traj[t + 1][0]
            total += float(log_t[st, a, s2]
                           + gamma ** t * (reward.r_sa[st, a]
                                           + reward.r_sas[st, a, s2]))
    total += float(log_g[traj[-1][0]])
    return MlPath(trajectory=tuple(traj), log_weight=total)


# ---------------------------------------------------------------------------
# Destination posterior


def _seeded_length_sum(mdp, reward, seed_state, start_time, horizon):
    """Sum of forward messages seeded at one state over all end times.

    The seed enters with unit weight at ``start_time`` (its own arrival reward
    deliberately excluded: it is a common factor across destinations).
    Returns the log of ``sum_{l=start_time..horizon} alpha_l``.
    """
    gamma = mdp.discount
    log_t = mdp.log_transitions
    msg = np.full(mdp.num_states, NEG_INF)
    msg[seed_state] = 0.0
    acc = msg.copy()
    for l in range(start_time, horizon):
        g = gamma ** (l - 1)
        w = (msg[:, None, None] + log_t
             + g * (reward.r_sa[:, :, None] + reward.r_sas))
        msg = logsumexp(w, axis=(0, 1)) + gamma ** l * reward.r_s
        acc = np.logaddexp(acc, msg)
    return acc


def destination_posterior(mdp, reward, prefix, horizon, prior=None):
    """Posterior over the final state given an observed trajectory prefix.

    For each candidate destination ``s_G`` the posterior is proportional to
    ``prior(s_G)`` times the ratio of (a) the total model weight of
    completions of the prefix that end at ``s_G`` to (b) the total weight of
    all paths from the prefix's start state ending at ``s_G``, with path
    lengths marginalized up to ``horizon``.  Destinations unreachable from
    the prefix end get zero mass.

    Args:
        mdp: `Mdp`.
        reward: `RewardTables`.
        prefix: Observed trajectory (final action ``None``).
        horizon: Maximum total path length (>= ``len(prefix)``).
        prior: Non-negative weights over destination states; defaults to
            uniform.

    Returns:
        A probability vector over states.

    Raises:
        ValueError: on an infeasible prefix or when no destination has mass.
    """
    validate_trajectory(mdp, prefix)
    m = len(prefix)
    if m > horizon:
        raise ValueError(f"prefix of length {m} exceeds horizon {horizon}")
    if prior is None:
        prior = np.ones(mdp.num_states)
    with np.errstate(divide="ignore"):
        log_prior = np.log(np.asarray(prior, dtype=float))
    log_num = _seeded_length_sum(mdp, reward, prefix[-1][0], m, horizon)
    log_den = _seeded_length_sum(mdp, reward, prefix[0][0], 1, horizon)
    reachable = (log_num > NEG_INF) & (log_den > NEG_INF)
    log_mass = np.full(mdp.num_states, NEG_INF)
    log_mass[reachable] = (log_num[reachable] - log_den[reachable]
                           + log_prior[reachable])
    if np.all(log_mass == NEG_INF):
        raise ValueError("no destination carries posterior mass")
    return np.exp(log_mass - logsumexp(log_mass))
