"""Reward learning by maximum-likelihood ascent.

Both exact learners maximize the same concave average log-likelihood
``theta . E_D[phi] + mean log q - log Z`` from a zero initialization; they
differ only in the inference route used for the normalizer's marginals
(variable-length vs. padded).  The model-free path replaces exact model
feature expectations with a self-normalized importance-sampling estimate.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .exact import (backward_messages_padded, backward_messages_varlen,
                    forward_messages, log_partition, marginals_padded,
                    marginals_varlen, model_expectations)
from .mdp import pad_mdp, trajectory_log_prior
from .rewards import (NEG_INF, RewardParams, build_padded_reward,
                      empirical_expectations, reward_tables, traj_features,
                      traj_reward_from_tables)


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings shared by all learners.

    Attributes:
        method: ``"quasi-newton"`` (bounded quasi-Newton with strong-Wolfe
            line search) or ``"gradient-ascent"`` (backtracking line search).
        max_iters: Iteration cap.
        grad_tol: Infinity-norm gradient tolerance; the convergence flag
            reports whether the final point satisfies it.
        ll_tol: Relative log-likelihood change tolerance.
        step_size: Initial step for gradient ascent.
        bounds: Optional ``(lo, hi)`` box applied to every parameter.
    """

    method: str = "quasi-newton"
    max_iters: int = 500
    grad_tol: float = 1e-6
    ll_tol: float = 1e-10
    step_size: float = 1.0
    bounds: tuple = None


@dataclass(frozen=True, eq=False)
class LearnResult:
    """Outcome of a learning run.

    Attributes:
        params: Learned `RewardParams`.
        log_z: Log normalizer at the learned point.
        log_likelihood: Average demonstration log-likelihood at the learned
            point.
        grad_inf_norm: Infinity norm of the final ascent gradient.
        trace: Tuple of ``(log_likelihood, grad_inf_norm)`` per accepted
            iterate, starting with the initial point.
        converged: Whether ``grad_inf_norm < grad_tol``.
        iterations: Accepted iteration count.
        method: Learner label.
        horizon: Trajectory length bound used by inference.
    """

    params: RewardParams
    log_z: float
    log_likelihood: float
    grad_inf_norm: float
    trace: tuple
    converged: bool
    iterations: int
    method: str
    horizon: int


def _run_optimizer(evaluate, x0, config):
    """Maximize a concave objective given ``evaluate(x) -> (ll, grad, log_z)``.

    Returns ``(x, ll, grad, log_z, trace, converged, iterations)``.
    """
    if config.method not in ("quasi-newton", "gradient-ascent"):
        raise ValueError(f"unknown optimizer method {config.method!r}")
    trace = []

    if config.method == "quasi-newton":
        cache = {}

        def fun(x):
            ll, grad, log_z = evaluate(x)
            cache["x"] = np.array(x, copy=True)
            cache["val"] = (ll, grad, log_z)
            return -ll, -grad

        ll0, grad0, _ = evaluate(x0)
        trace.append((ll0, float(np.max(np.abs(grad0))) if grad0.size else 0.0))

        def record(xk):
            if "x" in cache and np.array_equal(xk, cache["x"]):
                ll, grad, _ = cache["val"]
            else:
                ll, grad, _ = evaluate(xk)
            trace.append((ll, float(np.max(np.abs(grad))) if grad.size else 0.0))

        bounds = None
        if config.bounds is not None:
            bounds = [tuple(config.bounds)] * x0.size
        res = minimize(
            fun, x0, jac=True, method="L-BFGS-B", bounds=bounds,
            callback=record,
            options={"maxiter": config.max_iters, "ftol": config.ll_tol,
                     "gtol": config.grad_tol, "maxls": 60},
        )
        x, iterations = res.x, int(res.nit)
        ll, grad, log_z = evaluate(x)
    else:
        x = np.array(x0, dtype=float)
        ll, grad, log_z = evaluate(x)
        ginf = float(np.max(np.abs(grad))) if grad.size else 0.0
        trace.append((ll, ginf))
        iterations = 0
        while iterations < config.max_iters and ginf >= config.grad_tol:
            slope = float(grad @ grad)
            step = config.step_size
            accepted = False
            while step > 1e-18:
                cand = x + step * grad
                if config.bounds is not None:
                    cand = np.clip(cand, *config.bounds)
                ll_new, grad_new, log_z_new = evaluate(cand)
                if ll_new >= ll + 1e-4 * step * slope:
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                break
            rel = abs(ll_new - ll) / max(1.0, abs(ll_new))
            x, ll, grad, log_z = cand, ll_new, grad_new, log_z_new
            ginf = float(np.max(np.abs(grad))) if grad.size else 0.0
            iterations += 1
            trace.append((ll, ginf))
            if ginf < config.grad_tol and rel < config.ll_tol:
                break

    ginf = float(np.max(np.abs(grad))) if grad.size else 0.0
    converged = ginf < config.grad_tol
    return x, ll, grad, log_z, tuple(trace), converged, iterations


def _data_constants(mdp, feats, data):
    """Per-dataset terms of the likelihood: empirical features, mean log prior."""
    emp = empirical_expectations(data, feats, mdp.discount)
    emp_vec = np.concatenate(emp)
    log_prior = 0.0
    for traj in data:
        lq = trajectory_log_prior(mdp, traj)
        if lq == NEG_INF:
            raise ValueError(
                f"demonstration starts at state {traj[0][0]} with zero start "
                "probability"
            )
        log_prior += lq
    return emp_vec, log_prior / len(data)


def _fit(mdp, feats, data, config, horizon, evaluate, method):
    x0 = RewardParams.zeros(feats).to_vector()
    x, ll, grad, log_z, trace, converged, iters = _run_optimizer(
        evaluate, x0, config)
    return LearnResult(
        params=RewardParams.from_vector(x, feats),
        log_z=log_z,
        log_likelihood=ll,
        grad_inf_norm=float(np.max(np.abs(grad))) if grad.size else 0.0,
        trace=trace,
        converged=converged,
        iterations=iters,
        method=method,
        horizon=horizon,
    )


def _check_horizon(data, horizon):
    horizon = data.max_len if horizon is None else int(horizon)
    if horizon < data.max_len:
        raise ValueError(
            f"horizon {horizon} is shorter than the longest demonstration "
            f"({data.max_len})"
        )
    return horizon


def learn_exact_varlen(mdp, feats, data, config=None, horizon=None):
    """Fit a reward with the variable-length (per-total-length) inference."""
    config = config or OptimizerConfig()
    horizon = _check_horizon(data, horizon)
    emp_vec, mean_log_q = _data_constants(mdp, feats, data)
    gamma = mdp.discount

    def evaluate(x):
        params = RewardParams.from_vector(x, feats)
        tables = reward_tables(feats, params)
        log_alpha = forward_messages(mdp, tables, horizon)
        log_z = log_partition(log_alpha)
        log_beta = backward_messages_varlen(mdp, tables, horizon)
        marg = marginals_varlen(log_alpha, log_beta, mdp, tables, log_z)
        mod = np.concatenate(model_expectations(marg, feats, gamma))
        return float(x @ emp_vec + mean_log_q - log_z), emp_vec - mod, log_z

    return _fit(mdp, feats, data, config, horizon, evaluate, "exact-varlen")


def learn_exact_padded(mdp, feats, data, config=None, horizon=None):
    """Fit a reward with the padded (absorbing-state) inference."""
    config = config or OptimizerConfig()
    horizon = _check_horizon(data, horizon)
    emp_vec, mean_log_q = _data_constants(mdp, feats, data)
    gamma = mdp.discount
    padded = pad_mdp(mdp)

    def evaluate(x):
        params = RewardParams.from_vector(x, feats)
        tables = reward_tables(feats, params)
        log_alpha = forward_messages(mdp, tables, horizon)
        log_z = log_partition(log_alpha)
        padded_reward = build_padded_reward(feats, params, mdp)
        log_beta = backward_messages_padded(padded, padded_reward, horizon)
        marg = marginals_padded(log_alpha, log_beta, padded, padded_reward,
                                log_z)
        mod = np.concatenate(model_expectations(marg, feats, gamma))
        return float(x @ emp_vec + mean_log_q - log_z), emp_vec - mod, log_z

    return _fit(mdp, feats, data, config, horizon, evaluate, "exact-padded")


# ---------------------------------------------------------------------------
# Model-free gradient estimation


def sample_importance_trajectories(mdp, n, max_len, seed, stop_prob=0.2):
    """Sample proposal trajectories with recorded sampling log-probabilities.

    The proposal follows a uniform-random policy and additionally stops with
    probability ``stop_prob`` before each non-forced step, so every feasible
    trajectory of length <= ``max_len`` has positive sampling probability —
    a requirement for consistent importance weighting.

    Returns:
        List of ``(trajectory, log_p_sample)`` pairs.
    """
    if not 0.0 < stop_prob < 1.0:
        raise ValueError("stop_prob must lie strictly between 0 and 1")
    halt = mdp.terminal_mask | ~mdp.valid_sa.any(axis=1)
    log_stop = math.log(stop_prob)
    log_go = math.log1p(-stop_prob)
    samples = []
    for child_seed in np.random.SeedSequence(seed).spawn(n):
        rng = np.random.default_rng(child_seed)
        s = int(rng.choice(mdp.num_states, p=mdp.start_dist))
        log_p = float(np.log(mdp.start_dist[s]))
        traj = []
        while True:
            if halt[s] or len(traj) + 1 == max_len:
                traj.append((s, None))
                break
            if rng.random() < stop_prob:
                log_p += log_stop
                traj.append((s, None))
                break
            log_p += log_go
            valid = np.nonzero(mdp.valid_sa[s])[0]
            a = int(rng.choice(valid))
            log_p -= math.log(valid.size)
            traj.append((s, a))
            s2 = int(rng.choice(mdp.num_states, p=mdp.transitions[s, a]))
            log_p += float(np.log(mdp.transitions[s, a, s2]))
            s = s2
        samples.append((tuple(traj), log_p))
    return samples


def importance_model_expectation(mdp, feats, params, samples):
    """Self-normalized estimate of the model's discounted feature expectation.

    Args:
        mdp: `Mdp`.
        feats: `FeatureSet`.
        params: `RewardParams` defining the target distribution.
        samples: ``(trajectory, log_p_sample)`` pairs from any proposal whose
            support covers the trajectory set.

    Returns:
        Tuple ``(estimate, stderr)`` of flat vectors over all feature blocks;
        ``stderr`` is the delta-method standard error of the self-normalized
        estimator.

    Raises:
        ValueError: if every importance weight is zero.
    """
    gamma = mdp.discount
    tables = reward_tables(feats, params)
    log_w = np.array([
        traj_reward_from_tables(traj, tables, gamma)
        + trajectory_log_prior(mdp, traj) - log_p
        for traj, log_p in samples
    ])
    if np.all(log_w == NEG_INF):
        raise ValueError("all importance weights are zero")
    w = np.exp(log_w - logsumexp(log_w))
    phi = np.stack([
        np.concatenate(traj_features(traj, feats, gamma))
        for traj, _ in samples
    ])
    est = w @ phi
    stderr = np.sqrt(w ** 2 @ (phi - est) ** 2)
    return est, stderr


def importance_gradient(mdp, feats, params, data, samples):
    """Model-free estimate of the ascent gradient of the log-likelihood.

    Empirical feature expectations come from ``data``; the model side is the
    importance-sampling estimate from ``samples``.

    Returns:
        Tuple ``(g_s, g_sa, g_sas)`` of gradient blocks.
    """
    emp = empirical_expectations(data, feats, mdp.discount)
    est, _ = importance_model_expectation(mdp, feats, params, samples)
    grad = np.concatenate(emp) - est
    blocks = RewardParams.from_vector(grad, feats)
    return blocks.theta_s, blocks.theta_sa, blocks.theta_sas


def learn_importance(mdp, feats, data, config=None, horizon=None,
                     n_samples=2000, seed=0, stop_prob=0.2):
    """Fit a reward by stochastic ascent on importance-sampled gradients.

    Each iteration draws a fresh proposal batch, estimates the model feature
    expectation from it, and steps ``step_size / sqrt(iteration)`` along the
    estimated ascent direction.  There is no line search: the objective is
    never evaluated during the ascent.  The log-likelihood and normalizer in
    the result are computed exactly at the final point for reporting only,
    and trace entries carry ``nan`` in the likelihood slot.

    Args:
        mdp: `Mdp`.
        feats: `FeatureSet`.
        data: Demonstration `Dataset`.
        config: `OptimizerConfig`; ``max_iters``, ``step_size``, ``grad_tol``
            and ``bounds`` are honored.
        horizon: Trajectory length bound (defaults to the longest demo).
        n_samples: Proposal trajectories per iteration.
        seed: Seed for the per-iteration proposal batches.
        stop_prob: Early-stop probability of the proposal policy.

    Returns:
        `LearnResult` with method ``"importance-sampling"``.
    """
    config = config or OptimizerConfig()
    horizon = _check_horizon(data, horizon)
    emp_vec, mean_log_q = _data_constants(mdp, feats, data)
    batch_seeds = np.random.SeedSequence(seed).generate_state(config.max_iters)

    x = RewardParams.zeros(feats).to_vector()
    trace = []
    ginf = 0.0
    iters = 0
    for it in range(1, config.max_iters + 1):
        samples = sample_importance_trajectories(
            mdp, n_samples, horizon, int(batch_seeds[it - 1]), stop_prob)
        params = RewardParams.from_vector(x, feats)
        est, _ = importance_model_expectation(mdp, feats, params, samples)
        grad = emp_vec - est
        ginf = float(np.max(np.abs(grad))) if grad.size else 0.0
        trace.append((math.nan, ginf))
        iters = it
        if ginf < config.grad_tol:
            break
        x = x + (config.step_size / math.sqrt(it)) * grad
        if config.bounds is not None:
            x = np.clip(x, config.bounds[0], config.bounds[1])

    params = RewardParams.from_vector(x, feats)
    tables = reward_tables(feats, params)
    log_z = log_partition(forward_messages(mdp, tables, horizon))
    return LearnResult(
        params=params,
        log_z=log_z,
        log_likelihood=float(x @ emp_vec + mean_log_q - log_z),
        grad_inf_norm=ginf,
        trace=tuple(trace),
        converged=ginf < config.grad_tol,
        iterations=iters,
        method="importance-sampling",
        horizon=horizon,
    )
