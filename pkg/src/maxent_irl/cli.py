"""Command-line interface.

Three subcommands, each driven by a JSON config file::

    irl learn --config learn.json [--seed N] [--out DIR] [--no-plot]
    irl eval  --config eval.json  [--seed N] [--out DIR] [--no-plot]
    irl bench --config bench.json [--seed N] [--out DIR] [--no-plot]

``learn`` fits a reward to demonstrations and writes ``learn_result.json``
plus an optimization-trace figure.  ``eval`` sweeps demonstration counts on a
generated environment, scoring each algorithm by inverse learning error and
held-out log-likelihood (``eval.csv`` + figure).  ``bench`` times one
inference-plus-gradient cycle per algorithm across horizons (``bench.csv`` +
figure).

Exit codes: 0 success, 1 bad config / I-O error, 2 the learner finished
without meeting its gradient tolerance.
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import envs, fileio, plots
from .baselines import (approx_irl_learn, ziebart2008_marginals,
                        ziebart2010_marginals)
from .exact import (forward_messages, infer_padded, infer_varlen,
                    log_likelihood, log_partition, model_expectations)
from .learning import (OptimizerConfig, importance_model_expectation,
                       learn_exact_padded, learn_exact_varlen,
                       learn_importance, sample_importance_trajectories)
from .mdp import Dataset, pad_mdp
from .policy import ile, sample_rollouts, value_iteration
from .rewards import (FeatureSet, RewardParams, build_padded_reward,
                      reward_tables)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_CONVERGENCE = 2

ALGORITHMS = ("exact-padded", "exact-poly", "ziebart2008", "ziebart2010",
              "importance-sampling")

_ENV_MAKERS = {
    "chain": envs.make_linear_chain,
    "gridworld": envs.make_gridworld,
    "nchain": envs.make_nchain,
    "random": envs.make_random_mdp,
}


def _load_config(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON ({exc})") from exc


def _resolve_features(source, mdp):
    if source == "state-indicators":
        return FeatureSet.state_indicators(mdp.num_states, mdp.num_actions)
    if source == "state-action-indicators":
        return FeatureSet.state_action_indicators(mdp.num_states,
                                                  mdp.num_actions)
    return fileio.load_features(source, mdp)


def _sample_demos(mdp, policy, n, max_len, seed, end_states=None):
    """Roll out demonstrations, optionally keeping only chosen end states."""
    if end_states is None:
        return sample_rollouts(mdp, policy, n, max_len, seed)
    states = frozenset(int(s) for s in end_states)
    kept = []
    for batch_seed in np.random.SeedSequence(seed).generate_state(200):
        batch = sample_rollouts(mdp, policy, n, max_len, int(batch_seed))
        kept.extend(t for t in batch if t[-1][0] in states)
        if len(kept) >= n:
            break
    else:
        raise ValueError(
            "could not collect enough demonstrations ending in "
            f"{sorted(states)}"
        )
    return Dataset.from_trajectories(kept[:n])


def _resolve_problem(cfg, seed):
    """Build ``(mdp, features, true_params, dataset)`` from a config.

    ``mdp`` may be a JSON file path or an inline environment object such as
    ``{"kind": "gridworld", "size": 4}``.  ``true_params`` is None for
    file-based MDPs unless the config names a ``true_params`` file; the
    dataset is None unless the config provides ``trajectories`` (a JSONL
    path) or ``demos`` (rollouts of the optimal policy for the known reward).
    """
    source = cfg.get("mdp")
    if source is None:
        raise ValueError("config needs an 'mdp' entry")
    true_params = None
    if isinstance(source, str):
        mdp = fileio.load_mdp(source)
        if "features" not in cfg:
            raise ValueError("a file-based MDP needs a 'features' entry")
        feats = _resolve_features(cfg["features"], mdp)
        if "true_params" in cfg:
            true_params = fileio.load_reward_params(cfg["true_params"])
    elif isinstance(source, dict):
        options = dict(source)
        kind = options.pop("kind", None)
        maker = _ENV_MAKERS.get(kind)
        if maker is None:
            raise ValueError(
                f"unknown environment kind {kind!r}; expected one of "
                f"{sorted(_ENV_MAKERS)}"
            )
        if kind == "random":
            options.setdefault("seed", seed)
        try:
            mdp, feats, true_params = maker(**options)
        except TypeError as exc:
            raise ValueError(f"bad {kind} options: {exc}") from exc
        if "features" in cfg:
            feats = _resolve_features(cfg["features"], mdp)
    else:
        raise ValueError("'mdp' must be a file path or an environment object")

    data = None
    if "trajectories" in cfg:
        data = fileio.load_trajectories(cfg["trajectories"], mdp)
    elif "demos" in cfg:
        if true_params is None:
            raise ValueError(
                "'demos' needs a generated environment with a known reward"
            )
        demo_cfg = cfg["demos"]
        _, policy = value_iteration(mdp, reward_tables(feats, true_params))
        data = _sample_demos(
            mdp, policy,
            int(demo_cfg.get("n_paths", 20)),
            int(demo_cfg.get("max_len", 50)),
            seed,
            demo_cfg.get("end_states"),
        )
    return mdp, feats, true_params, data


def _optimizer_config(cfg):
    options = dict(cfg.get("optimizer", {}))
    if "bounds" in options and options["bounds"] is not None:
        options["bounds"] = tuple(options["bounds"])
    try:
        return OptimizerConfig(**options)
    except TypeError as exc:
        raise ValueError(f"bad optimizer options: {exc}") from exc


def _run_learner(name, mdp, feats, data, config, horizon, seed, cfg):
    if name == "exact-padded":
        return learn_exact_padded(mdp, feats, data, config, horizon)
    if name == "exact-poly":
        return learn_exact_varlen(mdp, feats, data, config, horizon)
    if name == "ziebart2008":
        return approx_irl_learn(mdp, feats, data, variant="2008",
                                config=config, horizon=horizon)
    if name == "ziebart2010":
        return approx_irl_learn(mdp, feats, data, variant="2010",
                                config=config, horizon=horizon)
    if name == "importance-sampling":
        return learn_importance(
            mdp, feats, data, config, horizon,
            n_samples=int(cfg.get("n_samples", 2000)),
            seed=seed,
            stop_prob=float(cfg.get("stop_prob", 0.2)),
        )
    raise ValueError(
        f"unknown algorithm {name!r}; expected one of {list(ALGORITHMS)}"
    )


def _seed_and_out(args, cfg):
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return seed, out


def cmd_learn(args):
    cfg = _load_config(args.config)
    seed, out = _seed_and_out(args, cfg)
    mdp, feats, _, data = _resolve_problem(cfg, seed)
    if data is None:
        raise ValueError("learn needs a 'trajectories' or 'demos' entry")
    config = _optimizer_config(cfg)
    result = _run_learner(cfg.get("algorithm", "exact-padded"), mdp, feats,
                          data, config, cfg.get("horizon"), seed, cfg)

    result_path = out / "learn_result.json"
    fileio.save_learn_result(result, result_path)
    print(f"{result.method}: log-likelihood {result.log_likelihood:.6f}, "
          f"|grad| {result.grad_inf_norm:.3g}, "
          f"{result.iterations} iterations, "
          f"{'converged' if result.converged else 'not converged'}")
    print(f"wrote {result_path}")
    if not args.no_plot:
        fig_path = out / "learn_trace.png"
        plots.save_trace_figure(result, fig_path)
        print(f"wrote {fig_path}")
    return EXIT_OK if result.converged else EXIT_NO_CONVERGENCE


def cmd_eval(args):
    cfg = _load_config(args.config)
    seed, out = _seed_and_out(args, cfg)
    mdp, feats, true_params, _ = _resolve_problem(cfg, seed)
    if true_params is None:
        raise ValueError("eval needs an environment with a known true reward")
    true_tables = reward_tables(feats, true_params)
    _, demo_policy = value_iteration(mdp, true_tables)

    algorithms = cfg.get("algorithms", ["exact-padded"])
    n_list = sorted({int(n) for n in cfg.get("n_paths", [1, 10, 100])})
    repeats = int(cfg.get("repeats", 10))
    max_len = int(cfg.get("max_len", 50))
    heldout_n = int(cfg.get("heldout", 100))
    end_states = cfg.get("end_states")
    config = _optimizer_config(cfg)
    horizon = cfg.get("horizon")

    seeds = np.random.SeedSequence(seed).generate_state(
        repeats * (len(n_list) + 1)).reshape(repeats, len(n_list) + 1)
    rows = []
    for rep in range(repeats):
        heldout = sample_rollouts(mdp, demo_policy, heldout_n, max_len,
                                  int(seeds[rep, -1]))
        for j, n in enumerate(n_list):
            demos = _sample_demos(mdp, demo_policy, n, max_len,
                                  int(seeds[rep, j]), end_states)
            for name in algorithms:
                result = _run_learner(name, mdp, feats, demos, config,
                                      horizon, seed, cfg)
                tables = reward_tables(feats, result.params)
                err = ile(mdp, true_tables, tables, horizon=max_len)
                log_z = log_partition(
                    forward_messages(mdp, tables, heldout.max_len))
                ll = log_likelihood(heldout, mdp, tables, log_z)
                rows.append({"algorithm": name, "repeat": rep, "n_paths": n,
                             "ile": err, "loglik": ll})

    csv_path = out / "eval.csv"
    fileio.write_csv(
        csv_path,
        ["algorithm", "repeat", "n_paths", "ile", "loglik"],
        [[r["algorithm"], r["repeat"], r["n_paths"], r["ile"], r["loglik"]]
         for r in rows],
    )
    print(f"wrote {csv_path} ({len(rows)} rows)")
    if not args.no_plot:
        fig_path = out / "eval.png"
        plots.save_eval_figure(rows, fig_path)
        print(f"wrote {fig_path}")
    return EXIT_OK


def _make_bench_cycle(name, mdp, feats, params, cfg):
    """One full inference + model-expectation cycle, as a ``cycle(L)``."""
    tables = reward_tables(feats, params)
    gamma = mdp.discount

    if name == "exact-poly":
        def cycle(horizon):
            marg = infer_varlen(mdp, tables, horizon)
            model_expectations(marg, feats, gamma)
    elif name == "exact-padded":
        padded = pad_mdp(mdp)

        def cycle(horizon):
            padded_reward = build_padded_reward(feats, params, mdp)
            marg = infer_padded(padded, tables, padded_reward, horizon)
            model_expectations(marg, feats, gamma)
    elif name in ("ziebart2008", "ziebart2010"):
        fn = (ziebart2008_marginals if name == "ziebart2008"
              else ziebart2010_marginals)

        def cycle(horizon):
            visits = fn(mdp, tables, horizon)
            weights = gamma ** np.arange(horizon)
            np.einsum("st,t,sd->d", visits, weights, feats.phi_s)
    elif name == "importance-sampling":
        n_samples = int(cfg.get("n_samples", 1000))

        def cycle(horizon):
            samples = sample_importance_trajectories(mdp, n_samples, horizon,
                                                     seed=0)
            importance_model_expectation(mdp, feats, params, samples)
    else:
        raise ValueError(
            f"unknown algorithm {name!r}; expected one of {list(ALGORITHMS)}"
        )
    return cycle


def cmd_bench(args):
    cfg = _load_config(args.config)
    seed, out = _seed_and_out(args, cfg)
    mdp, feats, true_params, _ = _resolve_problem(cfg, seed)
    params = true_params if true_params is not None \
        else RewardParams.zeros(feats)

    horizons = [int(h) for h in cfg.get("horizons", [10, 20, 40, 80])]
    algorithms = cfg.get("algorithms", ["exact-padded", "exact-poly"])
    repeats = int(cfg.get("repeats", 3))
    inner = int(cfg.get("inner", 1))
    size = mdp.num_states ** 2 * mdp.num_actions

    rows, plot_rows = [], []
    for name in algorithms:
        cycle = _make_bench_cycle(name, mdp, feats, params, cfg)
        for horizon in horizons:
            cycle(horizon)  # warm-up, untimed
            for rep in range(repeats):
                times = []
                for _ in range(inner):
                    t0 = time.perf_counter()
                    cycle(horizon)
                    times.append(time.perf_counter() - t0)
                mean = float(np.mean(times))
                ci90 = (1.645 * float(np.std(times, ddof=1))
                        / np.sqrt(inner)) if inner > 1 else ""
                rows.append([size, horizon, name, rep, mean, ci90])
                plot_rows.append({"algorithm": name, "horizon": horizon,
                                  "seconds": mean})

    csv_path = out / "bench.csv"
    fileio.write_csv(csv_path,
                     ["size", "horizon", "algorithm", "repeat", "mean_s",
                      "ci90_s"],
                     rows)
    print(f"wrote {csv_path} ({len(rows)} rows)")
    if not args.no_plot:
        fig_path = out / "bench.png"
        plots.save_bench_figure(plot_rows, fig_path)
        print(f"wrote {fig_path}")
    return EXIT_OK


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="irl",
        description="Maximum-entropy inverse reinforcement learning on "
                    "finite MDPs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, text in (
        ("learn", cmd_learn, "fit a reward to demonstrations"),
        ("eval", cmd_eval, "score algorithms against a known reward"),
        ("bench", cmd_bench, "time inference across horizons"),
    ):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", required=True,
                         help="JSON config file")
        cmd.add_argument("--seed", type=int, default=None,
                         help="override the config seed")
        cmd.add_argument("--out", default=".",
                         help="output directory (default: current)")
        cmd.add_argument("--no-plot", action="store_true",
                         help="skip figure rendering")
        cmd.set_defaults(func=fn)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
