"""Readers and writers for the on-disk formats.

* MDP: one JSON object with ``num_states``, ``num_actions``, ``start_dist``,
  ``transitions`` (either nested ``[S][A][S]`` lists or a sparse list of
  ``[s, a, s2, p]`` rows), ``discount`` and ``terminal_states``.
* Features: JSON with ``phi_s`` (dense ``[S][d]``), optional ``phi_sa``
  (dense ``[S][A][d]`` or sparse ``[[s, a, vec], ...]`` plus ``d_sa``) and
  optional ``phi_sas`` (dense ``[S][A][S][d]`` or sparse
  ``[[s, a, s2, vec], ...]`` plus ``d_sas``).
* Trajectories: one JSON array per line of ``[state, action]`` pairs with
  ``action == -1`` marking the final entry.
* Learn results and marginal sets: single JSON objects.
* Reports: plain CSV.

All loaders raise ``ValueError`` on malformed content.
"""

import csv
import json

import numpy as np

from .exact import MarginalSet
from .mdp import Dataset, Mdp
from .rewards import FeatureSet, RewardParams


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON ({exc})") from exc


def load_mdp(path):
    """Read an `Mdp` from JSON (nested or sparse transitions)."""
    raw = _load_json(path)
    try:
        n = int(raw["num_states"])
        m = int(raw["num_actions"])
        entries = raw["transitions"]
    except KeyError as exc:
        raise ValueError(f"{path}: missing MDP field {exc}") from exc
    if entries and isinstance(entries[0], list) and len(entries[0]) == 4 \
            and not isinstance(entries[0][0], list):
        trans = np.zeros((n, m, n))
        for s, a, s2, p in entries:
            trans[int(s), int(a), int(s2)] = float(p)
    else:
        trans = np.asarray(entries, dtype=float)
    try:
        return Mdp(
            num_states=n, num_actions=m,
            start_dist=np.asarray(raw["start_dist"], dtype=float),
            transitions=trans,
            discount=float(raw.get("discount", 1.0)),
            terminal_states=tuple(raw.get("terminal_states", ())),
        )
    except (KeyError, ValueError, IndexError) as exc:
        raise ValueError(f"{path}: {exc}") from exc


def save_mdp(mdp, path):
    """Write an `Mdp` as JSON with nested transitions."""
    with open(path, "w") as fh:
        json.dump({
            "num_states": mdp.num_states,
            "num_actions": mdp.num_actions,
            "start_dist": mdp.start_dist.tolist(),
            "transitions": mdp.transitions.tolist(),
            "discount": mdp.discount,
            "terminal_states": list(mdp.terminal_states),
        }, fh)


def load_features(path, mdp):
    """Read a `FeatureSet` sized against ``mdp``."""
    raw = _load_json(path)
    n, m = mdp.num_states, mdp.num_actions
    phi_s = np.asarray(raw["phi_s"], dtype=float) if "phi_s" in raw else None

    phi_sa = None
    if "phi_sa" in raw:
        entries = raw["phi_sa"]
        if entries and isinstance(entries[0], list) and len(entries[0]) == 3 \
                and isinstance(entries[0][2], list):
            phi_sa = np.zeros((n, m, int(raw["d_sa"])))
            for s, a, vec in entries:
                phi_sa[int(s), int(a)] = np.asarray(vec, dtype=float)
        else:
            phi_sa = np.asarray(entries, dtype=float)

    phi_sas = None
    if "phi_sas" in raw:
        entries = raw["phi_sas"]
        if entries and isinstance(entries[0], list) and len(entries[0]) == 4 \
                and isinstance(entries[0][3], list):
            phi_sas = np.zeros((n, m, n, int(raw["d_sas"])))
            for s, a, s2, vec in entries:
                phi_sas[int(s), int(a), int(s2)] = np.asarray(vec, dtype=float)
        else:
            phi_sas = np.asarray(entries, dtype=float)

    try:
        return FeatureSet.from_arrays(n, m, phi_s=phi_s, phi_sa=phi_sa,
                                      phi_sas=phi_sas)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc


def load_trajectories(path, mdp=None):
    """Read a `Dataset` from JSON-lines (final action ``-1``)."""
    trajectories = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                pairs = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON") from exc
            traj = []
            for pair in pairs:
                if not isinstance(pair, list) or len(pair) != 2:
                    raise ValueError(
                        f"{path}:{lineno}: entries must be [state, action]"
                    )
                s, a = pair
                traj.append((int(s), None if int(a) == -1 else int(a)))
            trajectories.append(tuple(traj))
    try:
        return Dataset.from_trajectories(trajectories, mdp=mdp)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc


def save_trajectories(data, path):
    """Write a `Dataset` as JSON-lines (final action ``-1``)."""
    with open(path, "w") as fh:
        for traj in data:
            pairs = [[s, -1 if a is None else a] for s, a in traj]
            fh.write(json.dumps(pairs) + "\n")


def save_learn_result(result, path):
    """Write a `LearnResult` as a JSON object."""
    with open(path, "w") as fh:
        json.dump({
            "method": result.method,
            "converged": bool(result.converged),
            "iterations": result.iterations,
            "horizon": result.horizon,
            "log_z": result.log_z,
            "log_likelihood": result.log_likelihood,
            "grad_inf_norm": result.grad_inf_norm,
            "params": {
                "theta_s": result.params.theta_s.tolist(),
                "theta_sa": result.params.theta_sa.tolist(),
                "theta_sas": result.params.theta_sas.tolist(),
            },
            "trace": [[ll, g] for ll, g in result.trace],
        }, fh, indent=2, allow_nan=True)


def load_reward_params(path):
    """Read `RewardParams` from a learn-result (or bare params) JSON file."""
    raw = _load_json(path)
    params = raw.get("params", raw)
    try:
        return RewardParams(
            theta_s=np.asarray(params.get("theta_s", ()), dtype=float),
            theta_sa=np.asarray(params.get("theta_sa", ()), dtype=float),
            theta_sas=np.asarray(params.get("theta_sas", ()), dtype=float),
        )
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc


def save_marginals(marginals, path):
    """Write a `MarginalSet` as a JSON object."""
    with open(path, "w") as fh:
        json.dump({
            "log_z": marginals.log_z,
            "p_s": marginals.p_s.tolist(),
            "p_sa": marginals.p_sa.tolist(),
            "p_sas": marginals.p_sas.tolist(),
        }, fh)


def load_marginals(path):
    """Read a `MarginalSet` written by `save_marginals`."""
    raw = _load_json(path)
    try:
        return MarginalSet(
            log_z=float(raw["log_z"]),
            p_s=np.asarray(raw["p_s"], dtype=float),
            p_sa=np.asarray(raw["p_sa"], dtype=float),
            p_sas=np.asarray(raw["p_sas"], dtype=float),
        )
    except KeyError as exc:
        raise ValueError(f"{path}: missing field {exc}") from exc


def write_csv(path, header, rows):
    """Write a report table; every row is an iterable matching ``header``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
