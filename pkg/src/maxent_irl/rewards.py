"""Linear reward models over state / state-action / state-action-state features.

A reward is parameterized as ``R(s) = theta_s . phi_s(s)`` and likewise for
the two transition-level blocks.  Any block may be absent (zero feature
width).  Trajectory-level quantities discount step ``t`` (1-based) by
``gamma**(t-1)``: state rewards run over every visited state, the transition
blocks over every taken action.
"""

from dataclasses import dataclass

import numpy as np

NEG_INF = -np.inf


def _as_feature_block(arr, shape_prefix, name):
    if arr is None:
        arr = np.zeros(shape_prefix + (0,))
    arr = np.ascontiguousarray(np.asarray(arr, dtype=float))
    if arr.ndim != len(shape_prefix) + 1 or arr.shape[:-1] != shape_prefix:
        raise ValueError(
            f"{name} must have shape {shape_prefix + ('d',)}, got {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FeatureSet:
    """Feature tables for the three reward blocks.

    Attributes:
        phi_s: ``(S, d_s)`` state features.
        phi_sa: ``(S, A, d_sa)`` state-action features.
        phi_sas: ``(S, A, S, d_sas)`` transition features.
    """

    phi_s: np.ndarray
    phi_sa: np.ndarray
    phi_sas: np.ndarray

    @classmethod
    def from_arrays(cls, num_states, num_actions, phi_s=None, phi_sa=None,
                    phi_sas=None):
        """Assemble a feature set; ``None`` blocks get zero width."""
        n, m = num_states, num_actions
        return cls(
            phi_s=_as_feature_block(phi_s, (n,), "phi_s"),
            phi_sa=_as_feature_block(phi_sa, (n, m), "phi_sa"),
            phi_sas=_as_feature_block(phi_sas, (n, m, n), "phi_sas"),
        )

    @classmethod
    def state_indicators(cls, num_states, num_actions):
        """One-hot state features; the learned reward is one value per state."""
        return cls.from_arrays(num_states, num_actions,
                               phi_s=np.eye(num_states))

    @classmethod
    def state_action_indicators(cls, num_states, num_actions):
        """One-hot ``(s, a)`` features; one reward value per state-action."""
        d = num_states * num_actions
        return cls.from_arrays(
            num_states, num_actions,
            phi_sa=np.eye(d).reshape(num_states, num_actions, d),
        )

    @property
    def dims(self):
        """Widths ``(d_s, d_sa, d_sas)`` of the three blocks."""
        return (self.phi_s.shape[-1], self.phi_sa.shape[-1],
                self.phi_sas.shape[-1])

    @property
    def num_states(self):
        return self.phi_s.shape[0]

    @property
    def num_actions(self):
        return self.phi_sa.shape[1]


@dataclass(frozen=True, eq=False)
class RewardParams:
    """Weight vectors for the three feature blocks."""

    theta_s: np.ndarray
    theta_sa: np.ndarray
    theta_sas: np.ndarray

    def __post_init__(self):
        for name in ("theta_s", "theta_sa", "theta_sas"):
            v = np.ascontiguousarray(np.asarray(getattr(self, name), dtype=float))
            if v.ndim != 1:
                raise ValueError(f"{name} must be a vector")
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{name} must be finite")
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @classmethod
    def zeros(cls, feats):
        d_s, d_sa, d_sas = feats.dims
        return cls(np.zeros(d_s), np.zeros(d_sa), np.zeros(d_sas))

    def to_vector(self):
        """Concatenate the blocks into one flat parameter vector."""
        return np.concatenate([self.theta_s, self.theta_sa, self.theta_sas])

    @classmethod
    def from_vector(cls, vec, feats):
        """Split a flat vector back into blocks sized by ``feats.dims``."""
        vec = np.asarray(vec, dtype=float)
        d_s, d_sa, d_sas = feats.dims
        if vec.shape != (d_s + d_sa + d_sas,):
            raise ValueError(
                f"expected a vector of length {d_s + d_sa + d_sas}, "
                f"got shape {vec.shape}"
            )
        return cls(vec[:d_s], vec[d_s:d_s + d_sa], vec[d_s + d_sa:])


@dataclass(frozen=True, eq=False)
class RewardTables:
    """Dense reward lookups ``r_s (S,)``, ``r_sa (S, A)``, ``r_sas (S, A, S)``."""

    r_s: np.ndarray
    r_sa: np.ndarray
    r_sas: np.ndarray


def reward_tables(feats, params):
    """Contract features with weights into dense reward tables."""
    return RewardTables(
        r_s=feats.phi_s @ params.theta_s,
        r_sa=feats.phi_sa @ params.theta_sa,
        r_sas=feats.phi_sas @ params.theta_sas,
    )


# ---------------------------------------------------------------------------
# Trajectory functionals


def discount_weights(gamma, length):
    """Vector ``[1, gamma, gamma^2, ...]`` of the given length."""
    return gamma ** np.arange(length, dtype=float)


def traj_features(traj, feats, gamma):
    """Discounted feature sums of one trajectory.

    Args:
        traj: Trajectory (tuple of ``(state, action)`` pairs, final action
            ``None``).
        feats: `FeatureSet`.
        gamma: Discount factor.

    Returns:
        Tuple ``(f_s, f_sa, f_sas)`` of vectors sized by ``feats.dims``.  The
        state block sums over all ``|traj|`` states, the other two over the
        ``|traj| - 1`` taken actions, each step weighted ``gamma**(t-1)``.
    """
    states = np.fromiter((s for s, _ in traj), dtype=int, count=len(traj))
    w = discount_weights(gamma, len(traj))
    f_s = w @ feats.phi_s[states]
    d_s, d_sa, d_sas = feats.dims
    f_sa = np.zeros(d_sa)
    f_sas = np.zeros(d_sas)
    for t in range(len(traj) - 1):
        s, a = traj[t]
        s2 = traj[t + 1][0]
        if d_sa:
            f_sa += w[t] * feats.phi_sa[s, a]
        if d_sas:
            f_sas += w[t] * feats.phi_sas[s, a, s2]
    return f_s, f_sa, f_sas


def traj_reward(traj, feats, params, gamma):
    """Discounted linear reward of one trajectory."""
    f_s, f_sa, f_sas = traj_features(traj, feats, gamma)
    return float(params.theta_s @ f_s + params.theta_sa @ f_sa
                 + params.theta_sas @ f_sas)


def traj_reward_from_tables(traj, tables, gamma):
    """Discounted trajectory reward looked up from dense reward tables."""
    total = 0.0
    g = 1.0
    for t, (s, a) in enumerate(traj):
        total += g * tables.r_s[s]
        if a is not None:
            s2 = traj[t + 1][0]
            total += g * (tables.r_sa[s, a] + tables.r_sas[s, a, s2])
        g *= gamma
    return float(total)


def empirical_expectations(data, feats, gamma):
    """Mean discounted feature vectors over a dataset.

    Returns:
        Tuple ``(f_s, f_sa, f_sas)`` of per-block means.
    """
    d_s, d_sa, d_sas = feats.dims
    sums = [np.zeros(d_s), np.zeros(d_sa), np.zeros(d_sas)]
    for traj in data:
        for acc, f in zip(sums, traj_features(traj, feats, gamma)):
            acc += f
    return tuple(acc / len(data) for acc in sums)


# ---------------------------------------------------------------------------
# Padded reward tables


@dataclass(frozen=True, eq=False)
class PaddedRewardModel:
    """Reward tables extended over the auxiliary state and action.

    The tables make padding reward-neutral: the auxiliary action and state
    contribute exactly zero along any padded tail, while ``-inf`` entries
    erase the spurious dynamic paths the padding introduces (real actions at
    formerly-terminal states, non-auxiliary escapes of the auxiliary state).

    A formerly-terminal state keeps its *original* state reward: the reward is
    collected once, at the visitation step where the unpadded trajectory
    ended, and the padded tail after it contributes nothing.

    Attributes:
        r_s: ``(S+1,)`` state rewards; original everywhere, 0 at the aux state.
        r_sa: ``(S+1, A+1)``; original for live state-action pairs, 0 for the
            aux action anywhere, ``-inf`` otherwise.
        r_sas: ``(S+1, A+1, S+1)``; original for live transitions, 0 for
            ``(*, aux_a, aux_s)``, ``-inf`` otherwise.
        aux_state: Auxiliary state index.
        aux_action: Auxiliary action index.
    """

    r_s: np.ndarray
    r_sa: np.ndarray
    r_sas: np.ndarray
    aux_state: int
    aux_action: int


def build_padded_reward(feats, params, mdp):
    """Extend the reward model of ``mdp`` over the padded state/action space.

    Args:
        feats: `FeatureSet` over the original MDP.
        params: `RewardParams`.
        mdp: The *original* `Mdp` (provides sizes and terminal states).

    Returns:
        A `PaddedRewardModel` over ``S+1`` states and ``A+1`` actions.
    """
    return pad_reward_tables(reward_tables(feats, params), mdp)


def pad_reward_tables(base, mdp):
    """Extend raw `RewardTables` over the padded state/action space.

    The auxiliary state and action are free (reward 0); entries that would
    let probability re-enter the original process — a real action out of a
    terminal or auxiliary state, or a real transition into the auxiliary
    state — are ``-inf`` so they carry no weight.

    Args:
        base: `RewardTables` over the original MDP.
        mdp: The *original* `Mdp` (provides sizes and terminal states).

    Returns:
        A `PaddedRewardModel` over ``S+1`` states and ``A+1`` actions.
    """
    n, m = mdp.num_states, mdp.num_actions
    aux_s, aux_a = n, m
    live = ~mdp.terminal_mask  # states whose outgoing structure survives

    r_s = np.zeros(n + 1)
    r_s[:n] = base.r_s

    r_sa = np.full((n + 1, m + 1), NEG_INF)
    r_sa[:n, :m][live] = base.r_sa[live]
    r_sa[:, aux_a] = 0.0

    r_sas = np.full((n + 1, m + 1, n + 1), NEG_INF)
    r_sas[:n, :m, :n][live] = base.r_sas[live]
    r_sas[:, aux_a, :] = NEG_INF
    r_sas[:, aux_a, aux_s] = 0.0

    return PaddedRewardModel(r_s=r_s, r_sa=r_sa, r_sas=r_sas,
                             aux_state=aux_s, aux_action=aux_a)
