"""Core containers for finite MDPs, trajectories and the absorbing-state padding.

States and actions are integer indices.  A trajectory is a tuple of
``(state, action)`` pairs where only the final pair carries ``action=None``;
a length-1 trajectory is a single ``(state, None)`` pair.  Episodes may stop
at any state: ending early at a non-terminal state is legal and carries
probability mass in the trajectory distribution, which is exactly what the
variable-length inference machinery accounts for.
"""

import functools
from dataclasses import dataclass, replace

import numpy as np

# Transition probabilities at or below this threshold are treated as
# structural zeros when building adjacency maps.
EDGE_EPS = 1e-15


@dataclass(frozen=True, eq=False)
class Mdp:
    """A finite discrete MDP.

    Attributes:
        num_states: Number of states ``S``.
        num_actions: Number of actions ``A``.
        start_dist: Shape ``(S,)`` start distribution.
        transitions: Shape ``(S, A, S)`` tensor; ``transitions[s, a, s']`` is
            the probability of landing in ``s'`` after taking ``a`` in ``s``.
            Each ``(s, a)`` row either sums to one (a valid action) or is all
            zero (an invalid action, e.g. any action at a terminal state).
        discount: Per-step discount factor in ``(0, 1]``.
        terminal_states: Sorted tuple of states at which episodes must end.
            Terminal states must have all-zero transition rows.
    """

    num_states: int
    num_actions: int
    start_dist: np.ndarray
    transitions: np.ndarray
    discount: float = 1.0
    terminal_states: tuple = ()

    def __post_init__(self):
        start = np.ascontiguousarray(np.asarray(self.start_dist, dtype=float))
        trans = np.ascontiguousarray(np.asarray(self.transitions, dtype=float))
        terminal = tuple(sorted(int(s) for s in self.terminal_states))
        object.__setattr__(self, "start_dist", start)
        object.__setattr__(self, "transitions", trans)
        object.__setattr__(self, "terminal_states", terminal)
        self._validate()
        start.setflags(write=False)
        trans.setflags(write=False)

    def _validate(self):
        n, m = self.num_states, self.num_actions
        if n < 1 or m < 1:
            raise ValueError("need at least one state and one action")
        if not 0.0 < self.discount <= 1.0:
            raise ValueError(f"discount must lie in (0, 1], got {self.discount}")
        if self.start_dist.shape != (n,):
            raise ValueError(f"start_dist must have shape ({n},)")
        if self.transitions.shape != (n, m, n):
            raise ValueError(f"transitions must have shape ({n}, {m}, {n})")
        if np.any(self.start_dist < 0) or np.any(self.transitions < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(self.start_dist.sum() - 1.0) > 1e-9:
            raise ValueError("start_dist must sum to one")
        row_sums = self.transitions.sum(axis=2)
        ok = (np.abs(row_sums - 1.0) <= 1e-9) | (row_sums <= 1e-12)
        if not np.all(ok):
            bad = np.argwhere(~ok)[0]
            raise ValueError(
                f"transition row (s={bad[0]}, a={bad[1]}) sums to "
                f"{row_sums[tuple(bad)]:.12g}; rows must sum to 1 or be all zero"
            )
        for s in self.terminal_states:
            if not 0 <= s < n:
                raise ValueError(f"terminal state {s} out of range")
            if row_sums[s].max() > 1e-12:
                raise ValueError(
                    f"terminal state {s} has outgoing transitions; terminal "
                    "rows must be all zero"
                )

    @functools.cached_property
    def terminal_mask(self):
        """Boolean vector marking terminal states."""
        mask = np.zeros(self.num_states, dtype=bool)
        mask[list(self.terminal_states)] = True
        mask.setflags(write=False)
        return mask

    @functools.cached_property
    def valid_sa(self):
        """Boolean ``(S, A)`` mask of actions with a proper successor row."""
        mask = self.transitions.sum(axis=2) > 0.5
        mask.setflags(write=False)
        return mask

    @functools.cached_property
    def log_transitions(self):
        """Element-wise ``log T`` with ``-inf`` at structural zeros."""
        with np.errstate(divide="ignore"):
            log_t = np.log(self.transitions)
        log_t.setflags(write=False)
        return log_t

    def with_discount(self, discount):
        """Return a copy of this MDP with a different discount factor."""
        return replace(self, discount=float(discount))


@dataclass(frozen=True, eq=False)
class Adjacency:
    """Sparse successor/predecessor structure of an MDP.

    Attributes:
        children: ``children[s]`` is a tuple of ``(a, s')`` pairs with
            ``T(s'|s, a) > 0``.  Terminal states have empty child sets.
        parents: ``parents[s']`` is a tuple of ``(s, a)`` pairs with
            ``T(s'|s, a) > 0``.
    """

    children: tuple
    parents: tuple


def build_adjacency(mdp):
    """Scan the transition tensor into child/parent edge lists.

    Args:
        mdp: An `Mdp`.

    Returns:
        An `Adjacency` whose edges are exactly the entries of
        ``mdp.transitions`` above `EDGE_EPS`.
    """
    children = [[] for _ in range(mdp.num_states)]
    parents = [[] for _ in range(mdp.num_states)]
    for s, a, s2 in zip(*np.nonzero(mdp.transitions > EDGE_EPS)):
        children[int(s)].append((int(a), int(s2)))
        parents[int(s2)].append((int(s), int(a)))
    return Adjacency(
        children=tuple(tuple(c) for c in children),
        parents=tuple(tuple(p) for p in parents),
    )


# ---------------------------------------------------------------------------
# Trajectories


def trajectory_states(traj):
    """Return the state sequence of a trajectory."""
    return tuple(s for s, _ in traj)


def validate_trajectory(mdp, traj):
    """Check that a trajectory is structurally sound and dynamically feasible.

    Raises:
        ValueError: on empty input, out-of-range indices, a non-final ``None``
            action, or any step with zero transition probability.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    for i, (s, a) in enumerate(traj):
        if not 0 <= s < mdp.num_states:
            raise ValueError(f"state {s} out of range at position {i}")
        final = i == len(traj) - 1
        if final:
            if a is not None:
                raise ValueError("final trajectory entry must have action None")
        else:
            if a is None:
                raise ValueError(f"non-final entry at position {i} lacks an action")
            if not 0 <= a < mdp.num_actions:
                raise ValueError(f"action {a} out of range at position {i}")
            s_next = traj[i + 1][0]
            if mdp.transitions[s, a, s_next] <= 0.0:
                raise ValueError(
                    f"infeasible step ({s}, {a}) -> {s_next} at position {i}"
                )


def trajectory_log_prior(mdp, traj):
    """Log dynamics probability ``log p_0(s_1) + sum log T`` of a trajectory.

    Returns ``-inf`` when the start state has zero start probability.  Steps
    with zero transition probability raise (use `validate_trajectory` to get
    a descriptive error earlier).
    """
    s0 = traj[0][0]
    with np.errstate(divide="ignore"):
        log_q = float(np.log(mdp.start_dist[s0]))
    for (s, a), (s2, _) in zip(traj[:-1], traj[1:]):
        p = mdp.transitions[s, a, s2]
        if p <= 0.0:
            raise ValueError(f"infeasible step ({s}, {a}) -> {s2}")
        log_q += float(np.log(p))
    return log_q


@dataclass(frozen=True, eq=False)
class Dataset:
    """An immutable bag of demonstration trajectories.

    Attributes:
        trajectories: Tuple of trajectories (tuples of ``(state, action)``).
        max_len: Length of the longest trajectory; this is the horizon ``L``
            used by inference unless the caller overrides it.
    """

    trajectories: tuple
    max_len: int

    @classmethod
    def from_trajectories(cls, trajectories, mdp=None):
        """Build a dataset, optionally validating every path against ``mdp``."""
        trajs = tuple(tuple((int(s), None if a is None else int(a)) for s, a in t)
                      for t in trajectories)
        if not trajs:
            raise ValueError("dataset must contain at least one trajectory")
        if mdp is not None:
            for t in trajs:
                validate_trajectory(mdp, t)
        return cls(trajectories=trajs, max_len=max(len(t) for t in trajs))

    def __len__(self):
        return len(self.trajectories)

    def __iter__(self):
        return iter(self.trajectories)


# ---------------------------------------------------------------------------
# Absorbing-state padding


@dataclass(frozen=True, eq=False)
class PaddedMdp:
    """An MDP extended with one absorbing auxiliary state and action.

    The construction turns variable-length episodic dynamics into fixed-length
    continuing dynamics: episodes that would stop early instead walk into the
    auxiliary state and idle there.  Those idle steps are reward-neutral, so
    the trajectory distribution is unchanged.

    Attributes:
        base: The original MDP.
        padded: The extended MDP over ``S+1`` states / ``A+1`` actions with no
            terminal states.
        aux_state: Index of the auxiliary state (== ``base.num_states``).
        aux_action: Index of the auxiliary action (== ``base.num_actions``).
        adjacency: Adjacency of ``padded``, with the auxiliary state's child
            set reduced to the single ``(aux_action, aux_state)`` self-loop
            (other self-loop actions exist dynamically but carry ``-inf``
            reward, so they never contribute).
    """

    base: Mdp
    padded: Mdp
    aux_state: int
    aux_action: int
    adjacency: Adjacency


def pad_mdp(mdp):
    """Extend an MDP with the absorbing auxiliary state/action.

    Construction rules:
      1. the auxiliary state has zero start probability;
      2. the auxiliary state is absorbing under every action;
      3. the auxiliary action moves every state to the auxiliary state;
      4. every terminal state moves to the auxiliary state under every action
         (its terminal flag is dropped).

    Args:
        mdp: The original `Mdp`.

    Returns:
        A `PaddedMdp`.
    """
    n, m = mdp.num_states, mdp.num_actions
    aux_s, aux_a = n, m
    trans = np.zeros((n + 1, m + 1, n + 1))
    trans[:n, :m, :n] = mdp.transitions
    if mdp.terminal_states:
        trans[list(mdp.terminal_states), :, :] = 0.0
        trans[list(mdp.terminal_states), :, aux_s] = 1.0
    trans[:, aux_a, :] = 0.0
    trans[:, aux_a, aux_s] = 1.0
    trans[aux_s, :, :] = 0.0
    trans[aux_s, :, aux_s] = 1.0

    padded = Mdp(
        num_states=n + 1,
        num_actions=m + 1,
        start_dist=np.append(mdp.start_dist, 0.0),
        transitions=trans,
        discount=mdp.discount,
        terminal_states=(),
    )

    adjacency = build_adjacency(padded)
    children = list(adjacency.children)
    children[aux_s] = ((aux_a, aux_s),)
    parents = list(adjacency.parents)
    parents[aux_s] = tuple(
        (s, a) for s, a in parents[aux_s] if not (s == aux_s and a != aux_a)
    )
    adjacency = Adjacency(children=tuple(children), parents=tuple(parents))

    return PaddedMdp(
        base=mdp, padded=padded, aux_state=aux_s, aux_action=aux_a,
        adjacency=adjacency,
    )


def pad_dataset(data, horizon, padded_mdp):
    """Extend every trajectory to exactly ``horizon`` steps via the aux state.

    A trajectory ``(.., (s_m, None))`` of length ``m < horizon`` becomes
    ``(.., (s_m, aux_a), (aux_s, aux_a), .., (aux_s, None))``.  Length-``horizon``
    trajectories are returned untouched.

    Args:
        data: A `Dataset` over the base MDP.
        horizon: Target length ``L``; must be >= ``data.max_len``.
        padded_mdp: The `PaddedMdp` providing the auxiliary indices.

    Returns:
        A `Dataset` over the padded MDP in which every trajectory has length
        ``horizon``.
    """
    if horizon < data.max_len:
        raise ValueError(
            f"horizon {horizon} is shorter than the longest trajectory "
            f"({data.max_len})"
        )
    aux_s, aux_a = padded_mdp.aux_state, padded_mdp.aux_action
    out = []
    for traj in data:
        need = horizon - len(traj)
        if need == 0:
            out.append(traj)
            continue
        head = traj[:-1] + ((traj[-1][0], aux_a),)
        tail = ((aux_s, aux_a),) * (need - 1) + ((aux_s, None),)
        out.append(head + tail)
    return Dataset(trajectories=tuple(out), max_len=horizon)
