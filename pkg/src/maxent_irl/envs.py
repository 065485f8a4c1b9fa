"""Benchmark environment builders.

Each builder returns ``(Mdp, FeatureSet, RewardParams)`` — the feature basis
the learners should use and the ground-truth weights that generated the
demonstrations — except `make_random_mdp`, which returns a bare `Mdp` and
leaves the feature choice to the caller.
"""

import numpy as np

from .mdp import Mdp
from .rewards import FeatureSet, RewardParams

# Classic slippery-lake layouts: S start, F frozen, H hole (terminal, no
# reward), G goal (terminal, reward 1).
_GRID_MAPS = {
    4: ("SFFF",
        "FHFH",
        "FFFH",
        "HFFG"),
    8: ("SFFFFFFF",
        "FFFFFFFF",
        "FFFHFFFF",
        "FFFFFHFF",
        "FFFHFFFF",
        "FHHFFFHF",
        "FHFFHFHF",
        "FFFHFFFG"),
}

# Action deltas: left, down, right, up.  An action slips to each of its two
# perpendicular neighbours ((a-1) % 4 and (a+1) % 4) with probability slip/2.
_DELTAS = ((0, -1), (1, 0), (0, 1), (-1, 0))


def make_linear_chain(num_states=4, discount=1.0):
    """Deterministic single-action chain; the last state is terminal.

    Start at state 0; the one action moves one step right.  Features are
    per-state indicators and the ground-truth reward is 1 at the last state.
    """
    n = num_states
    if n < 2:
        raise ValueError("a chain needs at least two states")
    trans = np.zeros((n, 1, n))
    for s in range(n - 1):
        trans[s, 0, s + 1] = 1.0
    start = np.zeros(n)
    start[0] = 1.0
    mdp = Mdp(num_states=n, num_actions=1, start_dist=start, transitions=trans,
              discount=discount, terminal_states=(n - 1,))
    feats = FeatureSet.state_indicators(n, 1)
    theta = np.zeros(n)
    theta[n - 1] = 1.0
    return mdp, feats, RewardParams(theta, np.zeros(0), np.zeros(0))


def make_gridworld(size=4, slip=2.0 / 3.0, discount=0.95, episodic=True):
    """Slippery square gridworld with holes and a rewarded goal.

    Args:
        size: Side length; 4 and 8 use the classic hole layouts, other sizes
            get an open grid (start top-left, goal bottom-right, no holes).
        slip: Total probability of moving perpendicular to the intent
            (``slip/2`` each way).
        discount: Discount factor; the near-1 default keeps the classic
            safety-first optimal policy while leaving every policy's value
            finite, so learned rewards can always be scored.
        episodic: When True holes and the goal are terminal.  When False the
            same dynamics run forever — handy for fixed-length rollouts.

    Returns:
        ``(Mdp, FeatureSet, RewardParams)`` with per-state indicator features
        and ground-truth reward 1 at the goal.
    """
    if not 0.0 <= slip < 1.0:
        raise ValueError("slip must lie in [0, 1)")
    layout = _GRID_MAPS.get(size)
    if layout is None:
        layout = tuple(
            "".join("S" if (r, c) == (0, 0)
                    else "G" if (r, c) == (size - 1, size - 1) else "F"
                    for c in range(size))
            for r in range(size)
        )
    n = size * size
    holes = []
    goal = start = None
    for r, row in enumerate(layout):
        for c, cell in enumerate(row):
            idx = r * size + c
            if cell == "H":
                holes.append(idx)
            elif cell == "G":
                goal = idx
            elif cell == "S":
                start = idx

    absorbing = set(holes) | {goal} if episodic else set()
    trans = np.zeros((n, 4, n))
    for r in range(size):
        for c in range(size):
            s = r * size + c
            if s in absorbing:
                continue
            for a in range(4):
                moves = ((a, 1.0 - slip),
                         ((a - 1) % 4, slip / 2.0),
                         ((a + 1) % 4, slip / 2.0))
                for direction, prob in moves:
                    if prob == 0.0:
                        continue
                    dr, dc = _DELTAS[direction]
                    r2 = min(max(r + dr, 0), size - 1)
                    c2 = min(max(c + dc, 0), size - 1)
                    trans[s, a, r2 * size + c2] += prob

    start_dist = np.zeros(n)
    start_dist[start] = 1.0
    mdp = Mdp(num_states=n, num_actions=4, start_dist=start_dist,
              transitions=trans, discount=discount,
              terminal_states=tuple(sorted(absorbing)))
    feats = FeatureSet.state_indicators(n, 4)
    theta = np.zeros(n)
    theta[goal] = 1.0
    return mdp, feats, RewardParams(theta, np.zeros(0), np.zeros(0))


def make_nchain(num_states=10, slip=0.2, small=2.0, large=10.0,
                discount=0.95):
    """Continuing chain with a forward action (slips back to the start) and a
    reset action with a small consolation reward.

    Features are per-``(s, a)`` indicators; the ground truth pays ``small``
    for every reset and ``large`` for pushing forward at the chain's end.
    """
    n = num_states
    if n < 2:
        raise ValueError("the chain needs at least two states")
    trans = np.zeros((n, 2, n))
    for s in range(n):
        trans[s, 0, min(s + 1, n - 1)] += 1.0 - slip
        trans[s, 0, 0] += slip
        trans[s, 1, 0] = 1.0
    start = np.zeros(n)
    start[0] = 1.0
    mdp = Mdp(num_states=n, num_actions=2, start_dist=start,
              transitions=trans, discount=discount, terminal_states=())
    feats = FeatureSet.state_action_indicators(n, 2)
    theta = np.zeros(2 * n)
    theta[1::2] = small          # (s, reset) indicators
    theta[(n - 1) * 2] = large   # (last state, forward)
    return mdp, feats, RewardParams(np.zeros(0), theta, np.zeros(0))


def make_random_mdp(num_states, num_actions, branching, seed, discount=1.0,
                    num_terminals=0):
    """Random MDP: every live ``(s, a)`` gets ``branching`` distinct
    successors with Dirichlet-uniform probabilities; the start distribution
    is Dirichlet-uniform over all states.

    Args:
        num_states / num_actions: Sizes.
        branching: Successors per state-action; at most ``num_states``.
        seed: RNG seed (fully determines the MDP and the reward).
        discount: Discount factor.
        num_terminals: How many randomly chosen states are terminal.

    Returns:
        ``(Mdp, FeatureSet, RewardParams)`` with per-state indicator features
        and standard-normal true weights.
    """
    if not 1 <= branching <= num_states:
        raise ValueError("branching must lie in [1, num_states]")
    if not 0 <= num_terminals < num_states:
        raise ValueError("need at least one non-terminal state")
    rng = np.random.default_rng(seed)
    terminal = tuple(sorted(
        int(s) for s in rng.choice(num_states, size=num_terminals,
                                   replace=False)
    ))
    trans = np.zeros((num_states, num_actions, num_states))
    for s in range(num_states):
        if s in terminal:
            continue
        for a in range(num_actions):
            succ = rng.choice(num_states, size=branching, replace=False)
            trans[s, a, succ] = rng.dirichlet(np.ones(branching))
    mdp = Mdp(num_states=num_states, num_actions=num_actions,
              start_dist=rng.dirichlet(np.ones(num_states)),
              transitions=trans, discount=discount,
              terminal_states=terminal)
    feats = FeatureSet.state_indicators(num_states, num_actions)
    theta = rng.standard_normal(num_states)
    return mdp, feats, RewardParams(theta, np.zeros(0), np.zeros(0))
