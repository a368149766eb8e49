"""Tabular grid MDP oracles for the critic-equals-reach-probability check.

Rewards are 1 on entering a goal cell and 0 otherwise, goals absorb, and
no discounting is applied, so the optimal state value must equal the exact
probability that the greedy policy's Markov chain is absorbed in a goal.
The two quantities are computed by entirely different routes (Bellman
backups vs. a linear solve) and compared by the tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# up, down, left, right, stay as (row, col) deltas
ACTIONS = ((-1, 0), (1, 0), (0, -1), (0, 1), (0, 0))
STAY = 4
_PERPENDICULAR = {0: (2, 3), 1: (2, 3), 2: (0, 1), 3: (0, 1)}


@dataclass(frozen=True)
class GridMdp:
    width: int
    height: int
    goals: frozenset
    slip: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.slip < 1.0:
            raise ValueError(f"slip must be in [0, 1), got {self.slip}")
        for r, c in self.goals:
            if not (0 <= r < self.height and 0 <= c < self.width):
                raise ValueError(f"goal cell {(r, c)} outside the grid")

    @property
    def n_states(self) -> int:
        return self.width * self.height

    def index(self, cell) -> int:
        return cell[0] * self.width + cell[1]

    def _move(self, r: int, c: int, action: int):
        dr, dc = ACTIONS[action]
        nr, nc = r + dr, c + dc
        if 0 <= nr < self.height and 0 <= nc < self.width:
            return nr, nc
        return r, c  # bumping a wall keeps the position

    def successors(self, cell, action: int):
        """List of ((row, col), probability); goals self-loop."""
        if cell in self.goals:
            return [(cell, 1.0)]
        r, c = cell
        if action == STAY or self.slip == 0.0:
            return [(self._move(r, c, action), 1.0)]
        p1, p2 = _PERPENDICULAR[action]
        return [
            (self._move(r, c, action), 1.0 - self.slip),
            (self._move(r, c, p1), self.slip / 2.0),
            (self._move(r, c, p2), self.slip / 2.0),
        ]


def _transition_tensors(mdp: GridMdp):
    """Per action: flat successor indices and probabilities, (n, 3) each."""
    n = mdp.n_states
    idx = np.zeros((len(ACTIONS), n, 3), dtype=int)
    prob = np.zeros((len(ACTIONS), n, 3))
    for r in range(mdp.height):
        for c in range(mdp.width):
            s = mdp.index((r, c))
            for a in range(len(ACTIONS)):
                for j, (cell, p) in enumerate(mdp.successors((r, c), a)):
                    idx[a, s, j] = mdp.index(cell)
                    prob[a, s, j] = p
    return idx, prob


def value_iteration(mdp: GridMdp, tolerance: float = 1e-10,
                    max_sweeps: int = 200000) -> np.ndarray:
    """Optimal values V(goal)=1 fixed, V(s)=max_a sum_s' P(s'|s,a) V(s').

    Entering a goal yields the single unit of reward, after which the goal
    absorbs with no further reward, so folding the reward into V(goal)=1
    reproduces the undiscounted Bellman recursion exactly.
    """
    idx, prob = _transition_tensors(mdp)
    goal_mask = np.zeros(mdp.n_states, dtype=bool)
    for g in mdp.goals:
        goal_mask[mdp.index(g)] = True
    V = np.zeros(mdp.n_states)
    V[goal_mask] = 1.0
    for _ in range(max_sweeps):
        Q = (prob * V[idx]).sum(axis=2)  # (actions, states)
        V_new = Q.max(axis=0)
        V_new[goal_mask] = 1.0
        delta = np.abs(V_new - V).max()
        V = V_new
        if delta < tolerance:
            break
    else:
        raise RuntimeError(f"value iteration did not converge in {max_sweeps} sweeps")
    return V.reshape(mdp.height, mdp.width)


def greedy_policy(mdp: GridMdp, values: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Greedy action per cell, tie-broken so the induced chain is proper.

    Without discounting, many actions can share the maximal Q value (for
    example when every neighbour has value 1), and an arbitrary choice among
    them may cycle forever without ever entering a goal.  Among Q-maximizing
    actions, this therefore prefers one with positive probability of stepping
    into a cell already ranked closer to a goal (the attractor construction),
    which realizes the maximal reach probability.  Remaining ties fall back
    to the first action in ACTIONS order.
    """
    idx, prob = _transition_tensors(mdp)
    V = np.asarray(values, dtype=float).reshape(-1)
    Q = (prob * V[idx]).sum(axis=2)
    optimal = Q >= Q.max(axis=0) - tol  # (actions, states)

    n = mdp.n_states
    policy = Q.argmax(axis=0)
    goal_idx = {mdp.index(g) for g in mdp.goals}
    ranked = set(goal_idx)
    changed = True
    while changed:
        changed = False
        for s in range(n):
            if s in ranked:
                continue
            for a in range(len(ACTIONS)):
                if not optimal[a, s]:
                    continue
                hits = [idx[a, s, j] for j in range(3) if prob[a, s, j] > 0]
                if any(sp in ranked for sp in hits):
                    policy[s] = a
                    ranked.add(s)
                    changed = True
                    break
    # cells never ranked have maximal reach probability 0; any optimal action
    # is equally (un)helpful there
    return policy.reshape(mdp.height, mdp.width)


def reach_probability(mdp: GridMdp, policy: np.ndarray) -> np.ndarray:
    """Exact goal-absorption probability of the policy's Markov chain.

    Solves p = P_pi p with p=1 on goals as a dense linear system over the
    non-goal states.
    """
    n = mdp.n_states
    policy = np.asarray(policy, dtype=int).reshape(-1)
    goal_idx = {mdp.index(g) for g in mdp.goals}
    others = [s for s in range(n) if s not in goal_idx]
    pos = {s: i for i, s in enumerate(others)}
    m = len(others)
    A = np.eye(m)
    b = np.zeros(m)
    for s in others:
        r, c = divmod(s, mdp.width)
        for cell, p in mdp.successors((r, c), int(policy[s])):
            sp = mdp.index(cell)
            if sp in goal_idx:
                b[pos[s]] += p
            else:
                A[pos[s], pos[sp]] -= p
    # singular only if some recurrent class never reaches a goal; fall back
    # to least squares, which returns 0 on such states
    try:
        x = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        x = np.linalg.lstsq(A, b, rcond=None)[0]
    out = np.zeros(n)
    out[list(goal_idx)] = 1.0
    for s in others:
        out[s] = x[pos[s]]
    return out.reshape(mdp.height, mdp.width)
