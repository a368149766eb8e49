"""Tree search over predicted skill transitions scored by formula robustness.

The planner treats a trajectory of value-function points as a multichannel
signal (one channel per skill color) and searches for the skill sequence
maximizing the task formula's robustness at time zero.  Search is Monte
Carlo tree search with the score-over-visits plus c*sqrt(parent visits)/visits
selection rule; an exhaustive enumerator over all skill sequences serves as
its oracle.  A receding-horizon executive replans from the observed
simulator state and always rescores the full task window over the executed
prefix plus the predicted suffix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import stl
from .vfs import dynamics_stepper, embed_state
from .world import COLORS, DEFAULT_SKILLS, WorldConfig, execute_skill
from .world import ground_truth_formula, ground_truth_signal, reset_world


class PlanningError(RuntimeError):
    """The search tree cannot yield a plan (no children at the root)."""


class BudgetError(ValueError):
    """Exhaustive enumeration would exceed its sequence budget."""


@dataclass(frozen=True)
class PlannerConfig:
    horizon: int = 10
    iterations: int = 1000
    ucb_c: float = 1.0
    seed: int = 0
    replan_interval: int = 1
    ucb_variant: str = "paper"  # "paper": c*sqrt(N_parent)/N; "uct": c*sqrt(ln N_parent / N)

    def __post_init__(self):
        if self.horizon < 0 or self.iterations < 1 or self.replan_interval < 1:
            raise ValueError("horizon >= 0, iterations >= 1, replan_interval >= 1")
        if self.ucb_variant not in ("paper", "uct"):
            raise ValueError(f"unknown ucb_variant {self.ucb_variant!r}")


class TreeNode:
    """Search node: visits counts completed backpropagations, score their sum."""

    __slots__ = ("z", "depth", "incoming_skill", "parent", "children",
                 "visits", "score")

    def __init__(self, z, depth=0, incoming_skill=None, parent=None):
        self.z = np.asarray(z, dtype=float)
        self.depth = depth
        self.incoming_skill = incoming_skill
        self.parent = parent
        self.children = {}
        self.visits = 0
        self.score = 0.0

    def __repr__(self):
        return (f"TreeNode(depth={self.depth}, skill={self.incoming_skill}, "
                f"visits={self.visits}, score={self.score:.4f}, "
                f"children={sorted(self.children)})")


@dataclass
class PlanResult:
    skills: list
    predicted_z_trajectory: np.ndarray
    predicted_robustness: float


def _as_step(model) -> Callable:
    return model if callable(model) else dynamics_stepper(model)


def z_signal(traj: Sequence[np.ndarray], channels: Optional[Sequence[str]] = None
             ) -> stl.Signal:
    """Value-point trajectory as a signal, one channel per skill."""
    arr = np.asarray(list(traj), dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ValueError("trajectory must be a nonempty sequence of k-vectors")
    k = arr.shape[1]
    if channels is None:
        channels = COLORS if k == len(COLORS) else tuple(f"z{i}" for i in range(k))
    return stl.Signal({name: arr[:, i] for i, name in enumerate(channels)})


def ucb(node: TreeNode, c: float, variant: str = "paper") -> float:
    """Selection value of a child; unvisited nodes rank infinitely high."""
    if node.parent is None:
        raise ValueError("ucb needs a node with a parent")
    if node.visits == 0:
        return math.inf
    exploit = node.score / node.visits
    if variant == "paper":
        return exploit + c * math.sqrt(node.parent.visits) / node.visits
    return exploit + c * math.sqrt(math.log(node.parent.visits) / node.visits)


def _best_child(node: TreeNode, cfg: PlannerConfig) -> TreeNode:
    best, best_u = None, -math.inf
    for sid in sorted(node.children):
        u = ucb(node.children[sid], cfg.ucb_c, cfg.ucb_variant)
        if u > best_u:
            best, best_u = node.children[sid], u
    return best


def rollout(z, depth: int, prefix: Sequence[np.ndarray], model, phi: stl.Formula,
            cfg: PlannerConfig, rng: np.random.Generator) -> float:
    """Complete the trajectory with uniformly random skills and score it.

    prefix holds the depth points before z (executed history plus the tree
    path); the trajectory is extended to cfg.horizon + 1 points and the
    reward is the formula robustness at time zero.
    """
    if depth != len(prefix):
        raise ValueError(f"depth ({depth}) must equal len(prefix) ({len(prefix)})")
    if depth > cfg.horizon:
        raise ValueError(f"depth {depth} exceeds the horizon {cfg.horizon}")
    step = _as_step(model)
    traj = list(prefix) + [np.asarray(z, dtype=float)]
    k = traj[-1].shape[0]
    while len(traj) < cfg.horizon + 1:
        traj.append(step(traj[-1], int(rng.integers(k))))
    return stl.robustness(z_signal(traj), phi, 0)


def _search(z0, model, phi: stl.Formula, cfg: PlannerConfig,
            history: Sequence[np.ndarray] = ()):
    """Core MCTS loop; returns (root, best) where best is the highest-reward
    complete skill sequence sampled by any iteration's rollout."""
    z0 = np.asarray(z0, dtype=float)
    k = z0.shape[0]
    need = stl.horizon(phi)
    if need > cfg.horizon:
        raise ValueError(
            f"formula horizon {need} exceeds the plan horizon {cfg.horizon}"
        )
    depth_budget = cfg.horizon - len(history)
    if depth_budget < 0:
        raise ValueError("history is longer than the plan horizon")
    step = _as_step(model)
    rng = np.random.default_rng(cfg.seed)
    root = TreeNode(z0)
    history = [np.asarray(h, dtype=float) for h in history]
    best = {"reward": -math.inf, "skills": None}
    for _ in range(cfg.iterations):
        node = root
        path = [root.z]
        skills = []
        while node.depth < depth_budget:
            if len(node.children) < k:
                sid = next(s for s in range(k) if s not in node.children)
                child = TreeNode(step(node.z, sid), node.depth + 1, sid, node)
                node.children[sid] = child
                node = child
                path.append(node.z)
                skills.append(sid)
                break
            node = _best_child(node, cfg)
            path.append(node.z)
            skills.append(node.incoming_skill)
        traj = history + path
        while len(traj) < cfg.horizon + 1:
            sid = int(rng.integers(k))
            skills.append(sid)
            traj.append(step(traj[-1], sid))
        reward = stl.robustness(z_signal(traj), phi, 0)
        if reward > best["reward"]:
            best = {"reward": reward, "skills": skills}
        while node is not None:
            node.visits += 1
            node.score += reward
            node = node.parent
    return root, best


def build_tree(z0, model, phi: stl.Formula, cfg: PlannerConfig,
               history: Sequence[np.ndarray] = ()) -> TreeNode:
    """Run cfg.iterations select/expand/rollout/backprop cycles from z0.

    history supplies already-executed points preceding z0; tree depth then
    covers only the remaining cfg.horizon - len(history) macro-steps, while
    rewards always score the full window.  Deterministic in cfg.seed.
    """
    root, _ = _search(z0, model, phi, cfg, history)
    return root


def optimal_policy(root: TreeNode) -> list:
    """Descend by maximal cumulative score (lowest skill id on ties).

    The criterion is the raw score sum, not the mean: an intentionally
    literal rendering of the search algorithm.  It concentrates correctly
    when the best branch earns positive rewards; with uniformly negative
    rewards a rarely-visited child can out-rank a well-explored better one.
    """
    if not root.children:
        raise PlanningError("tree has no children at the root")
    skills = []
    node = root
    while node.children:
        best_sid, best_score = None, -math.inf
        for sid in sorted(node.children):
            if node.children[sid].score > best_score:
                best_sid, best_score = sid, node.children[sid].score
        skills.append(best_sid)
        node = node.children[best_sid]
    return skills


def plan(z0, model, phi: stl.Formula, cfg: PlannerConfig,
         history: Sequence[np.ndarray] = ()) -> PlanResult:
    """Search, extract the best skill sequence, and rescore it end to end.

    Two candidates compete: the score-greedy tree descent (padded with a
    seeded uniform draw when it stops at a shallow leaf) and the best
    complete rollout sampled during the search.  The descent alone can lose
    the optimum when rewards are uniformly negative (its criterion is a raw
    score sum), so the better rescored candidate wins.  The reported
    robustness is always recomputed independently on the returned
    trajectory.
    """
    step = _as_step(model)
    z0 = np.asarray(z0, dtype=float)
    k = z0.shape[0]
    depth_budget = cfg.horizon - len(history)
    root, best = _search(z0, step, phi, cfg, history=history)
    skills = optimal_policy(root) if root.children else []
    pad_rng = np.random.default_rng([cfg.seed, 0x9ad])
    while len(skills) < depth_budget:
        skills.append(int(pad_rng.integers(k)))
    base = [np.asarray(h, dtype=float) for h in history] + [z0]

    def rescore(seq):
        traj = list(base)
        for sid in seq:
            traj.append(step(traj[-1], sid))
        return stl.robustness(z_signal(traj), phi, 0), traj

    rob, traj = rescore(skills)
    if best["skills"] is not None:
        best_rob, best_traj = rescore(best["skills"])
        if best_rob > rob:
            skills, rob, traj = list(best["skills"]), best_rob, best_traj
    return PlanResult(skills, np.asarray(traj), rob)


def exhaustive_best(z0, model, phi: stl.Formula, T: int,
                    history: Sequence[np.ndarray] = (),
                    budget: int = 10 ** 6) -> PlanResult:
    """Enumerate every skill sequence of length T and keep the argmax.

    Ties resolve to the lexicographically smallest sequence.  Guarded by a
    budget on k^T.
    """
    z0 = np.asarray(z0, dtype=float)
    k = z0.shape[0]
    if T < 0:
        raise ValueError("T must be non-negative")
    if k ** T > budget:
        raise BudgetError(f"k^T = {k}^{T} exceeds the budget {budget}")
    step = _as_step(model)
    base = [np.asarray(h, dtype=float) for h in history] + [z0]
    best = {"rob": -math.inf, "seq": None, "traj": None}

    def recurse(traj, seq):
        if len(seq) == T:
            rob = stl.robustness(z_signal(traj), phi, 0)
            if rob > best["rob"]:
                best.update(rob=rob, seq=list(seq), traj=list(traj))
            return
        for sid in range(k):
            traj.append(step(traj[-1], sid))
            seq.append(sid)
            recurse(traj, seq)
            traj.pop()
            seq.pop()

    recurse(base, [])
    return PlanResult(best["seq"], np.asarray(best["traj"]), best["rob"])


@dataclass
class MpcResult:
    states: list
    executed_skills: list
    realized_z: np.ndarray
    realized_robustness: float
    gt_signal: stl.Signal
    gt_robustness: float
    plans: list = field(default_factory=list)
    layout: Optional[WorldConfig] = None


def mpc_run(world: WorldConfig, model, phi: stl.Formula, cfg: PlannerConfig,
            seed: int, use_exhaustive: bool = False) -> MpcResult:
    """Plan, execute a prefix, re-embed the true state, repeat.

    Every replan_interval macro-steps a fresh search runs from the embedding
    of the current simulator state, scoring the executed prefix plus the
    predicted suffix against the unshifted task formula.  Returns the full
    environment-step state trajectory, the realized value-space trajectory
    and robustness, and the ground-truth margin signal and robustness
    sampled at macro-step boundaries.
    """
    T = cfg.horizon
    if stl.horizon(phi) > T:
        raise ValueError(f"formula horizon {stl.horizon(phi)} exceeds T={T}")
    step = _as_step(model)
    n_replans = (T + cfg.replan_interval - 1) // cfg.replan_interval
    seqs = np.random.SeedSequence(seed).spawn(1 + n_replans)
    state, layout = reset_world(world, seqs[0])
    states = [state]
    realized_z = [embed_state(state, layout)]
    executed_skills = []
    plans = []
    pending = []
    for t in range(T):
        if t % cfg.replan_interval == 0:
            plan_seed = int(seqs[1 + t // cfg.replan_interval].generate_state(1)[0])
            pcfg = replace(cfg, seed=plan_seed)
            if use_exhaustive:
                result = exhaustive_best(realized_z[-1], step, phi, T - t,
                                         history=realized_z[:-1])
            else:
                result = plan(realized_z[-1], step, phi, pcfg,
                              history=realized_z[:-1])
            plans.append((t, result))
            pending = list(result.skills)
        sid = pending.pop(0)
        traj = execute_skill(states[-1], DEFAULT_SKILLS[sid], layout)
        states.extend(traj[1:])
        realized_z.append(embed_state(states[-1], layout))
        executed_skills.append(sid)
    realized_z = np.asarray(realized_z)
    realized_rob = stl.robustness(z_signal(realized_z), phi, 0)
    gt_sig = ground_truth_signal(states, layout, stride=max(1, layout.tau))
    gt_rob = stl.robustness(gt_sig, ground_truth_formula(phi), 0)
    return MpcResult(states, executed_skills, realized_z, realized_rob,
                     gt_sig, gt_rob, plans, layout)
