"""Skill scheduling for temporal logic tasks via value-function-space planning."""

__version__ = "0.1.0"

from .stl import (
    And,
    Eventually,
    Formula,
    Globally,
    Interval,
    Not,
    Or,
    Predicate,
    Signal,
    Until,
    format_formula,
    horizon,
    parse_formula,
    robustness,
    satisfies,
)
from .world import (
    COLORS,
    DEFAULT_SKILLS,
    RobotState,
    Skill,
    WorldConfig,
    ZoneSpec,
    execute_skill,
    ground_truth_formula,
    ground_truth_signal,
    reset_world,
    skill_action,
)
from .vfs import (
    TransitionDataset,
    collect_transitions,
    embed_state,
    load_model,
    predict_next,
    save_model,
    train_dynamics,
)
from .mlp import MlpRegressor
from .gridworld import GridMdp, greedy_policy, reach_probability, value_iteration
from .planner import (
    PlannerConfig,
    PlanResult,
    TreeNode,
    build_tree,
    exhaustive_best,
    mpc_run,
    optimal_policy,
    plan,
    rollout,
    ucb,
    z_signal,
)
from .bench import FAMILIES, BenchRecord, gen_formula, run_benchmark, summarize

__all__ = [
    "__version__",
    "And", "Eventually", "Formula", "Globally", "Interval", "Not", "Or",
    "Predicate", "Signal", "Until", "format_formula", "horizon",
    "parse_formula", "robustness", "satisfies",
    "COLORS", "DEFAULT_SKILLS", "RobotState", "Skill", "WorldConfig",
    "ZoneSpec", "execute_skill", "ground_truth_formula", "ground_truth_signal",
    "reset_world", "skill_action",
    "TransitionDataset", "collect_transitions", "embed_state", "load_model",
    "predict_next", "save_model", "train_dynamics",
    "MlpRegressor",
    "GridMdp", "greedy_policy", "reach_probability", "value_iteration",
    "PlannerConfig", "PlanResult", "TreeNode", "build_tree", "exhaustive_best",
    "mpc_run", "optimal_policy", "plan", "rollout", "ucb", "z_signal",
    "FAMILIES", "BenchRecord", "gen_formula", "run_benchmark", "summarize",
]
