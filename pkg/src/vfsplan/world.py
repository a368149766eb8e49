"""Deterministic 2D arena with colored circular goal zones.

Four goal-reaching skills (one per color) drive a unicycle robot toward the
nearest zone of their color for a fixed number of environment steps.  The
ground-truth signal reports, per color, the signed distance margin to the
nearest zone boundary normalized by the arena width, so a channel is
positive exactly when the robot is strictly inside a zone of that color.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import stl

COLORS = ("R", "J", "Y", "W")


class PlacementError(RuntimeError):
    """Rejection sampling could not place the robot or zones."""


@dataclass(frozen=True)
class ZoneSpec:
    color: str
    cx: float
    cy: float
    radius: float

    def __post_init__(self):
        if self.color not in COLORS:
            raise ValueError(f"zone color must be one of {COLORS}, got {self.color!r}")
        if self.radius <= 0:
            raise ValueError(f"zone radius must be positive, got {self.radius}")

    def signed_distance(self, x: float, y: float) -> float:
        """Distance to the zone boundary; negative inside."""
        return math.hypot(x - self.cx, y - self.cy) - self.radius


@dataclass(frozen=True)
class RobotState:
    x: float
    y: float
    heading: float

    @property
    def position(self) -> tuple:
        return (self.x, self.y)


@dataclass(frozen=True)
class Skill:
    id: int
    target_color: str


DEFAULT_SKILLS = tuple(Skill(i, c) for i, c in enumerate(COLORS))


def default_zones(arena_half_extent: float = 2.0) -> tuple:
    """Eight zones on a 3x3 grid with the center left open, two per color.

    Opposite grid cells share a color, so the layout is symmetric under
    rotation by pi, and any two zones of different colors are separated by
    a boundary gap of at least 0.45 * arena_half_extent.
    """
    g = 0.75 * arena_half_extent
    r = 0.15 * arena_half_extent
    return (
        ZoneSpec("R", -g, -g, r),
        ZoneSpec("R", g, g, r),
        ZoneSpec("J", -g, 0.0, r),
        ZoneSpec("J", g, 0.0, r),
        ZoneSpec("Y", -g, g, r),
        ZoneSpec("Y", g, -g, r),
        ZoneSpec("W", 0.0, -g, r),
        ZoneSpec("W", 0.0, g, r),
    )


@dataclass(frozen=True)
class WorldConfig:
    arena_half_extent: float = 2.0
    robot_speed: float = 0.1
    tau: int = 40
    seed: int = 0
    zones: tuple = field(default_factory=default_zones)
    spawn_clearance: float = 0.0
    turn_limit: float = math.pi / 8

    @property
    def diameter(self) -> float:
        """Arena width, the normalization scale for all distance channels."""
        return 2.0 * self.arena_half_extent

    def validate(self) -> None:
        if self.arena_half_extent <= 0 or self.robot_speed <= 0:
            raise ValueError("arena_half_extent and robot_speed must be positive")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        if self.zones:
            counts = {c: 0 for c in COLORS}
            for z in self.zones:
                counts[z.color] += 1
                if abs(z.cx) + z.radius > self.arena_half_extent or (
                    abs(z.cy) + z.radius > self.arena_half_extent
                ):
                    raise ValueError(f"zone {z} extends outside the arena")
            if sorted(counts.values()) != [2, 2, 2, 2]:
                raise ValueError(
                    f"expected exactly two zones of each of {COLORS}, got {counts}"
                )

    def zones_of(self, color: str) -> tuple:
        return tuple(z for z in self.zones if z.color == color)


def config_to_dict(cfg: WorldConfig) -> dict:
    return {
        "arena_half_extent": cfg.arena_half_extent,
        "robot_speed": cfg.robot_speed,
        "tau": cfg.tau,
        "seed": cfg.seed,
        "zones": [
            {"color": z.color, "cx": z.cx, "cy": z.cy, "r": z.radius}
            for z in cfg.zones
        ],
        "spawn_clearance": cfg.spawn_clearance,
        "turn_limit": cfg.turn_limit,
    }


def config_from_dict(doc: dict) -> WorldConfig:
    # an absent or empty zone list requests randomized placement per reset
    zones = tuple(
        ZoneSpec(z["color"], float(z["cx"]), float(z["cy"]), float(z["r"]))
        for z in doc.get("zones", [])
    )
    defaults = WorldConfig()
    cfg = WorldConfig(
        arena_half_extent=float(doc.get("arena_half_extent", defaults.arena_half_extent)),
        robot_speed=float(doc.get("robot_speed", defaults.robot_speed)),
        tau=int(doc.get("tau", defaults.tau)),
        seed=int(doc.get("seed", defaults.seed)),
        zones=zones,
        spawn_clearance=float(doc.get("spawn_clearance", defaults.spawn_clearance)),
        turn_limit=float(doc.get("turn_limit", defaults.turn_limit)),
    )
    if zones:
        cfg.validate()
    return cfg


def _sample_zones(cfg: WorldConfig, rng: np.random.Generator, attempts: int = 10000):
    radius = 0.15 * cfg.arena_half_extent
    lim = cfg.arena_half_extent - radius
    placed = []
    for color in COLORS:
        for _ in range(2):
            for _ in range(attempts):
                cx, cy = rng.uniform(-lim, lim, size=2)
                if all(
                    math.hypot(cx - z.cx, cy - z.cy) >= radius + z.radius
                    for z in placed
                ):
                    placed.append(ZoneSpec(color, float(cx), float(cy), radius))
                    break
            else:
                raise PlacementError(
                    f"could not place a {color} zone after {attempts} attempts"
                )
    return tuple(placed)


def reset_world(cfg: WorldConfig, seed) -> tuple:
    """Place the robot (and zones, when the config has none fixed).

    Returns (state, resolved_config); the resolved config carries the
    concrete zone layout used for the episode.  Deterministic in the seed.
    """
    cfg.validate()
    rng = np.random.default_rng(seed)
    zones = cfg.zones if cfg.zones else _sample_zones(cfg, rng)
    e = cfg.arena_half_extent
    for _ in range(10000):
        x, y = rng.uniform(-e, e, size=2)
        if all(z.signed_distance(x, y) >= cfg.spawn_clearance for z in zones):
            heading = float(rng.uniform(-math.pi, math.pi))
            return RobotState(float(x), float(y), heading), replace(cfg, zones=zones)
    raise PlacementError(
        "could not place the robot outside all zones; arena too crowded "
        "or spawn_clearance too large"
    )


def _wrap_angle(a: float) -> float:
    return math.atan2(math.sin(a), math.cos(a))


def nearest_zone(state: RobotState, color: str, cfg: WorldConfig) -> ZoneSpec:
    zones = cfg.zones_of(color)
    if not zones:
        raise ValueError(f"world has no zones of color {color!r}")
    return min(zones, key=lambda z: z.signed_distance(state.x, state.y))


def skill_action(state: RobotState, skill: Skill, world: WorldConfig) -> RobotState:
    """One environment step of the goal-reaching controller.

    Turn toward the nearest zone of the skill color (bounded turn rate),
    then advance min(speed, distance to center); hold still once inside.
    """
    zone = nearest_zone(state, skill.target_color, world)
    dx = zone.cx - state.x
    dy = zone.cy - state.y
    dist = math.hypot(dx, dy)
    if dist <= zone.radius:
        return state
    bearing = math.atan2(dy, dx)
    err = _wrap_angle(bearing - state.heading)
    turn = max(-world.turn_limit, min(world.turn_limit, err))
    heading = _wrap_angle(state.heading + turn)
    step = min(world.robot_speed, dist)
    e = world.arena_half_extent
    x = max(-e, min(e, state.x + step * math.cos(heading)))
    y = max(-e, min(e, state.y + step * math.sin(heading)))
    return RobotState(x, y, heading)


def execute_skill(state: RobotState, skill: Skill, world: WorldConfig):
    """Run the skill for tau environment steps; returns tau+1 states."""
    traj = [state]
    for _ in range(world.tau):
        state = skill_action(state, skill, world)
        traj.append(state)
    return traj


def color_margin(state: RobotState, color: str, cfg: WorldConfig) -> float:
    """Signed zone-membership margin: (radius - center distance) / width."""
    best = max(-z.signed_distance(state.x, state.y) for z in cfg.zones_of(color))
    return best / cfg.diameter


def ground_truth_signal(traj: Sequence[RobotState], world: WorldConfig,
                        stride: int = 1) -> stl.Signal:
    """Per-color membership margins sampled every `stride` env steps."""
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if not traj:
        raise ValueError("trajectory is empty")
    samples = range(0, len(traj), stride)
    return stl.Signal(
        {
            color: [color_margin(traj[i], color, world) for i in samples]
            for color in COLORS
        }
    )


def ground_truth_formula(f: stl.Formula) -> stl.Formula:
    """Rewrite a value-space task for the ground-truth margin channels.

    Membership margins are positive exactly inside a zone, so each predicate
    keeps its comparison and drops its threshold to zero.
    """
    return stl.map_predicates(f, lambda p: stl.Predicate(p.channel, p.comparison, 0.0))


def write_trajectory_csv(traj, active_skills, path) -> None:
    """Columns: step, x, y, heading, active_skill.

    active_skills[i] is the skill that produced state i from state i-1;
    the initial state gets -1.
    """
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "x", "y", "heading", "active_skill"])
        for i, s in enumerate(traj):
            sid = -1 if i == 0 else active_skills[i - 1]
            writer.writerow([i, repr(s.x), repr(s.y), repr(s.heading), sid])
