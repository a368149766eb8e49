"""Value-function-space abstraction over the arena.

A state is embedded as the vector of per-skill critic readings: an analytic
surrogate critic scores each color by proximity of its nearest zone, 1 at
the zone and decaying linearly to 0 at one arena width away.  Skill
transitions in this space are recorded by rolling out random skills in the
simulator and learned with a small MLP regressor conditioned on a one-hot
skill code.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from sklearn.model_selection import train_test_split

from . import world as world_mod
from .mlp import MlpRegressor
from .world import COLORS, DEFAULT_SKILLS, RobotState, WorldConfig

N_SKILLS = len(DEFAULT_SKILLS)


def embed_state(state: RobotState, world: WorldConfig) -> np.ndarray:
    """Critic vector: component i = clip(1 - d_i / width, 0, 1).

    d_i is the signed distance to the boundary of the nearest zone of skill
    i's color, so a component is 1 exactly on or inside such a zone.
    """
    z = np.empty(N_SKILLS)
    for skill in DEFAULT_SKILLS:
        d = min(
            zone.signed_distance(state.x, state.y)
            for zone in world.zones_of(skill.target_color)
        )
        z[skill.id] = min(1.0, max(0.0, 1.0 - d / world.diameter))
    return z


@dataclass
class TransitionDataset:
    """Macro-step transitions (z, skill, z_next), one row per skill execution."""

    z: np.ndarray
    skill: np.ndarray
    z_next: np.ndarray

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        self.skill = np.asarray(self.skill, dtype=int)
        self.z_next = np.asarray(self.z_next, dtype=float)
        if self.z.shape != self.z_next.shape or self.z.shape[0] != self.skill.shape[0]:
            raise ValueError("inconsistent dataset shapes")
        if self.z.size and (self.z.min() < 0 or self.z.max() > 1):
            raise ValueError("embedding components must lie in [0, 1]")
        k = self.z.shape[1] if self.z.ndim == 2 else 0
        if self.skill.size and (self.skill.min() < 0 or self.skill.max() >= k):
            raise ValueError(f"skill ids must lie in 0..{k - 1}")

    def __len__(self) -> int:
        return self.z.shape[0]

    @property
    def k(self) -> int:
        return self.z.shape[1]


def collect_transitions(world: WorldConfig, episodes: int, steps_per_episode: int,
                        seed: int) -> TransitionDataset:
    """Roll out uniformly random skills and record macro-step transitions.

    Each episode resets the world (fresh robot pose, fresh zones when the
    config randomizes them) and runs steps_per_episode environment steps,
    which must be a multiple of tau.
    """
    if world.tau < 1:
        raise ValueError("tau must be >= 1 to collect transitions")
    if steps_per_episode % world.tau != 0:
        raise ValueError(
            f"steps_per_episode ({steps_per_episode}) must be a multiple of "
            f"tau ({world.tau})"
        )
    macro_steps = steps_per_episode // world.tau
    zs, skills, z_nexts = [], [], []
    root = np.random.SeedSequence(seed)
    for episode_seq in root.spawn(episodes):
        reset_seq, skill_seq = episode_seq.spawn(2)
        state, layout = world_mod.reset_world(world, reset_seq)
        rng = np.random.default_rng(skill_seq)
        z = embed_state(state, layout)
        for _ in range(macro_steps):
            sid = int(rng.integers(N_SKILLS))
            traj = world_mod.execute_skill(state, DEFAULT_SKILLS[sid], layout)
            state = traj[-1]
            z_next = embed_state(state, layout)
            zs.append(z)
            skills.append(sid)
            z_nexts.append(z_next)
            z = z_next
    return TransitionDataset(np.array(zs), np.array(skills), np.array(z_nexts))


def one_hot(skill_ids, k: int = N_SKILLS) -> np.ndarray:
    skill_ids = np.asarray(skill_ids, dtype=int)
    eye = np.eye(k)
    return eye[skill_ids]


def _features(z: np.ndarray, skill: np.ndarray, k: int) -> np.ndarray:
    return np.hstack([z, one_hot(skill, k)])


@dataclass
class TrainReport:
    train_mse: float
    holdout_mse: float
    holdout_mse_per_component: list


def train_dynamics(data: TransitionDataset, hidden_width: int = 64,
                   epochs: int = 150, learning_rate: float = 1e-3,
                   seed: int = 0, batch_size: int = 64,
                   holdout_fraction: float = 0.1):
    """Fit the forward model z' = f(z, one-hot skill) by minimizing MSE.

    The dataset is split 90/10 by a seeded shuffle; the report carries the
    final training loss and the holdout error of the clipped predictions.
    Returns (model, report).
    """
    if len(data) == 0:
        raise ValueError("cannot train on an empty dataset")
    X = _features(data.z, data.skill, data.k)
    y = data.z_next
    X_train, X_hold, y_train, y_hold = train_test_split(
        X, y, test_size=holdout_fraction, random_state=seed, shuffle=True
    )
    model = MlpRegressor(
        hidden_width=hidden_width,
        epochs=epochs,
        learning_rate=learning_rate,
        batch_size=batch_size,
        clip_range=(0.0, 1.0),
        random_state=seed,
    )
    model.fit(X_train, y_train)
    pred = model.predict(X_hold)
    per_component = np.mean((pred - y_hold) ** 2, axis=0)
    report = TrainReport(
        train_mse=float(model.loss_curve_[-1]),
        holdout_mse=float(per_component.mean()),
        holdout_mse_per_component=[float(v) for v in per_component],
    )
    return model, report


def predict_next(model: MlpRegressor, z: np.ndarray, skill_id: int) -> np.ndarray:
    """One forward step in value-function space, clipped to [0, 1]^k."""
    k = model.n_outputs_
    if not 0 <= skill_id < k:
        raise ValueError(f"skill_id must be in 0..{k - 1}, got {skill_id}")
    x = np.concatenate([np.asarray(z, dtype=float), one_hot([skill_id], k)[0]])
    return model.predict(x[None, :])[0]


def dynamics_stepper(model: MlpRegressor):
    """Bind a model into the (z, skill_id) -> z' callable planners consume."""
    def step(z, skill_id):
        return predict_next(model, z, skill_id)
    return step


# -- persistence --------------------------------------------------------------

def save_model(model: MlpRegressor, path) -> None:
    """Weights as JSON: {k, hidden_width, layers:[{rows, cols, weights, bias}]}."""
    layers = []
    for W, b in zip(model.coefs_, model.intercepts_):
        layers.append({
            "rows": int(W.shape[0]),
            "cols": int(W.shape[1]),
            "weights": [float(v) for v in W.ravel(order="C")],
            "bias": [float(v) for v in b],
        })
    doc = {"k": int(model.n_outputs_), "hidden_width": int(model.hidden_width),
           "layers": layers}
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_model(path) -> MlpRegressor:
    with open(path) as fh:
        doc = json.load(fh)
    model = MlpRegressor(hidden_width=int(doc["hidden_width"]),
                         clip_range=(0.0, 1.0))
    coefs, intercepts = [], []
    for layer in doc["layers"]:
        rows, cols = int(layer["rows"]), int(layer["cols"])
        W = np.array(layer["weights"], dtype=float).reshape(rows, cols)
        coefs.append(W)
        intercepts.append(np.array(layer["bias"], dtype=float))
    model.coefs_ = coefs
    model.intercepts_ = intercepts
    model.n_features_in_ = coefs[0].shape[0]
    model.n_outputs_ = int(doc["k"])
    return model


def save_dataset_csv(data: TransitionDataset, path) -> None:
    """Columns z0..z{k-1}, skill, zn0..zn{k-1}."""
    k = data.k
    header = [f"z{i}" for i in range(k)] + ["skill"] + [f"zn{i}" for i in range(k)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(len(data)):
            row = [repr(float(v)) for v in data.z[i]]
            row.append(int(data.skill[i]))
            row.extend(repr(float(v)) for v in data.z_next[i])
            writer.writerow(row)


def load_dataset_csv(path) -> TransitionDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        k = header.index("skill")
        zs, skills, z_nexts = [], [], []
        for row in reader:
            if not row:
                continue
            zs.append([float(v) for v in row[:k]])
            skills.append(int(row[k]))
            z_nexts.append([float(v) for v in row[k + 1 : 2 * k + 1]])
    return TransitionDataset(np.array(zs), np.array(skills), np.array(z_nexts))
