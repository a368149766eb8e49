import pytest

from vfsplan.vfs import collect_transitions, train_dynamics
from vfsplan.world import WorldConfig


@pytest.fixture(scope="session")
def reference_dataset():
    """10,000 macro-step transitions at desk-scale defaults (tau=40)."""
    world = WorldConfig()
    return collect_transitions(world, episodes=1000, steps_per_episode=400,
                               seed=20240501)


@pytest.fixture(scope="session")
def reference_model(reference_dataset):
    """Frozen dynamics model shared by the planner and benchmark gates."""
    return train_dynamics(reference_dataset, hidden_width=64, epochs=100, seed=7)
