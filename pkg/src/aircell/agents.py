"""Per-UAV decision makers: the DDQN learner and the random baseline."""
from __future__ import annotations

import numpy as np

from .dqn import EpsilonSchedule, QNetwork, ReplayBuffer, load_checkpoint, save_checkpoint
from .environment import ACTION_COUNT


class RandomPolicy:
    """Uniform draw over the discrete action set; learns nothing."""

    kind = "random"
    trainable = False

    def __init__(self, rng: np.random.Generator, n_actions: int = ACTION_COUNT):
        self.rng = rng
        self.n_actions = n_actions

    def act(self, state=None, train: bool = False) -> int:
        return int(self.rng.integers(self.n_actions))

    def observe(self, state, action, reward, next_state, terminal) -> None:
        return None


class DdqnAgent:
    """One decentralised learner: network, replay memory and exploration state."""

    trainable = True

    def __init__(
        self,
        net: QNetwork,
        buffer: ReplayBuffer,
        schedule: EpsilonSchedule,
        rng: np.random.Generator,
        global_step: int = 0,
    ):
        self.net = net
        self.buffer = buffer
        self.schedule = schedule
        self.rng = rng
        self.global_step = global_step

    @property
    def epsilon(self) -> float:
        return self.schedule.at(self.global_step)

    def act(self, state, train: bool = True) -> int:
        eps = self.epsilon if train else 0.0
        return self.net.select_action(state, eps, self.rng)

    def observe(self, state, action, reward, next_state, terminal) -> float | None:
        """Store the transition, take one learning step, maybe sync the target."""
        self.buffer.push(state, action, reward, next_state, terminal)
        self.global_step += 1
        loss = self.net.train_step(self.buffer, self.rng)
        self.net.sync_target(self.global_step)
        return loss

    def save(self, path) -> None:
        save_checkpoint(path, self.net, self.global_step, self.schedule)

    @classmethod
    def load(
        cls,
        path,
        rng: np.random.Generator,
        buffer_capacity: int = 10_000,
        batch_size: int = 1024,
    ) -> "DdqnAgent":
        net, global_step, schedule = load_checkpoint(path)
        buffer = ReplayBuffer(
            capacity=buffer_capacity, batch_size=batch_size, state_dim=net.state_dim
        )
        return cls(net=net, buffer=buffer, schedule=schedule, rng=rng, global_step=global_step)
