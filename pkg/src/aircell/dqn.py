"""Double deep Q-network learner built on bare numpy.

A small ReLU MLP (default 23 -> 128 -> 64 -> 7) with main and target parameter
sets, a uniform ring replay buffer, linear epsilon decay and RMSprop updates.
Gradients are hand-derived and verified against finite differences in the test
suite.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class EpsilonSchedule:
    """Linear exploration decay: start at step 0 down to end at decay_steps."""

    decay_steps: int
    start: float = 1.0
    end: float = 0.01

    def __post_init__(self):
        if self.decay_steps <= 0:
            raise ValueError("decay_steps must be positive")
        if not (0.0 <= self.end <= self.start <= 1.0):
            raise ValueError("need 0 <= end <= start <= 1")

    def at(self, step: int) -> float:
        if step < 0:
            raise ValueError("step must be nonnegative")
        frac = min(step / self.decay_steps, 1.0)
        return self.start + (self.end - self.start) * frac


class ReplayBuffer:
    """Fixed-capacity ring of transitions with uniform no-replacement sampling."""

    def __init__(self, capacity: int = 10_000, batch_size: int = 1024, state_dim: int = 23):
        if capacity <= 0 or batch_size <= 0:
            raise ValueError("capacity and batch_size must be positive")
        if batch_size > capacity:
            raise ValueError("batch_size cannot exceed capacity")
        self.capacity = capacity
        self.batch_size = batch_size
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.terminals = np.zeros(capacity, dtype=bool)
        self._next = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def push(self, state, action: int, reward: float, next_state, terminal: bool) -> None:
        if not np.isfinite(reward):
            raise ValueError("reward must be finite")
        i = self._next
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self.terminals[i] = terminal
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, rng: np.random.Generator, batch_size: int | None = None):
        n = batch_size or self.batch_size
        if n > self._size:
            raise ValueError(f"cannot sample {n} from buffer of {self._size}")
        idx = rng.choice(self._size, size=n, replace=False)
        return (
            self.states[idx],
            self.actions[idx],
            self.rewards[idx],
            self.next_states[idx],
            self.terminals[idx],
        )


def _glorot_layers(dims: tuple[int, ...], rng: np.random.Generator):
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        b = np.zeros(fan_out)
        layers.append([w, b])
    return layers


class QNetwork:
    """ReLU MLP scoring the discrete actions, with a lagged target copy."""

    def __init__(
        self,
        state_dim: int = 23,
        n_actions: int = 7,
        hidden: tuple[int, ...] = (128, 64),
        discount: float = 0.95,
        learning_rate: float = 1e-4,
        target_sync_period: int = 100,
        rms_decay: float = 0.99,
        rms_fuzz: float = 1e-8,
        grad_clip: float | None = None,
        rng: np.random.Generator | None = None,
    ):
        if not 0.0 <= discount < 1.0:
            raise ValueError("discount must lie in [0, 1)")
        if target_sync_period <= 0:
            raise ValueError("target_sync_period must be positive")
        self.state_dim = state_dim
        self.n_actions = n_actions
        self.hidden = tuple(hidden)
        self.discount = discount
        self.learning_rate = learning_rate
        self.target_sync_period = target_sync_period
        self.rms_decay = rms_decay
        self.rms_fuzz = rms_fuzz
        self.grad_clip = grad_clip
        rng = rng or np.random.default_rng()
        dims = (state_dim, *self.hidden, n_actions)
        self.layers = _glorot_layers(dims, rng)
        self.target_layers = [[w.copy(), b.copy()] for w, b in self.layers]
        self.rms = [[np.zeros_like(w), np.zeros_like(b)] for w, b in self.layers]

    # ---- inference -------------------------------------------------------

    def forward(self, states, which: str = "main") -> np.ndarray:
        """Q-values for one state (1-D in, 1-D out) or a batch (2-D)."""
        x = np.asarray(states, dtype=np.float64)
        if not np.all(np.isfinite(x)):
            raise ValueError("state contains non-finite entries")
        single = x.ndim == 1
        if single:
            x = x[None, :]
        layers = self.layers if which == "main" else self.target_layers
        for w, b in layers[:-1]:
            x = np.maximum(x @ w + b, 0.0)
        w, b = layers[-1]
        q = x @ w + b
        return q[0] if single else q

    def select_action(self, state, epsilon: float, rng: np.random.Generator) -> int:
        """Epsilon-greedy pick; greedy ties go to the lowest action index."""
        if not 0.0 <= epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if epsilon > 0.0 and rng.random() < epsilon:
            return int(rng.integers(self.n_actions))
        return int(np.argmax(self.forward(state)))

    def td_targets(self, rewards, next_states, terminals) -> np.ndarray:
        """Double-Q targets: main net picks the action, target net prices it.

        Terminal transitions reduce to the bare reward.
        """
        rewards = np.asarray(rewards, dtype=np.float64)
        terminals = np.asarray(terminals, dtype=bool)
        q_main = self.forward(next_states, which="main")
        if q_main.ndim == 1:
            q_main = q_main[None, :]
        best = np.argmax(q_main, axis=1)
        q_target = self.forward(next_states, which="target")
        if q_target.ndim == 1:
            q_target = q_target[None, :]
        bootstrap = q_target[np.arange(len(best)), best]
        return rewards + self.discount * bootstrap * ~terminals

    # ---- learning --------------------------------------------------------

    def loss_and_grads(self, states, actions, targets):
        """MSE between Q(s, a) and fixed targets, plus gradients for theta."""
        x = np.asarray(states, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        actions = np.asarray(actions, dtype=np.int64)
        targets = np.asarray(targets, dtype=np.float64)
        n = x.shape[0]

        pre = []       # pre-activations per layer
        acts = [x]     # post-activations, starting with the input
        h = x
        for w, b in self.layers[:-1]:
            z = h @ w + b
            pre.append(z)
            h = np.maximum(z, 0.0)
            acts.append(h)
        w, b = self.layers[-1]
        q = h @ w + b

        rows = np.arange(n)
        err = q[rows, actions] - targets
        loss = float(np.mean(err**2))

        dq = np.zeros_like(q)
        dq[rows, actions] = 2.0 * err / n
        grads = [None] * len(self.layers)
        delta = dq
        for li in range(len(self.layers) - 1, -1, -1):
            w, _ = self.layers[li]
            grads[li] = [acts[li].T @ delta, delta.sum(axis=0)]
            if li > 0:
                delta = (delta @ w.T) * (pre[li - 1] > 0.0)
        return loss, grads

    def apply_gradients(self, grads) -> None:
        """One RMSprop step on the main parameters; the target copy is untouched."""
        if self.grad_clip is not None:
            norm = np.sqrt(sum(float((g**2).sum()) for pair in grads for g in pair))
            if norm > self.grad_clip:
                scale = self.grad_clip / norm
                grads = [[g * scale for g in pair] for pair in grads]
        for (w, b), (gw, gb), (mw, mb) in zip(self.layers, grads, self.rms):
            mw *= self.rms_decay
            mw += (1.0 - self.rms_decay) * gw**2
            mb *= self.rms_decay
            mb += (1.0 - self.rms_decay) * gb**2
            w -= self.learning_rate * gw / (np.sqrt(mw) + self.rms_fuzz)
            b -= self.learning_rate * gb / (np.sqrt(mb) + self.rms_fuzz)

    def train_step(self, buffer: ReplayBuffer, rng: np.random.Generator) -> float | None:
        """One minibatch update; returns the loss, or None while the buffer is short."""
        if len(buffer) < buffer.batch_size:
            return None
        states, actions, rewards, next_states, terminals = buffer.sample(rng)
        targets = self.td_targets(rewards, next_states, terminals)
        loss, grads = self.loss_and_grads(states, actions, targets)
        self.apply_gradients(grads)
        return loss

    def sync_target(self, global_step: int) -> bool:
        """Copy main -> target on every sync-period boundary; reports whether it fired."""
        if global_step % self.target_sync_period != 0:
            return False
        for (w, b), (tw, tb) in zip(self.layers, self.target_layers):
            tw[:] = w
            tb[:] = b
        return True


# ---- persistence ----------------------------------------------------------


def save_checkpoint(path, net: QNetwork, global_step: int, schedule: EpsilonSchedule) -> None:
    """Serialize the full learner state; float arrays round-trip bit-exactly."""
    payload = {
        "version": np.int64(CHECKPOINT_VERSION),
        "state_dim": np.int64(net.state_dim),
        "n_actions": np.int64(net.n_actions),
        "hidden": np.asarray(net.hidden, dtype=np.int64),
        "discount": np.float64(net.discount),
        "learning_rate": np.float64(net.learning_rate),
        "target_sync_period": np.int64(net.target_sync_period),
        "rms_decay": np.float64(net.rms_decay),
        "rms_fuzz": np.float64(net.rms_fuzz),
        "grad_clip": np.float64(net.grad_clip if net.grad_clip is not None else np.nan),
        "global_step": np.int64(global_step),
        "eps_start": np.float64(schedule.start),
        "eps_end": np.float64(schedule.end),
        "eps_decay_steps": np.int64(schedule.decay_steps),
    }
    for i, ((w, b), (tw, tb), (mw, mb)) in enumerate(zip(net.layers, net.target_layers, net.rms)):
        payload[f"main_w{i}"] = w
        payload[f"main_b{i}"] = b
        payload[f"target_w{i}"] = tw
        payload[f"target_b{i}"] = tb
        payload[f"rms_w{i}"] = mw
        payload[f"rms_b{i}"] = mb
    np.savez(path, **payload)


def load_checkpoint(path) -> tuple[QNetwork, int, EpsilonSchedule]:
    """Rebuild (network, global_step, epsilon schedule) from save_checkpoint output."""
    with np.load(path) as data:
        version = int(data["version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        grad_clip = float(data["grad_clip"])
        net = QNetwork(
            state_dim=int(data["state_dim"]),
            n_actions=int(data["n_actions"]),
            hidden=tuple(int(h) for h in data["hidden"]),
            discount=float(data["discount"]),
            learning_rate=float(data["learning_rate"]),
            target_sync_period=int(data["target_sync_period"]),
            rms_decay=float(data["rms_decay"]),
            rms_fuzz=float(data["rms_fuzz"]),
            grad_clip=None if np.isnan(grad_clip) else grad_clip,
            rng=np.random.default_rng(0),
        )
        for i in range(len(net.layers)):
            net.layers[i][0][:] = data[f"main_w{i}"]
            net.layers[i][1][:] = data[f"main_b{i}"]
            net.target_layers[i][0][:] = data[f"target_w{i}"]
            net.target_layers[i][1][:] = data[f"target_b{i}"]
            net.rms[i][0][:] = data[f"rms_w{i}"]
            net.rms[i][1][:] = data[f"rms_b{i}"]
        schedule = EpsilonSchedule(
            decay_steps=int(data["eps_decay_steps"]),
            start=float(data["eps_start"]),
            end=float(data["eps_end"]),
        )
        return net, int(data["global_step"]), schedule
