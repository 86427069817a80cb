"""Deep Q-Network learner: replay buffer, target network, Huber TD loss."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from freqplan.agents.base import EpsilonSchedule, epsilon_greedy, greedy
from freqplan.agents.replay import ReplayBuffer
from freqplan.errors import ConfigError
from freqplan.nn.optim import Adam, clip_grad_norm
from freqplan.nn.policy import PolicyNet


@dataclass
class DQNConfig:
    gamma: float = 0.1
    lr: float = 1e-4
    batch_size: int = 32
    buffer_size: int = 100_000
    target_sync: int = 1000         # environment steps between target copies
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_fraction: float = 0.2
    learning_starts: int = 1000     # environment steps before the first update
    train_every: int = 8            # environment steps between gradient steps
    gradient_steps: int = 1
    huber_delta: float = 1.0
    max_grad_norm: float | None = None

    def validate(self) -> None:
        if not 0 < self.gamma < 1:
            raise ConfigError(f"gamma must be in (0, 1), got {self.gamma}")
        for name in ("batch_size", "buffer_size", "target_sync", "train_every", "gradient_steps"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.lr < 0:
            raise ConfigError(f"lr must be >= 0, got {self.lr}")
        if not 0 <= self.eps_end <= self.eps_start <= 1:
            raise ConfigError("need 0 <= eps_end <= eps_start <= 1")

    def to_dict(self) -> dict:
        return asdict(self)


def td_target(rewards, next_states, dones, target: PolicyNet | None, gamma: float,
              next_q=None) -> np.ndarray:
    """``r + gamma * max_a' Q_target(s', a')``, or just ``r`` at terminal transitions.

    ``next_q`` may be passed instead of a network (precomputed target values).
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    if next_q is None:
        next_q = target.forward(next_states)[0]
    best = np.asarray(next_q, dtype=np.float64).max(axis=1)
    return rewards + gamma * (1.0 - dones) * best


def huber_grad(diff: np.ndarray, delta: float) -> tuple[float, np.ndarray]:
    """Mean Huber loss and its gradient with respect to ``diff``."""
    a = np.abs(diff)
    loss = np.where(a <= delta, 0.5 * diff * diff, delta * (a - 0.5 * delta))
    return float(loss.mean()), np.clip(diff, -delta, delta) / diff.size


class DQNAgent:
    def __init__(self, net: PolicyNet, cfg: DQNConfig, total_steps: int, rng: np.random.Generator):
        cfg.validate()
        self.cfg = cfg
        self.online = net
        self.target = net.copy()
        self.opt = Adam(net.params, lr=cfg.lr)
        self.rng = rng
        c = net.cfg
        self.buffer = ReplayBuffer(min(cfg.buffer_size, max(total_steps, cfg.batch_size)),
                                   (c.in_channels, c.n_fg, c.n_fs))
        self.schedule = EpsilonSchedule(cfg.eps_start, cfg.eps_end, cfg.eps_fraction, total_steps)
        self.env_steps = 0
        self.updates = 0
        self.last_sync = 0

    @property
    def epsilon(self) -> float:
        return self.schedule(self.env_steps)

    def act(self, states: np.ndarray, explore: bool = True) -> list[int]:
        q = self.online.forward(states)[0]
        eps = self.epsilon if explore else 0.0
        return [epsilon_greedy(row, eps, self.rng) if explore else greedy(row) for row in q]

    def observe(self, state, action, reward, next_state, done) -> float | None:
        """Store one transition and run any updates that fall due. Returns the last loss."""
        self.buffer.add(state, action, reward, next_state, done)
        self.env_steps += 1
        loss = None
        cfg = self.cfg
        if self.env_steps >= cfg.learning_starts and self.env_steps % cfg.train_every == 0:
            for _ in range(cfg.gradient_steps):
                out = self.learn_step()
                loss = out if out is not None else loss
        if self.env_steps - self.last_sync >= cfg.target_sync:
            self.sync_target()
        return loss

    def sync_target(self) -> None:
        for k, v in self.online.params.items():
            np.copyto(self.target.params[k], v)
        self.last_sync = self.env_steps

    def learn_step(self, batch=None) -> float | None:
        """One Huber-loss gradient step on a uniform replay sample.

        Returns None (and does nothing) while the buffer is smaller than a batch.
        """
        cfg = self.cfg
        if batch is None:
            if len(self.buffer) < cfg.batch_size:
                return None
            batch = self.buffer.sample(cfg.batch_size, self.rng)
        s, a, r, s2, d = batch
        y = td_target(r, s2, d, self.target, cfg.gamma)
        q, _, _, cache = self.online.forward(s)
        rows = np.arange(len(a))
        loss, dqa = huber_grad(q[rows, a].astype(np.float64) - y, cfg.huber_delta)
        dq = np.zeros_like(q)
        dq[rows, a] = dqa
        grads = self.online.backward(dq, None, cache)
        if cfg.max_grad_norm:
            clip_grad_norm(grads, cfg.max_grad_norm)
        self.opt.step(self.online.params, grads)
        self.updates += 1
        return loss
