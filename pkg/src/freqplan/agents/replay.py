from __future__ import annotations

import numpy as np


class ReplayBuffer:
    """Fixed-capacity FIFO of transitions backed by preallocated arrays."""

    def __init__(self, capacity: int, state_shape: tuple[int, ...], dtype=np.float32):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.states = np.zeros((capacity,) + tuple(state_shape), dtype=dtype)
        self.next_states = np.zeros_like(self.states)
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity, dtype=np.float32)
        self.dones = np.zeros(capacity, dtype=np.float32)
        self.pos = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def add(self, state, action: int, reward: float, next_state, done: bool) -> None:
        i = self.pos
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.dones[i] = float(done)
        if done or next_state is None:
            self.next_states[i] = 0.0
        else:
            self.next_states[i] = next_state
        self.pos = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(self.size, size=batch_size)

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = self.sample_indices(batch_size, rng)
        return (self.states[idx], self.actions[idx], self.rewards[idx],
                self.next_states[idx], self.dones[idx])
