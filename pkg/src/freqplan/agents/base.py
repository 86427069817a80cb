"""Action-selection helpers shared by the agents."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from freqplan.environment import ActionSpace, EpisodeState, n_actions
from freqplan.errors import ContractError, StateError


def random_action(st: EpisodeState, space: ActionSpace | None, rng: np.random.Generator) -> int:
    """Uniform over the action set of the episode's action space."""
    if st.done:
        raise StateError("no action to take in a finished episode")
    space = st.space if space is None else ActionSpace(space)
    return int(rng.integers(n_actions(space, st.scenario.n_fg, st.scenario.n_fs)))


def greedy(q) -> int:
    # np.argmax returns the first maximal index
    return int(np.argmax(q))


def epsilon_greedy(q_values, epsilon: float, rng: np.random.Generator) -> int:
    q = np.asarray(q_values)
    if q.size == 0:
        raise ContractError("epsilon_greedy needs at least one action value")
    if not 0.0 <= epsilon <= 1.0:
        raise ContractError(f"epsilon must be in [0, 1], got {epsilon}")
    if epsilon > 0 and rng.random() < epsilon:
        return int(rng.integers(q.size))
    return greedy(q)


@dataclass(frozen=True)
class EpsilonSchedule:
    """Linear decay from ``start`` to ``end`` over the first ``fraction`` of ``total`` steps."""

    start: float = 1.0
    end: float = 0.05
    fraction: float = 0.2
    total: int = 1

    def __call__(self, step: int) -> float:
        horizon = max(1.0, self.fraction * self.total)
        frac = min(1.0, step / horizon)
        return self.start + frac * (self.end - self.start)
