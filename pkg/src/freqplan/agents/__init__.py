from freqplan.agents.base import EpsilonSchedule, epsilon_greedy, greedy, random_action
from freqplan.agents.dqn import DQNAgent, DQNConfig, td_target
from freqplan.agents.ppo import PPOAgent, PPOConfig, TrajectoryBatch, gae_advantages
from freqplan.agents.replay import ReplayBuffer

__all__ = [
    "DQNAgent", "DQNConfig", "EpsilonSchedule", "PPOAgent", "PPOConfig", "ReplayBuffer",
    "TrajectoryBatch", "epsilon_greedy", "gae_advantages", "greedy", "random_action", "td_target",
]
