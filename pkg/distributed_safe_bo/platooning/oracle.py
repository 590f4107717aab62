import numpy as np

from distributed_safe_bo.base_oracle import BaseOracle
from distributed_safe_bo.platooning.platoon import EpisodeTrace, PlatoonConfig, simulate_episode
from distributed_safe_bo.platooning.reward import platooning_reward


class PlatooningOracle(BaseOracle):
    def __init__(self, config: PlatoonConfig):
        """
        Reward of the K_P gains applied by the followers, one agent per follower. Deterministic for a fixed
        config.

        Args:
            config: platoon configuration including the sampled vehicle parameters.
        """
        super().__init__(num_agents=config.num_followers, param_dim=1)
        self._config = config

    @property
    def config(self) -> PlatoonConfig:
        return self._config

    def episode(self, joint: np.ndarray) -> EpisodeTrace:
        return simulate_episode(np.asarray(joint, dtype=float).ravel(), self._config)

    def evaluate(self, joint: np.ndarray) -> float:
        trace = self.episode(joint)
        return platooning_reward(trace, self._config.d_ref, self._config.num_followers, self._config.steps)


def platooning_oracle(joint_gains: np.ndarray, config: PlatoonConfig) -> float:
    return PlatooningOracle(config)(joint_gains)
