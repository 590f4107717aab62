from abc import ABC, abstractmethod

import numpy as np

from distributed_safe_bo.rkhs_sampler import PreRkhsFunction


class BaseOracle(ABC):
    def __init__(self, num_agents: int, param_dim: int = 1):
        """
        BaseOracle which has to be implemented by all reward functions f of the joint parameter.

        Args:
            num_agents: N.
            param_dim: parameters per agent n.
        """
        self._num_agents = num_agents
        self._param_dim = param_dim
        self._calls = 0

    @property
    def num_agents(self) -> int:
        return self._num_agents

    @property
    def param_dim(self) -> int:
        return self._param_dim

    @property
    def calls(self) -> int:
        return self._calls

    @abstractmethod
    def evaluate(self, joint: np.ndarray) -> float:
        """
        Noiseless reward of a joint parameter.

        Args:
            joint: array of shape (N, n).
        Returns:
            the reward f(joint).
        """
        ...

    def __call__(self, joint: np.ndarray) -> float:
        joint = np.asarray(joint, dtype=float).reshape(self._num_agents, self._param_dim)
        self._calls += 1
        return float(self.evaluate(joint))


class ConstantOracle(BaseOracle):
    def __init__(self, value: float, num_agents: int, param_dim: int = 1):
        super().__init__(num_agents, param_dim)
        self._value = float(value)

    def evaluate(self, joint: np.ndarray) -> float:
        return self._value


class RkhsRewardOracle(BaseOracle):
    def __init__(self, function: PreRkhsFunction, num_agents: int, param_dim: int = 1):
        """Synthetic reward given by a pre-RKHS function over the flattened joint parameter."""
        super().__init__(num_agents, param_dim)
        self._function = function

    @property
    def function(self) -> PreRkhsFunction:
        return self._function

    def evaluate(self, joint: np.ndarray) -> float:
        return float(self._function(joint.reshape(1, -1))[0])
