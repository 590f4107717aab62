from abc import ABC, abstractmethod
from typing import Any, Dict, Optional

import numpy as np

from distributed_safe_bo.errors import ConfigError, InputError

INPUT_SELECTIONS = ("all", "spatial", "time")


class BaseKernel(ABC):
    kind: str = ""

    def __init__(self, inputs: str = "all"):
        """
        BaseKernel which has to be implemented by all kernel expression nodes.

        Inputs are 2-D arrays with one row per point. Spatio-temporal inputs carry the iteration index in
        their last column; `inputs` selects the columns this node acts on.

        Args:
            inputs: "all" for every column, "spatial" for all but the last column, "time" for the last column.
        """
        if inputs not in INPUT_SELECTIONS:
            raise ConfigError(f"inputs must be one of {INPUT_SELECTIONS}, got '{inputs}'", inputs)
        self._inputs = inputs

    @property
    def inputs(self) -> str:
        return self._inputs

    def select(self, x: np.ndarray) -> np.ndarray:
        if self._inputs == "spatial":
            return x[:, :-1]
        if self._inputs == "time":
            return x[:, -1:]
        return x

    @abstractmethod
    def _evaluate(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        """
        Evaluates the kernel between all row pairs of already selected inputs.

        Args:
            x1: array of shape (m1, d).
            x2: array of shape (m2, d).

        Returns:
            array of shape (m1, m2).
        """
        ...

    @abstractmethod
    def _diag(self, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        ...

    def __call__(self, x1: np.ndarray, x2: Optional[np.ndarray] = None) -> np.ndarray:
        """
        Kernel matrix between the rows of `x1` and `x2` (or `x1` with itself).

        Examples:
            >>> from distributed_safe_bo.kernels import RBF
            >>> RBF(lengthscale=1., output_scale=2.)(np.zeros((1, 3)))
            array([[4.]])
        """
        x1 = as_points(x1)
        x2 = x1 if x2 is None else as_points(x2)
        if x1.shape[1] != x2.shape[1]:
            raise InputError(f"dimension mismatch: {x1.shape[1]} vs {x2.shape[1]}", (x1.shape, x2.shape))
        return self._evaluate(self.select(x1), self.select(x2))

    def _paired(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        return np.array([self._evaluate(x1[i:i + 1], x2[i:i + 1])[0, 0] for i in range(x1.shape[0])])

    def diag(self, x: np.ndarray) -> np.ndarray:
        return self._diag(self.select(as_points(x)))

    def paired(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        """k(x1[i], x2[i]) for every row i of two equally long arrays."""
        x1, x2 = as_points(x1), as_points(x2)
        if x1.shape != x2.shape:
            raise InputError(f"paired evaluation needs equal shapes, got {x1.shape} and {x2.shape}",
                             (x1.shape, x2.shape))
        return self._paired(self.select(x1), self.select(x2))

    def eval(self, x, x_prime) -> float:
        """Scalar evaluation k(x, x') of two single points."""
        return float(self(np.atleast_1d(np.asarray(x, dtype=float))[None, :],
                          np.atleast_1d(np.asarray(x_prime, dtype=float))[None, :])[0, 0])

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.to_dict()})"


def as_points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise InputError(f"expected a 2-D array of points, got shape {x.shape}", x.shape)
    return x
