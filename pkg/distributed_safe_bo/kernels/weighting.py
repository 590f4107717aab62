from typing import Any, Dict

import numpy as np

from distributed_safe_bo.errors import ConfigError, InputError
from distributed_safe_bo.kernels.base_kernel import BaseKernel


def brownian(t: np.ndarray, t_prime: np.ndarray) -> np.ndarray:
    return np.minimum(t, t_prime)


def reverse_brownian(t: np.ndarray, t_prime: np.ndarray, horizon: float) -> np.ndarray:
    return np.minimum(horizon - t, horizon - t_prime)


class Weighting(BaseKernel):
    kind = "Weighting"

    def __init__(self, horizon: int, inputs: str = "all"):
        """
        Weighting kernel k_W(t, t') = min(t, t')·min(T − t, T − t') / T² on [0, T]².

        It vanishes at both ends of the horizon and peaks at T/2, where k_W(T/2, T/2) = 1/4. Multiplying a rough
        kernel by k_W lets abrupt changes happen mid-run while the start and the end stay smooth.

        Args:
            horizon: T, an integer ≥ 2.
            inputs: column selection; the selected input must be one-dimensional.

        Examples:
            >>> Weighting(horizon=50).eval(25., 25.)
            0.25
        """
        super().__init__(inputs=inputs)
        if isinstance(horizon, bool) or int(horizon) != horizon or horizon < 2:
            raise ConfigError(f"Weighting horizon must be an integer >= 2, got {horizon}", "horizon")
        self._horizon = int(horizon)

    @property
    def horizon(self) -> int:
        return self._horizon

    def _check(self, t: np.ndarray) -> np.ndarray:
        if t.shape[1] != 1:
            raise InputError(f"Weighting kernel acts on one time column, got {t.shape[1]}", t.shape)
        t = t[:, 0]
        if np.any(t < 0) or np.any(t > self._horizon):
            raise InputError(f"time outside [0, {self._horizon}]", (float(t.min()), float(t.max())))
        return t

    def _evaluate(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        t1 = self._check(x1)[:, None]
        t2 = self._check(x2)[None, :]
        horizon = float(self._horizon)
        return brownian(t1, t2) * reverse_brownian(t1, t2, horizon) / (horizon * horizon)

    def _paired(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        t1, t2 = self._check(x1), self._check(x2)
        horizon = float(self._horizon)
        return brownian(t1, t2) * reverse_brownian(t1, t2, horizon) / (horizon * horizon)

    def _diag(self, x: np.ndarray) -> np.ndarray:
        return self._paired(x, x)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "horizon": self._horizon, "inputs": self.inputs}
