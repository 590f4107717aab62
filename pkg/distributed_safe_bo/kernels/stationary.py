from abc import abstractmethod
from typing import Any, Dict

import numpy as np
from scipy.spatial.distance import cdist

from distributed_safe_bo.errors import ConfigError
from distributed_safe_bo.kernels.base_kernel import BaseKernel

SQRT3 = np.sqrt(3.)
SQRT5 = np.sqrt(5.)


class StationaryKernel(BaseKernel):
    def __init__(self, lengthscale: float, output_scale: float = 1., inputs: str = "all"):
        """
        Isotropic kernel σ_f²·ρ(r/ℓ) of the unscaled Euclidean distance r between two points.

        Args:
            lengthscale: ℓ > 0, shared by all selected coordinates.
            output_scale: σ_f > 0; the kernel is scaled by σ_f².
            inputs: column selection, see :class:`BaseKernel`.
        """
        super().__init__(inputs=inputs)
        if not lengthscale > 0:
            raise ConfigError(f"{self.kind} lengthscale must be positive, got {lengthscale}", "lengthscale")
        if not output_scale > 0:
            raise ConfigError(f"{self.kind} output_scale must be positive, got {output_scale}", "output_scale")
        self._lengthscale = float(lengthscale)
        self._output_scale = float(output_scale)

    @property
    def lengthscale(self) -> float:
        return self._lengthscale

    @property
    def output_scale(self) -> float:
        return self._output_scale

    @property
    def variance(self) -> float:
        return self._output_scale ** 2

    @abstractmethod
    def profile(self, r: np.ndarray) -> np.ndarray:
        """Correlation ρ as a function of the scaled distance r/ℓ; ρ(0) = 1."""
        ...

    def _evaluate(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        return self.variance * self.profile(cdist(x1, x2) / self._lengthscale)

    def _paired(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        return self.variance * self.profile(np.sqrt(np.sum((x1 - x2) ** 2, axis=1)) / self._lengthscale)

    def _diag(self, x: np.ndarray) -> np.ndarray:
        return np.full(x.shape[0], self.variance)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "lengthscale": self._lengthscale, "output_scale": self._output_scale,
                "inputs": self.inputs}


class RBF(StationaryKernel):
    kind = "RBF"

    def profile(self, r):
        return np.exp(-0.5 * r ** 2)


class Matern12(StationaryKernel):
    kind = "Matern12"

    def profile(self, r):
        return np.exp(-r)


class Matern32(StationaryKernel):
    kind = "Matern32"

    def profile(self, r):
        return (1. + SQRT3 * r) * np.exp(-SQRT3 * r)


class Matern52(StationaryKernel):
    kind = "Matern52"

    def profile(self, r):
        return (1. + SQRT5 * r + 5. / 3. * r ** 2) * np.exp(-SQRT5 * r)
