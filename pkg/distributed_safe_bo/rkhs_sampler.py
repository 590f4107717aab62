import logging
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from distributed_safe_bo.errors import ConfigError, InputError
from distributed_safe_bo.kernels.base_kernel import BaseKernel, as_points
from distributed_safe_bo.kernels.psd import gram

logger = logging.getLogger(__name__)

Bounds = Sequence[Tuple[float, float]]
EVAL_CHUNK = 8192


class PreRkhsFunction:
    def __init__(self, centers: np.ndarray, coefficients: np.ndarray, kernel: BaseKernel):
        """
        Finite kernel expansion f(x) = Σ_j c_j·k(x, x_j) with RKHS norm sqrt(cᵀGc).

        Args:
            centers: array of shape (m, d).
            coefficients: array of shape (m,).
            kernel: kernel k of the expansion.
        """
        self._centers = as_points(centers)
        self._coefficients = np.asarray(coefficients, dtype=float).ravel()
        if self._centers.shape[0] != self._coefficients.shape[0]:
            raise InputError("centers and coefficients differ in length",
                             (self._centers.shape, self._coefficients.shape))
        self._kernel = kernel

    @property
    def centers(self) -> np.ndarray:
        return self._centers

    @property
    def coefficients(self) -> np.ndarray:
        return self._coefficients

    @property
    def kernel(self) -> BaseKernel:
        return self._kernel

    @property
    def dim(self) -> int:
        return self._centers.shape[1]

    def norm(self) -> float:
        """RKHS norm recomputed from the Gram matrix of the centers."""
        return float(np.sqrt(max(self.squared_norm(), 0.)))

    def squared_norm(self) -> float:
        return float(self._coefficients @ gram(self._kernel, self._centers) @ self._coefficients)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return evaluate(self, x)

    def scaled(self, factor: float) -> "PreRkhsFunction":
        return PreRkhsFunction(self._centers, self._coefficients * factor, self._kernel)


def sample(
    kernel: BaseKernel,
    num_centers: int,
    target_norm: float,
    bounds: Bounds,
    rng: Union[int, np.random.Generator, None] = None,
    coefficient_range: Tuple[float, float] = (-1., 1.),
) -> PreRkhsFunction:
    """
    Samples a random function of the pre-RKHS of `kernel` with RKHS norm exactly `target_norm`.

    Centers are uniform in the box and coefficients uniform in `coefficient_range` before they are scaled by
    target_norm / sqrt(cᵀGc).

    Args:
        kernel: kernel of the expansion.
        num_centers: number of centers m ≥ 1.
        target_norm: RKHS norm of the result, > 0.
        bounds: one (low, high) pair per input dimension.
        rng: seed or generator.
        coefficient_range: pre-scaling coefficient range.

    Returns:
        :obj:`PreRkhsFunction`.

    Examples:
        >>> from distributed_safe_bo.kernels import Matern32
        >>> f = sample(Matern32(lengthscale=0.4), 100, 1., [(0., 1.), (0., 1.)], rng=0)
        >>> abs(f.norm() - 1.) < 1e-9
        True
    """
    if num_centers < 1:
        raise ConfigError(f"num_centers must be >= 1, got {num_centers}", "num_centers")
    if not target_norm > 0:
        raise ConfigError(f"target_norm must be positive, got {target_norm}", "target_norm")
    box = check_bounds(bounds)
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)

    for attempt in range(2):
        centers = rng.uniform(box[:, 0], box[:, 1], size=(num_centers, box.shape[0]))
        coefficients = rng.uniform(coefficient_range[0], coefficient_range[1], size=num_centers)
        squared = float(coefficients @ gram(kernel, centers) @ coefficients)
        if squared > 0:
            return PreRkhsFunction(centers, coefficients * (target_norm / np.sqrt(squared)), kernel)
        logger.warning("degenerate pre-RKHS draw (cᵀGc = %s), resampling", squared)
    raise ConfigError("could not draw a pre-RKHS function with positive norm", squared)


def evaluate(func: PreRkhsFunction, x: np.ndarray) -> np.ndarray:
    x = as_points(x)
    values = [func.kernel(chunk, func.centers) @ func.coefficients
              for chunk in np.array_split(x, max(1, -(-x.shape[0] // EVAL_CHUNK)))]
    return np.concatenate(values) if values else np.zeros(0)


def quantile_threshold(func: PreRkhsFunction, grid: np.ndarray, q: float) -> float:
    """
    Empirical q-quantile of the function over an evaluation grid, lower interpolation.

    Examples:
        values 1..10 with q = 0.2 give 2.
    """
    if not 0. < q < 1.:
        raise ConfigError(f"quantile must lie in (0, 1), got {q}", "quantile")
    grid = as_points(grid)
    if grid.shape[0] == 0:
        raise InputError("quantile threshold needs a non-empty grid", grid.shape)
    return quantile_of(func(grid), q)


def quantile_of(values: np.ndarray, q: float) -> float:
    return float(np.quantile(np.asarray(values, dtype=float), q, method="lower"))


def uniform_points(bounds: Bounds, num_points: int, rng: Union[int, np.random.Generator, None] = None) -> np.ndarray:
    box = check_bounds(bounds)
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    return rng.uniform(box[:, 0], box[:, 1], size=(num_points, box.shape[0]))


def check_bounds(bounds: Optional[Bounds]) -> np.ndarray:
    box = np.asarray(bounds, dtype=float)
    if box.ndim != 2 or box.shape[1] != 2 or box.shape[0] == 0:
        raise ConfigError(f"bounds must be a list of (low, high) pairs, got {bounds}", "bounds")
    if np.any(box[:, 1] <= box[:, 0]):
        raise ConfigError(f"degenerate box {box.tolist()}", "bounds")
    return box
