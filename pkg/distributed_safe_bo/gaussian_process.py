import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve_triangular

from distributed_safe_bo.errors import ConfigError, InputError, NumericalError
from distributed_safe_bo.kernels.base_kernel import BaseKernel, as_points

logger = logging.getLogger(__name__)

JITTER_START = 1e-10
JITTER_MAX = 1e-4
PREDICT_CHUNK = 65536


@dataclass
class Dataset:
    """Observed inputs (one row per sample), their rewards and the observation noise level."""

    inputs: np.ndarray
    targets: np.ndarray
    noise_std: float = 0.

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=float)
        self.targets = np.asarray(self.targets, dtype=float).ravel()
        if self.inputs.ndim == 1:
            self.inputs = self.inputs.reshape(len(self.targets), -1) if len(self.targets) else self.inputs[:, None]
        if self.inputs.shape[0] != self.targets.shape[0]:
            raise InputError(
                f"inputs and targets differ in length: {self.inputs.shape[0]} vs {self.targets.shape[0]}",
                (self.inputs.shape, self.targets.shape),
            )
        if not self.noise_std >= 0:
            raise ConfigError(f"noise_std must be nonnegative, got {self.noise_std}", "noise_std")

    def __len__(self) -> int:
        return self.targets.shape[0]


@dataclass
class Posterior:
    """
    Zero-mean GP posterior conditioned on a dataset.

    Attributes:
        kernel: prior covariance.
        train_inputs: conditioning inputs.
        log_det_term: ln det(I + σ⁻²K) with σ² the effective noise (observation noise plus jitter).
        noise_variance: effective noise σ² + jitter used in the factorization.
    """

    kernel: BaseKernel
    train_inputs: np.ndarray
    log_det_term: float = 0.
    noise_variance: float = 0.
    _chol: Optional[Tuple[np.ndarray, bool]] = field(default=None, repr=False)
    _alpha: Optional[np.ndarray] = field(default=None, repr=False)

    def __len__(self) -> int:
        return self.train_inputs.shape[0]

    def predict(self, query: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Posterior mean and standard deviation at the query rows.

        Returns:
            tuple (mean, std), each of shape (m,).
        """
        query = as_points(query)
        means, stds = [], []
        for start in range(0, max(query.shape[0], 1), PREDICT_CHUNK):
            chunk = query[start:start + PREDICT_CHUNK]
            if chunk.shape[0] == 0:
                break
            prior_var = self.kernel.diag(chunk)
            if self._chol is None:
                means.append(np.zeros(chunk.shape[0]))
                stds.append(np.sqrt(np.maximum(prior_var, 0.)))
                continue
            cross = self.kernel(self.train_inputs, chunk)
            means.append(cross.T @ self._alpha)
            v = solve_triangular(self._chol[0], cross, lower=self._chol[1])
            stds.append(np.sqrt(np.maximum(prior_var - np.sum(v * v, axis=0), 0.)))
        if not means:
            return np.zeros(0), np.zeros(0)
        return np.concatenate(means), np.concatenate(stds)

    def mean(self, query: np.ndarray) -> np.ndarray:
        return self.predict(query)[0]

    def std(self, query: np.ndarray) -> np.ndarray:
        return self.predict(query)[1]


def fit(dataset: Dataset, kernel: BaseKernel) -> Posterior:
    """
    Conditions a zero-mean GP on the dataset through a Cholesky factorization of K + (σ² + jitter)I.

    The jitter starts at 1e-10 times the mean prior variance and grows tenfold up to 1e-4 times that value.

    Raises:
        NumericalError: the factorization fails at the largest jitter. The message gives the dataset size and a
            condition number estimate.
    """
    if len(dataset) == 0:
        width = dataset.inputs.shape[1] if dataset.inputs.ndim == 2 else 0
        return Posterior(kernel=kernel, train_inputs=np.zeros((0, width)))

    inputs = dataset.inputs
    k = kernel(inputs)
    k = np.triu(k) + np.triu(k, 1).T
    trace_mean = max(float(np.mean(np.diag(k))), np.finfo(float).tiny)
    noise = dataset.noise_std ** 2
    jitter = JITTER_START
    while True:
        noise_variance = noise + jitter * trace_mean
        try:
            chol = cho_factor(k + noise_variance * np.eye(len(dataset)), lower=True, check_finite=True)
            break
        except LinAlgError:
            if jitter >= JITTER_MAX:
                raise NumericalError(
                    f"Cholesky factorization failed for {len(dataset)} observations "
                    f"(condition estimate {np.linalg.cond(k):.3e})",
                    len(dataset),
                )
            jitter *= 10.
            logger.debug("escalating jitter to %.1e for %d observations", jitter, len(dataset))

    alpha = cho_solve(chol, dataset.targets)
    log_det = 2. * np.sum(np.log(np.diag(chol[0]))) - len(dataset) * np.log(noise_variance)
    return Posterior(kernel=kernel, train_inputs=inputs, log_det_term=float(log_det),
                     noise_variance=noise_variance, _chol=chol, _alpha=alpha)


def beta(posterior: Posterior, bound_b: float, noise_std: float, delta: float = 0.01) -> float:
    """
    Confidence scaling β = B + σ·sqrt(2(ln(1/δ) + ½·ln det(I + σ⁻²K))).

    Takes the posterior fitted to the dataset instead of the dataset itself, so the log-determinant computed by
    :func:`fit` is reused.

    Args:
        posterior: fitted posterior, provides the cached log-determinant term.
        bound_b: RKHS norm upper bound B ≥ 0.
        noise_std: observation noise σ ≥ 0; with σ = 0 the result is B.
        delta: confidence level parameter in (0, 1).
    """
    if not 0. < delta < 1.:
        raise ConfigError(f"delta must lie in (0, 1), got {delta}", "delta")
    if bound_b < 0:
        raise ConfigError(f"bound_b must be nonnegative, got {bound_b}", "bound_b")
    if noise_std == 0:
        return float(bound_b)
    return float(bound_b + noise_std * np.sqrt(2. * (np.log(1. / delta) + 0.5 * posterior.log_det_term)))


def confidence_bounds(posterior: Posterior, beta_value: float, query: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    mean, std = posterior.predict(query)
    return bounds_from_moments(mean, std, beta_value)


def bounds_from_moments(mean: np.ndarray, std: np.ndarray, beta_value: float) -> Tuple[np.ndarray, np.ndarray]:
    if beta_value < 0:
        raise ConfigError(f"beta must be nonnegative, got {beta_value}", "beta")
    return mean - beta_value * std, mean + beta_value * std
