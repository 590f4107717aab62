from typing import Sequence, Tuple

import numpy as np

from distributed_safe_bo.errors import ConfigError
from distributed_safe_bo.kernels.base_kernel import BaseKernel
from distributed_safe_bo.kernels.composite import Product, Sum
from distributed_safe_bo.kernels.stationary import Matern12, Matern32, Matern52, RBF, StationaryKernel
from distributed_safe_bo.kernels.weighting import Weighting

BASE_KINDS = {cls.kind: cls for cls in (RBF, Matern12, Matern32, Matern52)}


def temporal_kernel(
    horizon: int,
    rbf_lengthscale: float,
    rbf_scale: float,
    ma12_lengthscale: float,
    ma12_scale: float,
    inputs: str = "all",
) -> Sum:
    """
    Temporal kernel k_T = k_RBF + k_W·k_Ma12.

    The smooth RBF part carries the slow drift of the reward, the Ornstein-Uhlenbeck part gated by the weighting
    kernel allows rough changes in the middle of the horizon only.

    Args:
        horizon: horizon T of the weighting kernel.
        rbf_lengthscale: ℓ_RBF.
        rbf_scale: σ_f of the RBF part.
        ma12_lengthscale: ℓ_Ma12.
        ma12_scale: σ_f of the Matérn12 part.
        inputs: column selection of the whole temporal kernel ("time" inside a spatio-temporal product).

    Returns:
        :obj:`Sum` kernel acting on a single time column.
    """
    return Sum(
        [
            RBF(lengthscale=rbf_lengthscale, output_scale=rbf_scale),
            Product([Weighting(horizon=horizon), Matern12(lengthscale=ma12_lengthscale, output_scale=ma12_scale)]),
        ],
        inputs=inputs,
    )


def spatio_temporal_kernel(
    spatial_lengthscale: float,
    spatial_scale: float,
    horizon: int,
    rbf_lengthscale: float,
    rbf_scale: float,
    ma12_lengthscale: float,
    ma12_scale: float,
) -> Product:
    """
    Product k_S(a, a')·k_T(t, t') with a Matérn52 spatial kernel over all but the last column and the temporal
    kernel over the last column.
    """
    return Product(
        [
            Matern52(lengthscale=spatial_lengthscale, output_scale=spatial_scale, inputs="spatial"),
            temporal_kernel(horizon, rbf_lengthscale, rbf_scale, ma12_lengthscale, ma12_scale, inputs="time"),
        ]
    )


def split_spatio_temporal(kernel: BaseKernel) -> Tuple[BaseKernel, BaseKernel]:
    """
    Returns the (spatial, temporal) factors of a spatio-temporal product.

    Raises:
        ConfigError: when the tree is not a two-factor product of a spatial and a time kernel.
    """
    if not isinstance(kernel, Product) or len(kernel.children) != 2:
        raise ConfigError("spatio-temporal kernel must be a Product of a spatial and a temporal kernel", kernel)
    by_inputs = {child.inputs: child for child in kernel.children}
    if set(by_inputs) != {"spatial", "time"}:
        raise ConfigError("spatio-temporal factors must act on 'spatial' and 'time' inputs", kernel.to_dict())
    return by_inputs["spatial"], by_inputs["time"]


def stack_input(spatial: Sequence[float], time: float) -> np.ndarray:
    return np.append(np.asarray(spatial, dtype=float).ravel(), float(time))


def eval_base(kind: str, lengthscale: float, output_scale: float, x, x_prime) -> float:
    if kind not in BASE_KINDS:
        raise ConfigError(f"unknown base kernel kind '{kind}'", kind)
    kernel: StationaryKernel = BASE_KINDS[kind](lengthscale=lengthscale, output_scale=output_scale)
    return kernel.eval(x, x_prime)


def eval_weighting(t: float, t_prime: float, horizon: int) -> float:
    return Weighting(horizon=horizon).eval(t, t_prime)


def eval_temporal(t: float, t_prime: float, rbf_params: Tuple[float, float], ma12_params: Tuple[float, float],
                  horizon: int) -> float:
    """
    Evaluates k_T at a pair of times.

    Args:
        rbf_params: (ℓ_RBF, σ_f,RBF).
        ma12_params: (ℓ_Ma12, σ_f,Ma12).

    Examples:
        >>> eval_temporal(25., 25., (5., 1.), (1., 10.), 50)
        26.0
    """
    return temporal_kernel(horizon, *rbf_params, *ma12_params).eval(t, t_prime)


def eval_spatio_temporal(kernel: BaseKernel, z, z_prime) -> float:
    """Evaluates a spatio-temporal product at two stacked inputs (spatial coordinates followed by time)."""
    split_spatio_temporal(kernel)
    return kernel.eval(z, z_prime)
