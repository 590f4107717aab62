import numpy as np
from scipy.linalg import eigvalsh

from distributed_safe_bo.errors import InputError
from distributed_safe_bo.kernels.base_kernel import BaseKernel, as_points


def gram(kernel: BaseKernel, inputs: np.ndarray) -> np.ndarray:
    """
    Gram matrix G[i, j] = k(inputs[i], inputs[j]), exactly symmetric.

    Args:
        kernel: any kernel expression.
        inputs: array of shape (m, d), m ≥ 1.

    Returns:
        array of shape (m, m).
    """
    inputs = as_points(inputs)
    if inputs.shape[0] < 1:
        raise InputError("gram needs at least one input", inputs.shape)
    g = kernel(inputs)
    upper = np.triu(g)
    return upper + np.triu(g, 1).T


def check_psd(matrix: np.ndarray, rel_tol: float = 1e-8) -> bool:
    """
    True iff the smallest eigenvalue is at least -rel_tol·max(1, largest eigenvalue).

    Examples:
        >>> check_psd(np.array([[1., 2.], [2., 1.]]))
        False
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InputError(f"expected a square matrix, got shape {matrix.shape}", matrix.shape)
    if not np.array_equal(matrix, matrix.T):
        raise InputError("matrix is not symmetric", matrix.shape)
    eigenvalues = eigvalsh(matrix)
    return bool(eigenvalues[0] >= -rel_tol * max(1., eigenvalues[-1]))
