from typing import Any, Dict, Mapping

from distributed_safe_bo.errors import ConfigError
from distributed_safe_bo.kernels.base_kernel import BaseKernel
from distributed_safe_bo.kernels.composite import Product, Sum
from distributed_safe_bo.kernels.spatio_temporal import BASE_KINDS
from distributed_safe_bo.kernels.weighting import Weighting

COMPOSITE_KINDS = {"Sum": Sum, "Product": Product}
ALLOWED_KEYS = {
    "base": {"kind", "lengthscale", "output_scale", "inputs"},
    "Weighting": {"kind", "horizon", "inputs"},
    "composite": {"kind", "children", "inputs"},
}


def kernel_from_dict(spec: Mapping[str, Any], path: str = "kernel") -> BaseKernel:
    """
    Builds a kernel expression tree from its nested configuration form.

    Args:
        spec: mapping with "kind" and the fields of that kind, e.g.
            {"kind": "Product", "children": [{"kind": "Matern52", "lengthscale": 0.3, "output_scale": 1.0,
            "inputs": "spatial"}, ...]}.
        path: key path used in error messages.

    Returns:
        the root :obj:`BaseKernel`.

    Raises:
        ConfigError: unknown kinds or keys, missing or invalid hyperparameters. The message carries the key path.
    """
    if not isinstance(spec, Mapping) or "kind" not in spec:
        raise ConfigError(f"{path}: kernel spec needs a 'kind'", path)
    kind = spec["kind"]
    if kind in BASE_KINDS:
        allowed = ALLOWED_KEYS["base"]
    elif kind == "Weighting":
        allowed = ALLOWED_KEYS["Weighting"]
    elif kind in COMPOSITE_KINDS:
        allowed = ALLOWED_KEYS["composite"]
    else:
        raise ConfigError(f"{path}.kind: unknown kernel kind '{kind}'", f"{path}.kind")
    unknown = sorted(set(spec) - allowed)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {unknown} for kind {kind}", f"{path}.{unknown[0]}")

    inputs = spec.get("inputs", "all")
    try:
        if kind in BASE_KINDS:
            if "lengthscale" not in spec:
                raise ConfigError(f"{path}.lengthscale: missing", f"{path}.lengthscale")
            return BASE_KINDS[kind](lengthscale=spec["lengthscale"], output_scale=spec.get("output_scale", 1.),
                                    inputs=inputs)
        if kind == "Weighting":
            if "horizon" not in spec:
                raise ConfigError(f"{path}.horizon: missing", f"{path}.horizon")
            return Weighting(horizon=spec["horizon"], inputs=inputs)
        children = spec.get("children")
        if not isinstance(children, list):
            raise ConfigError(f"{path}.children: expected a list", f"{path}.children")
        return COMPOSITE_KINDS[kind](
            [kernel_from_dict(child, f"{path}.children[{i}]") for i, child in enumerate(children)], inputs=inputs
        )
    except ConfigError as e:
        if str(e).startswith(path):
            raise
        raise ConfigError(f"{path}: {e.message}", path) from e


def kernel_to_dict(kernel: BaseKernel) -> Dict[str, Any]:
    return kernel.to_dict()
