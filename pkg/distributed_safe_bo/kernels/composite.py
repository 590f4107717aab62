from functools import reduce
from typing import Any, Dict, Sequence, Tuple

import numpy as np

from distributed_safe_bo.errors import ConfigError
from distributed_safe_bo.kernels.base_kernel import BaseKernel


class CompositeKernel(BaseKernel):
    def __init__(self, children: Sequence[BaseKernel], inputs: str = "all"):
        super().__init__(inputs=inputs)
        children = tuple(children)
        if not children:
            raise ConfigError(f"{self.kind} kernel needs at least one child", "children")
        for child in children:
            if not isinstance(child, BaseKernel):
                raise ConfigError(f"{self.kind} children must be kernels, got {type(child).__name__}", "children")
        self._children = children

    @property
    def children(self) -> Tuple[BaseKernel, ...]:
        return self._children

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "children": [c.to_dict() for c in self._children], "inputs": self.inputs}


class Sum(CompositeKernel):
    kind = "Sum"

    def _evaluate(self, x1, x2):
        return reduce(np.add, (c(x1, x2) for c in self._children))

    def _paired(self, x1, x2):
        return reduce(np.add, (c.paired(x1, x2) for c in self._children))

    def _diag(self, x):
        return reduce(np.add, (c.diag(x) for c in self._children))


class Product(CompositeKernel):
    kind = "Product"

    def _evaluate(self, x1, x2):
        return reduce(np.multiply, (c(x1, x2) for c in self._children))

    def _paired(self, x1, x2):
        return reduce(np.multiply, (c.paired(x1, x2) for c in self._children))

    def _diag(self, x):
        return reduce(np.multiply, (c.diag(x) for c in self._children))
