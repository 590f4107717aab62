from .base_kernel import BaseKernel
from .composite import CompositeKernel, Product, Sum
from .psd import check_psd, gram
from .spatio_temporal import (
    eval_base,
    eval_spatio_temporal,
    eval_temporal,
    eval_weighting,
    spatio_temporal_kernel,
    split_spatio_temporal,
    stack_input,
    temporal_kernel,
)
from .spec import kernel_from_dict, kernel_to_dict
from .stationary import Matern12, Matern32, Matern52, RBF, StationaryKernel
from .weighting import Weighting, brownian, reverse_brownian
