from .agent import Agent, Proposal
from .base_oracle import BaseOracle, ConstantOracle, RkhsRewardOracle
from .comm_graph import CommGraph
from .errors import *
from .gaussian_process import Dataset, Posterior, beta, confidence_bounds, fit
from .orchestrator import (
    VARIANTS,
    DistributedSafeBO,
    RunResult,
    ablation_variant,
    build_agents,
    expert_index,
)
from .rkhs_sampler import PreRkhsFunction, quantile_threshold, sample
from .safe_bo import (
    ParamGrid,
    SafeBoSets,
    acquire,
    compute_expanders,
    compute_maximizers,
    compute_safe_set,
    compute_sets,
    kernel_metric,
)

__version__ = "0.1.1"
