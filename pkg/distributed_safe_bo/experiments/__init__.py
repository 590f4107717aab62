from distributed_safe_bo.experiments.config import (
    KernelSettings,
    PlatoonSettings,
    RewardSettings,
    RunConfig,
    SampleSettings,
    ValidateSettings,
    load_config,
    parse_override,
)
from distributed_safe_bo.experiments.runner import (
    run_ablation_suite,
    run_experiment,
    sample_rkhs,
    toy_setup,
    validate_kernel,
)
