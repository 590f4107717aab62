import json
import logging
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

from distributed_safe_bo.errors import ConfigError
from distributed_safe_bo.orchestrator import VARIANTS

logger = logging.getLogger(__name__)

EXPERIMENTS = ("toy4", "toy8", "platooning", "sample_rkhs", "validate_kernel")
TOPOLOGIES = ("path", "complete", "empty")


@dataclass
class KernelSettings:
    """Hyperparameters of the spatio-temporal prior k_Ma52(a, a')·(k_RBF(t, t') + k_W(t, t')·k_Ma12(t, t'))."""

    spatial_lengthscale: float = 0.3
    spatial_scale: float = 1.
    rbf_lengthscale: float = 20.
    # unit RBF scale: B bounds the reward norm against a unit-variance prior
    rbf_scale: float = 1.
    ma12_lengthscale: float = 5.
    ma12_scale: float = 0.3
    # full kernel expression in the nested dict format, replaces the settings above when given
    custom: Optional[Dict[str, Any]] = None


@dataclass
class RewardSettings:
    """Random pre-RKHS reward of the synthetic experiments."""

    kind: str = "Matern32"
    lengthscale: float = 0.4
    output_scale: float = 1.
    num_centers: int = 1000
    norm: float = 1.
    quantile: float = 0.2
    evaluation_points: int = 20000
    initial_quantile: float = 0.5
    initial_candidates: int = 20000
    # fixed safety threshold instead of the quantile
    threshold: Optional[float] = None


@dataclass
class PlatoonSettings:
    d_ref: float = 100.
    leader_speed: float = 30.
    episode_length: float = 120.
    dt: float = 0.1
    initial_positions: List[float] = field(default_factory=lambda: [0., 300., 520., 700., 1000.])
    initial_gains: List[float] = field(default_factory=lambda: [4., 5., 4., 5.])
    safety_threshold: float = -1.
    sample_vehicles: bool = True
    initial_speed: Optional[float] = None
    drive_ratio: float = 1.25
    # share of each vehicle parameter range the draws use, centred on its midpoint
    parameter_spread: float = 0.25


@dataclass
class SampleSettings:
    """Pre-RKHS sample paths of the temporal kernel (kind "temporal") or of the reward kernel ("reward")."""

    kind: str = "temporal"
    num_samples: int = 5
    num_centers: int = 50
    norm: float = 1.
    horizon: int = 50
    rbf_lengthscale: float = 5.
    rbf_scale: float = 1.
    ma12_lengthscale: float = 1.
    ma12_scale: float = 10.
    dims: int = 1
    resolution: int = 50


@dataclass
class ValidateSettings:
    trials: int = 200
    max_size: int = 40
    horizon: int = 51
    max_dims: int = 4
    rel_tol: float = 1e-8


@dataclass
class RunConfig:
    """
    Complete configuration of one experiment. Defaults are the synthetic four-agent setting; `DEFAULTS` holds
    the starting point of every experiment.
    """

    experiment: str = "toy4"
    variant: str = "full_algorithm"
    seed: int = 0
    num_agents: int = 4
    iterations: int = 50
    bound_b: float = 1.
    noise_std: float = 1e-3
    delta: float = 0.01
    beta_override: Optional[float] = None
    topology: str = "path"
    latent_time: bool = True
    param_bounds: List[List[float]] = field(default_factory=lambda: [[0., 1.]])
    resolution: Optional[int] = None
    max_grid_points: int = 3_000_000
    frozen_agents: List[int] = field(default_factory=list)
    export_ucb: bool = True
    n_jobs: int = 1
    seeds: int = 10
    kernel: KernelSettings = field(default_factory=KernelSettings)
    reward: RewardSettings = field(default_factory=RewardSettings)
    platoon: PlatoonSettings = field(default_factory=PlatoonSettings)
    sample: SampleSettings = field(default_factory=SampleSettings)
    validate: ValidateSettings = field(default_factory=ValidateSettings)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def validate_values(self) -> "RunConfig":
        """Raises :obj:`ConfigError` naming the key path of the first invalid value."""
        _check(self.experiment in EXPERIMENTS, "experiment", f"must be one of {EXPERIMENTS}")
        _check(self.variant in VARIANTS, "variant", f"must be one of {VARIANTS}")
        _check(self.topology in TOPOLOGIES, "topology", f"must be one of {TOPOLOGIES}")
        _check(_is_int(self.seed) and self.seed >= 0, "seed", "must be a nonnegative integer")
        _check(_is_int(self.num_agents) and self.num_agents >= 1, "num_agents", "must be a positive integer")
        _check(_is_int(self.iterations) and self.iterations >= 0, "iterations", "must be a nonnegative integer")
        _check(_is_int(self.seeds) and self.seeds >= 1, "seeds", "must be a positive integer")
        _check(self.bound_b >= 0, "bound_b", "must be nonnegative")
        _check(self.noise_std >= 0, "noise_std", "must be nonnegative")
        _check(0. < self.delta < 1., "delta", "must lie in (0, 1)")
        _check(self.beta_override is None or self.beta_override >= 0, "beta_override", "must be nonnegative")
        _check(self.resolution is None or (_is_int(self.resolution) and self.resolution >= 1), "resolution",
               "must be a positive integer or null")
        _check(_is_int(self.max_grid_points) and self.max_grid_points >= 1, "max_grid_points",
               "must be a positive integer")
        _check(_is_int(self.n_jobs) and self.n_jobs >= 1, "n_jobs", "must be a positive integer")
        _check(len(self.param_bounds) >= 1 and all(len(b) == 2 and b[0] < b[1] for b in self.param_bounds),
               "param_bounds", "must be a list of [low, high] pairs with low < high")
        _check(all(_is_int(i) and 1 <= i <= self.num_agents for i in self.frozen_agents), "frozen_agents",
               f"ids must lie in 1..{self.num_agents}")

        for name in ("spatial_lengthscale", "spatial_scale", "rbf_lengthscale", "rbf_scale", "ma12_lengthscale",
                     "ma12_scale"):
            _check(getattr(self.kernel, name) > 0, f"kernel.{name}", "must be positive")

        reward = self.reward
        _check(reward.kind in ("RBF", "Matern12", "Matern32", "Matern52"), "reward.kind", "unknown kernel kind")
        _check(reward.lengthscale > 0, "reward.lengthscale", "must be positive")
        _check(reward.output_scale > 0, "reward.output_scale", "must be positive")
        _check(reward.norm > 0, "reward.norm", "must be positive")
        _check(_is_int(reward.num_centers) and reward.num_centers >= 1, "reward.num_centers",
               "must be a positive integer")
        _check(0. < reward.quantile < 1., "reward.quantile", "must lie in (0, 1)")
        _check(0. < reward.initial_quantile < 1., "reward.initial_quantile", "must lie in (0, 1)")
        _check(_is_int(reward.evaluation_points) and reward.evaluation_points >= 1, "reward.evaluation_points",
               "must be a positive integer")
        _check(_is_int(reward.initial_candidates) and reward.initial_candidates >= 1, "reward.initial_candidates",
               "must be a positive integer")

        platoon = self.platoon
        _check(len(platoon.initial_positions) >= 2, "platoon.initial_positions", "needs at least two vehicles")
        _check(len(platoon.initial_gains) == len(platoon.initial_positions) - 1, "platoon.initial_gains",
               "needs one gain per follower")
        _check(platoon.drive_ratio > 0, "platoon.drive_ratio", "must be positive")
        _check(0. <= platoon.parameter_spread <= 1., "platoon.parameter_spread", "must lie in [0, 1]")
        if self.experiment == "platooning":
            _check(self.num_agents == len(platoon.initial_gains), "num_agents", "must equal the number of followers")
            _check(len(self.param_bounds) == 1, "param_bounds", "platoon agents tune a single gain")

        sample = self.sample
        _check(sample.kind in ("temporal", "reward"), "sample.kind", "must be 'temporal' or 'reward'")
        _check(_is_int(sample.num_samples) and sample.num_samples >= 1, "sample.num_samples",
               "must be a positive integer")
        _check(_is_int(sample.horizon) and sample.horizon >= 2, "sample.horizon", "must be an integer >= 2")
        _check(sample.kind != "reward" or sample.dims in (1, 2), "sample.dims", "reward samples support 1 or 2 dims")

        validate = self.validate
        _check(_is_int(validate.trials) and validate.trials >= 1, "validate.trials", "must be a positive integer")
        _check(_is_int(validate.max_size) and validate.max_size >= 1, "validate.max_size",
               "must be a positive integer")
        _check(_is_int(validate.horizon) and validate.horizon >= 2, "validate.horizon", "must be an integer >= 2")
        return self


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _check(condition: bool, path: str, message: str) -> None:
    if not condition:
        raise ConfigError(f"{path}: {message}", path)


def toy4_defaults() -> RunConfig:
    return RunConfig(experiment="toy4", num_agents=4)


def toy8_defaults() -> RunConfig:
    return RunConfig(experiment="toy8", num_agents=8, reward=RewardSettings(lengthscale=0.1))


def platooning_defaults() -> RunConfig:
    return RunConfig(
        experiment="platooning",
        num_agents=4,
        bound_b=25.,
        noise_std=0.,
        param_bounds=[[0., 10.]],
        resolution=30,
        # 0.2 of the gain range; rewards reach about 25, so B·sqrt(k(z, z)) must too
        kernel=KernelSettings(spatial_lengthscale=2., rbf_scale=1., ma12_scale=1.),
    )


DEFAULTS = {
    "toy4": toy4_defaults,
    "toy8": toy8_defaults,
    "platooning": platooning_defaults,
    "sample_rkhs": lambda: RunConfig(experiment="sample_rkhs"),
    "validate_kernel": lambda: RunConfig(experiment="validate_kernel"),
}


def load_config(
    path: Optional[Union[str, Path]] = None,
    experiment: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """
    Builds a validated :obj:`RunConfig` from experiment defaults, an optional JSON file and key-path overrides,
    in that order of precedence.

    Args:
        path: JSON file with a (partial) nested configuration.
        experiment: experiment whose defaults are the starting point; the file's `experiment` key otherwise,
            "toy4" if neither is given.
        overrides: mapping of dotted key paths to values, e.g. {"reward.quantile": 0.3}.

    Returns:
        :obj:`RunConfig`.

    Raises:
        ConfigError: on unreadable files, unknown keys or invalid values; the message carries the key path.

    Examples:
        >>> load_config(experiment="toy4", overrides={"seed": 7}).seed
        7
    """
    data: Dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e.msg} at line {e.lineno})", str(path)) from e
        except OSError as e:
            raise ConfigError(f"{path}: {e.strerror}", str(path)) from e
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object", str(path))

    name = experiment or data.get("experiment") or "toy4"
    if name not in DEFAULTS:
        raise ConfigError(f"experiment: must be one of {EXPERIMENTS}, got '{name}'", "experiment")
    config = DEFAULTS[name]()
    merged = _merge(config, data, prefix="")
    for key, value in (overrides or {}).items():
        merged = _merge(merged, _nest(key, value), prefix="")
    if merged.experiment != name:
        merged = replace(merged, experiment=name)
    logger.debug("loaded %s configuration", name)
    return merged.validate_values()


def parse_override(assignment: str) -> Dict[str, Any]:
    """
    Parses "key.path=value"; the value is read as JSON and kept as a string when it is not valid JSON.

    Examples:
        >>> parse_override("reward.quantile=0.3")
        {'reward.quantile': 0.3}
    """
    if "=" not in assignment:
        raise ConfigError(f"override '{assignment}' must look like key.path=value", assignment)
    key, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return {key.strip(): value}


def _nest(key: str, value: Any) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    node = out
    parts = key.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value
    return out


def _merge(obj: Any, data: Mapping[str, Any], prefix: str) -> Any:
    """Returns a copy of dataclass `obj` updated from `data`, rejecting keys it does not declare."""
    known = {f.name: f for f in fields(obj)}
    values = {name: getattr(obj, name) for name in known}
    for key, value in data.items():
        key_path = f"{prefix}{key}"
        if key not in known:
            raise ConfigError(f"unknown configuration key '{key_path}'", key_path)
        current = values[key]
        if is_dataclass(current):
            if not isinstance(value, Mapping):
                raise ConfigError(f"{key_path}: expected an object", key_path)
            values[key] = _merge(current, value, prefix=f"{key_path}.")
        else:
            values[key] = _coerce(current, value, key_path)
    return type(obj)(**values)


def _coerce(current: Any, value: Any, key_path: str) -> Any:
    if isinstance(current, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key_path}: expected true or false, got {value!r}", key_path)
        return value
    if isinstance(current, (int, float)):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key_path}: expected a number, got {value!r}", key_path)
        return float(value) if isinstance(current, float) else value
    if isinstance(current, list) and not isinstance(value, list):
        raise ConfigError(f"{key_path}: expected a list, got {value!r}", key_path)
    if isinstance(current, str) and not isinstance(value, str):
        raise ConfigError(f"{key_path}: expected a string, got {value!r}", key_path)
    return value
