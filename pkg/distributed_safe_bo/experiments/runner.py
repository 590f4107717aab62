import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.linalg import eigvalsh

from distributed_safe_bo.base_oracle import BaseOracle, RkhsRewardOracle
from distributed_safe_bo.comm_graph import CommGraph
from distributed_safe_bo.errors import ConfigError, OracleError, SafeBoError
from distributed_safe_bo.experiments.config import RunConfig
from distributed_safe_bo.kernels import (
    BaseKernel,
    Matern52,
    check_psd,
    gram,
    kernel_from_dict,
    spatio_temporal_kernel,
    temporal_kernel,
)
from distributed_safe_bo.kernels.spatio_temporal import BASE_KINDS
from distributed_safe_bo.orchestrator import VARIANTS, DistributedSafeBO, RunResult, ablation_variant, build_agents
from distributed_safe_bo.platooning import PlatoonConfig, PlatooningOracle, VehicleParams
from distributed_safe_bo.rkhs_sampler import PreRkhsFunction, quantile_of, sample, uniform_points
from distributed_safe_bo.utils import canonical_json, config_hash, named_rng, write_csv

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass
class ToySetup:
    function: PreRkhsFunction
    safety_threshold: float
    initial_params: np.ndarray
    initial_value: float


def joint_bounds(config: RunConfig) -> List[Tuple[float, float]]:
    """Box of the joint parameter, agent-major: the per-agent box repeated N times."""
    return [tuple(b) for _ in range(config.num_agents) for b in config.param_bounds]


def kernel_factory(config: RunConfig) -> Callable[[int], BaseKernel]:
    """
    Prior of an agent as a function of its spatial dimension. The weighting kernel horizon is T + 1 so that the
    predictions at t + 1 stay inside its domain.
    """
    settings = config.kernel
    horizon = max(config.iterations + 1, 2)

    def build(dims: int) -> BaseKernel:
        if settings.custom is not None:
            return kernel_from_dict(settings.custom, path="kernel.custom")
        if not config.latent_time:
            return Matern52(lengthscale=settings.spatial_lengthscale, output_scale=settings.spatial_scale)
        return spatio_temporal_kernel(
            settings.spatial_lengthscale,
            settings.spatial_scale,
            horizon,
            settings.rbf_lengthscale,
            settings.rbf_scale,
            settings.ma12_lengthscale,
            settings.ma12_scale,
        )

    return build


def reward_kernel(config: RunConfig) -> BaseKernel:
    return BASE_KINDS[config.reward.kind](lengthscale=config.reward.lengthscale,
                                          output_scale=config.reward.output_scale)


def toy_setup(config: RunConfig) -> ToySetup:
    """
    Draws the synthetic reward over the joint box, its safety threshold and the initial joint parameter.

    h is the lower q-quantile of f over uniform evaluation points; a₀ is the candidate whose reward is closest
    to the `initial_quantile` of the same sample. Both only depend on the seed, not on the variant.
    """
    settings = config.reward
    bounds = joint_bounds(config)
    rng = named_rng(config.seed, "reward_function")
    function = sample(reward_kernel(config), settings.num_centers, settings.norm, bounds, rng=rng)
    values = function(uniform_points(bounds, settings.evaluation_points, rng))
    threshold = settings.threshold if settings.threshold is not None else quantile_of(values, settings.quantile)
    target = quantile_of(values, settings.initial_quantile)

    candidates = uniform_points(bounds, settings.initial_candidates, named_rng(config.seed, "initial_parameter"))
    candidate_values = function(candidates)
    best = int(np.argmin(np.abs(candidate_values - target)))
    logger.info("reward function drawn: h=%.6g, f(a0)=%.6g", threshold, candidate_values[best])
    return ToySetup(
        function=function,
        safety_threshold=float(threshold),
        initial_params=candidates[best].reshape(config.num_agents, len(config.param_bounds)),
        initial_value=float(candidate_values[best]),
    )


def platoon_config(config: RunConfig) -> PlatoonConfig:
    settings = config.platoon
    num_followers = len(settings.initial_positions) - 1
    vehicles = None
    if settings.sample_vehicles:
        rng = named_rng(config.seed, "vehicle_parameters")
        vehicles = tuple(VehicleParams.sample(rng, settings.parameter_spread) for _ in range(num_followers))
    return PlatoonConfig(
        d_ref=settings.d_ref,
        leader_speed=settings.leader_speed,
        episode_length=settings.episode_length,
        dt=settings.dt,
        initial_positions=tuple(settings.initial_positions),
        vehicle_params=vehicles,
        initial_speed=settings.initial_speed,
        drive_ratio=settings.drive_ratio,
    )


def build_problem(config: RunConfig) -> Tuple[BaseOracle, float, np.ndarray]:
    """Oracle, safety threshold and initial joint parameter of a toy or platooning configuration."""
    if config.experiment == "platooning":
        oracle = PlatooningOracle(platoon_config(config))
        initial = np.asarray(config.platoon.initial_gains, dtype=float).reshape(config.num_agents, 1)
        return oracle, config.platoon.safety_threshold, initial
    setup = toy_setup(config)
    oracle = RkhsRewardOracle(setup.function, config.num_agents, len(config.param_bounds))
    return oracle, setup.safety_threshold, setup.initial_params


def build_optimizer(config: RunConfig, oracle: BaseOracle, safety_threshold: float,
                    initial_params: np.ndarray) -> DistributedSafeBO:
    graph = CommGraph.from_topology(config.topology, config.num_agents)
    agents = build_agents(
        graph,
        [tuple(b) for b in config.param_bounds],
        initial_params,
        kernel_factory(config),
        safety_threshold=safety_threshold,
        bound_b=config.bound_b,
        noise_std=config.noise_std,
        delta=config.delta,
        beta_override=config.beta_override,
        latent_time=config.latent_time,
        resolution=config.resolution,
        max_grid_points=config.max_grid_points,
    )
    return DistributedSafeBO(
        graph,
        agents,
        oracle,
        safety_threshold,
        noise_std=config.noise_std,
        rng=named_rng(config.seed, "observation_noise"),
        frozen_agents=config.frozen_agents,
        n_jobs=config.n_jobs,
    )


def run_experiment(config: RunConfig, out_dir: Optional[PathLike] = None) -> RunResult:
    """
    Runs one toy or platooning experiment and, when `out_dir` is given, writes its artifacts there:
    rewards.csv, agents.csv, config.json, manifest.json, ucb_agent<i>.csv and for platooning episode.csv and
    vehicles.csv.

    Returns:
        :obj:`RunResult` of the run.

    Raises:
        OracleError: the oracle failed; the artifacts of the partial run are written before it propagates.
    """
    if config.experiment not in ("toy4", "toy8", "platooning"):
        raise ConfigError(f"run_experiment does not run '{config.experiment}' configurations", config.experiment)
    config = ablation_variant(config, config.variant)
    start = time.perf_counter()
    oracle, threshold, initial = build_problem(config)
    optimizer = build_optimizer(config, oracle, threshold, initial)
    logger.info("running %s (%s), seed %d, T=%d", config.experiment, config.variant, config.seed,
                config.iterations)
    try:
        result = optimizer.run(config.iterations, initial_params=initial)
    except OracleError as e:
        if out_dir is not None and e.partial_result is not None:
            write_run(config, e.partial_result, optimizer, oracle, out_dir, time.perf_counter() - start)
        raise
    elapsed = time.perf_counter() - start
    logger.info("finished: best reward %.6g, %d violations", result.best_reward, result.violation_count)
    if out_dir is not None:
        write_run(config, result, optimizer, oracle, out_dir, elapsed)
    return result


def manifest(config: RunConfig, result: RunResult, wall_time: float) -> Dict:
    return {
        "experiment": config.experiment,
        "variant": config.variant,
        "seed": config.seed,
        "config_hash": config_hash(config.to_dict()),
        "iterations": result.iterations,
        "safety_threshold": result.safety_threshold,
        "initial_reward": result.initial_reward,
        "best_reward": result.best_reward,
        "best_param": result.best_param.tolist(),
        "best_iteration": result.best_index,
        "violation_count": result.violation_count,
        "wall_time": wall_time,
    }


def write_run(config: RunConfig, result: RunResult, optimizer: DistributedSafeBO, oracle: BaseOracle,
              out_dir: PathLike, wall_time: float) -> Path:
    out = Path(out_dir)
    write_csv(result.to_frame(), out / "rewards.csv")
    write_csv(result.traces_frame(), out / "agents.csv")
    _write_text(out / "config.json", canonical_json(config.to_dict()))
    _write_text(out / "manifest.json", canonical_json(manifest(config, result, wall_time)))
    if config.export_ucb:
        for i, agent in optimizer.agents.items():
            frame = ucb_frame(agent)
            if frame is not None:
                write_csv(frame, out / f"ucb_agent{i}.csv")
    if isinstance(oracle, PlatooningOracle):
        write_csv(oracle.episode(result.best_param).to_frame(), out / "episode.csv")
        write_csv(vehicles_frame(oracle.config), out / "vehicles.csv")
    logger.info("artifacts written to %s", out)
    return out


def ucb_frame(agent) -> Optional[pd.DataFrame]:
    """Mean, std and confidence bounds of the agent's last acquisition over its grid, for grids of dim ≤ 2."""
    sets = agent.last_sets
    if sets is None or agent.grid.dims > 2:
        return None
    points = agent.grid.points
    width = points.shape[1] // len(agent.neighborhood)
    columns = {}
    for position, j in enumerate(agent.neighborhood):
        for k in range(width):
            name = f"a{j}" if width == 1 else f"a{j}_{k + 1}"
            columns[name] = points[:, position * width + k]
    df = pd.DataFrame(columns)
    df["mean"] = sets.mean
    df["std"] = sets.std
    df["lower"] = sets.lower
    df["upper"] = sets.upper
    df["safe"] = sets.safe_mask
    df["maximizer"] = sets.maximizer_mask
    df["expander"] = sets.expander_mask
    return df


def vehicles_frame(config: PlatoonConfig) -> pd.DataFrame:
    rows = [{"follower": i + 1, **params.to_dict()} for i, params in enumerate(config.follower_params)]
    return pd.DataFrame(rows)


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text + "\n")


SUMMARY_COLUMNS = ["row", "variant", "seed", "status", "initial_reward", "best_reward", "violation_count", "error"]


def _run_cell(args: Tuple[RunConfig, Optional[str]]) -> Dict:
    config, out_dir = args
    row = {"row": "run", "variant": config.variant, "seed": config.seed, "status": "ok",
           "initial_reward": np.nan, "best_reward": np.nan, "violation_count": np.nan, "error": ""}
    try:
        result = run_experiment(config, out_dir)
    except SafeBoError as e:
        logger.warning("%s seed %d failed: %s", config.variant, config.seed, e.message)
        row.update(status="failed", error=e.message)
        partial = getattr(e, "partial_result", None)
        if partial is not None:
            row.update(initial_reward=partial.initial_reward, best_reward=partial.best_reward,
                       violation_count=partial.violation_count)
        return row
    row.update(initial_reward=result.initial_reward, best_reward=result.best_reward,
               violation_count=result.violation_count)
    return row


def run_ablation_suite(
    config: RunConfig,
    num_seeds: int,
    variants: Sequence[str] = VARIANTS,
    out_dir: Optional[PathLike] = None,
    jobs: int = 1,
) -> pd.DataFrame:
    """
    Runs every variant for the seeds config.seed, …, config.seed + K − 1 and summarizes the final best rewards.

    Each (variant, seed) cell writes into its own directory `<out_dir>/<variant>/seed_<seed>`. A failing cell
    is recorded with status "failed" and the suite continues. One median row per variant follows the cells.

    Returns:
        summary :obj:`pandas.DataFrame`, also written as summary.csv when `out_dir` is given.
    """
    if num_seeds < 1:
        raise ConfigError(f"the suite needs at least one seed, got {num_seeds}", num_seeds)
    cells = []
    for variant in variants:
        for k in range(num_seeds):
            cell = replace(ablation_variant(config, variant), seed=config.seed + k)
            cell_dir = None if out_dir is None else str(Path(out_dir) / variant / f"seed_{cell.seed}")
            cells.append((cell, cell_dir))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_cell, cells))
    else:
        rows = [_run_cell(cell) for cell in cells]

    summary = pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
    medians = []
    for variant in variants:
        cells_of_variant = summary[(summary["variant"] == variant) & (summary["status"] == "ok")]
        medians.append({
            "row": "median",
            "variant": variant,
            "seed": -1,
            "status": "ok" if len(cells_of_variant) else "failed",
            "initial_reward": cells_of_variant["initial_reward"].median(),
            "best_reward": cells_of_variant["best_reward"].median(),
            "violation_count": cells_of_variant["violation_count"].median(),
            "error": "",
        })
    summary = pd.concat([summary, pd.DataFrame(medians, columns=SUMMARY_COLUMNS)], ignore_index=True)
    summary["violation_count"] = summary["violation_count"].astype(float)
    if out_dir is not None:
        write_csv(summary, Path(out_dir) / "summary.csv")
    return summary


def sample_rkhs(config: RunConfig, out_dir: Optional[PathLike] = None) -> pd.DataFrame:
    """
    Draws `num_samples` pre-RKHS functions and tabulates them, one column per sample.

    kind "temporal" samples the temporal kernel on the time steps 1..T; kind "reward" samples the reward kernel
    on a lattice over the per-agent box (one or two dimensions).
    """
    settings = config.sample
    rng = named_rng(config.seed, "rkhs_samples")
    if settings.kind == "temporal":
        kernel = temporal_kernel(settings.horizon, settings.rbf_lengthscale, settings.rbf_scale,
                                 settings.ma12_lengthscale, settings.ma12_scale)
        bounds = [(0., float(settings.horizon))]
        points = np.arange(1, settings.horizon + 1, dtype=float)[:, None]
        df = pd.DataFrame({"t": np.arange(1, settings.horizon + 1)})
    else:
        kernel = reward_kernel(config)
        low, high = config.param_bounds[0]
        bounds = [(low, high)] * settings.dims
        axis = np.linspace(low, high, settings.resolution)
        mesh = np.meshgrid(*([axis] * settings.dims), indexing="ij")
        points = np.stack([m.ravel() for m in mesh], axis=1)
        df = pd.DataFrame({f"x{d + 1}": points[:, d] for d in range(settings.dims)})
    for s in range(settings.num_samples):
        function = sample(kernel, settings.num_centers, settings.norm, bounds, rng=rng)
        df[f"sample_{s + 1}"] = function(points)
    if out_dir is not None:
        write_csv(df, Path(out_dir) / "rkhs_samples.csv")
    return df


def validate_kernel(config: RunConfig, out_dir: Optional[PathLike] = None) -> pd.DataFrame:
    """
    Checks positive semi-definiteness of random Gram matrices of the temporal, spatial and spatio-temporal
    kernels. Trials cycle through the three domains; sizes and dimensions are drawn per trial.

    Returns:
        one row per trial with the extreme eigenvalues and the verdict, written as kernel_validation.csv when
        `out_dir` is given.
    """
    settings, hyper = config.validate, config.kernel
    rng = named_rng(config.seed, "kernel_validation")
    temporal = temporal_kernel(settings.horizon, hyper.rbf_lengthscale, hyper.rbf_scale, hyper.ma12_lengthscale,
                               hyper.ma12_scale)
    spatial = Matern52(lengthscale=hyper.spatial_lengthscale, output_scale=hyper.spatial_scale)
    joint = spatio_temporal_kernel(hyper.spatial_lengthscale, hyper.spatial_scale, settings.horizon,
                                   hyper.rbf_lengthscale, hyper.rbf_scale, hyper.ma12_lengthscale, hyper.ma12_scale)
    domains = ("temporal", "spatial", "joint")
    rows = []
    for trial in range(settings.trials):
        domain = domains[trial % len(domains)]
        size = int(rng.integers(1, settings.max_size + 1))
        dims = int(rng.integers(1, settings.max_dims + 1))
        times = rng.uniform(0., settings.horizon, size=(size, 1))
        if domain == "temporal":
            kernel, inputs, dims = temporal, times, 0
        elif domain == "spatial":
            kernel, inputs = spatial, rng.uniform(0., 1., size=(size, dims))
        else:
            kernel, inputs = joint, np.hstack([rng.uniform(0., 1., size=(size, dims)), times])
        matrix = gram(kernel, inputs)
        eigenvalues = eigvalsh(matrix)
        rows.append({
            "trial": trial,
            "domain": domain,
            "size": size,
            "dims": dims,
            "min_eigenvalue": float(eigenvalues[0]),
            "max_eigenvalue": float(eigenvalues[-1]),
            "ok": check_psd(matrix, settings.rel_tol),
        })
    df = pd.DataFrame(rows)
    failed = int((~df["ok"]).sum())
    if failed:
        logger.warning("%d of %d Gram matrices are not positive semi-definite", failed, len(df))
    if out_dir is not None:
        write_csv(df, Path(out_dir) / "kernel_validation.csv")
    return df
