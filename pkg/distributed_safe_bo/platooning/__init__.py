from distributed_safe_bo.platooning.vehicle import PARAM_RANGES, VehicleParams, vehicle_step
from distributed_safe_bo.platooning.platoon import (
    EpisodeTrace,
    PlatoonConfig,
    controller_error,
    controller_errors,
    gaps,
    simulate_episode,
)
from distributed_safe_bo.platooning.reward import platooning_reward
from distributed_safe_bo.platooning.oracle import PlatooningOracle, platooning_oracle
