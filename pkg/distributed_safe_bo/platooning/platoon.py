import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from pandas import DataFrame

from distributed_safe_bo.errors import ConfigError, InputError, NumericalError
from distributed_safe_bo.platooning.vehicle import VehicleParams, vehicle_step

logger = logging.getLogger(__name__)


@dataclass
class PlatoonConfig:
    """
    Leader-follower platoon on a straight road.

    Vehicles are listed rear to front: `initial_positions[0]` is follower 1, the rearmost vehicle, and the last
    entry is the leader. Follower i keeps the gap d^(i) to the vehicle directly in front of it.

    Args:
        d_ref: reference gap in meters.
        leader_speed: constant leader speed in m/s.
        episode_length: T̂ in seconds.
        dt: integration step in seconds; T̂/dt must be an integer.
        initial_positions: s₀ in meters, strictly increasing.
        vehicle_params: one :obj:`VehicleParams` per follower, nominal vehicles if None.
        initial_speed: initial follower speed, the leader speed if None.
        drive_ratio: drivetrain ratio from the commanded torque to the wheel torque.
    """

    d_ref: float = 100.
    leader_speed: float = 30.
    episode_length: float = 120.
    dt: float = 0.1
    initial_positions: Tuple[float, ...] = (0., 300., 520., 700., 1000.)
    vehicle_params: Optional[Tuple[VehicleParams, ...]] = None
    initial_speed: Optional[float] = None
    drive_ratio: float = 1.25

    def __post_init__(self):
        self.initial_positions = tuple(float(s) for s in self.initial_positions)
        if len(self.initial_positions) < 2:
            raise ConfigError("a platoon needs a leader and at least one follower", "initial_positions")
        if np.any(np.diff(self.initial_positions) <= 0):
            raise ConfigError(f"initial positions must increase rear to front, got {self.initial_positions}",
                              "initial_positions")
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}", "dt")
        if not self.d_ref > 0:
            raise ConfigError(f"d_ref must be positive, got {self.d_ref}", "d_ref")
        if self.leader_speed < 0 or (self.initial_speed is not None and self.initial_speed < 0):
            raise ConfigError("speeds must be nonnegative", "leader_speed")
        if not self.drive_ratio > 0:
            raise ConfigError(f"drive_ratio must be positive, got {self.drive_ratio}", "drive_ratio")
        ratio = self.episode_length / self.dt
        if ratio < 1 or abs(ratio - round(ratio)) > 1e-9 * max(ratio, 1.):
            raise ConfigError(f"episode_length / dt must be a positive integer, got {ratio}", "episode_length")
        if self.vehicle_params is not None:
            self.vehicle_params = tuple(self.vehicle_params)
            if len(self.vehicle_params) != self.num_followers:
                raise ConfigError(f"expected {self.num_followers} vehicle parameter sets, "
                                  f"got {len(self.vehicle_params)}", "vehicle_params")

    @property
    def num_followers(self) -> int:
        return len(self.initial_positions) - 1

    @property
    def steps(self) -> int:
        return int(round(self.episode_length / self.dt))

    @property
    def follower_params(self) -> Tuple[VehicleParams, ...]:
        return self.vehicle_params or tuple(VehicleParams.nominal() for _ in range(self.num_followers))


@dataclass
class EpisodeTrace:
    """
    Recorded episode. `positions` and `velocities` have one row per step 0..k (followers rear to front, leader
    last), `distances` one row per step 1..k with the gap of every follower. k is shorter than `steps` after a
    crash.
    """

    distances: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    steps: int
    dt: float
    crashed: bool = False
    gains: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def min_distance(self) -> float:
        if self.crashed:
            return 0.
        return float(np.min(self.distances))

    @property
    def recorded_steps(self) -> int:
        return self.distances.shape[0]

    def to_frame(self) -> DataFrame:
        """Episode table: step, time, position and velocity per vehicle and the gap per follower."""
        num_followers = self.distances.shape[1]
        k = np.arange(self.positions.shape[0])
        df = DataFrame({"step": k, "time": k * self.dt})
        names = [f"follower{i + 1}" for i in range(num_followers)] + ["leader"]
        for col, name in enumerate(names):
            df[f"position_{name}"] = self.positions[:, col]
            df[f"velocity_{name}"] = self.velocities[:, col]
        padded = np.vstack([np.full((1, num_followers), np.nan), self.distances])
        for i in range(num_followers):
            df[f"distance_follower{i + 1}"] = padded[:, i]
        return df


def gaps(positions: np.ndarray) -> np.ndarray:
    """d^(i) = position of the vehicle in front − position of follower i, for rear-to-front positions."""
    return np.diff(positions)


def controller_error(distances: Sequence[float], d_ref: float, i: int, num_followers: int) -> float:
    """
    Error e^(i) fed to the P-controller of follower i (1-based, rear to front).

    The leader communicates d_ref in place of a measured gap, which completes the last follower's term.
    At perfect tracking every error equals 2·d_ref.

    Examples:
        >>> controller_error([100., 90., 110.], 100., 2, 3)
        190.0
    """
    if not 1 <= i <= num_followers:
        raise InputError(f"follower index must be in 1..{num_followers}, got {i}", i)
    if len(distances) != num_followers:
        raise InputError(f"expected {num_followers} distances, got {len(distances)}", len(distances))
    d = [float(v) for v in distances] + [float(d_ref)]
    if i == 1:
        return d[0] + d[1]
    return -d[i - 2] + 2. * d[i - 1] + d[i]


def controller_errors(distances: np.ndarray, d_ref: float) -> np.ndarray:
    num_followers = len(distances)
    return np.array([controller_error(distances, d_ref, i, num_followers) for i in range(1, num_followers + 1)])


def simulate_episode(gains: Sequence[float], config: PlatoonConfig) -> EpisodeTrace:
    """
    Simulates one episode with proportional controllers u^(i) = K_P^(i)·e^(i).

    u is the commanded torque, so follower i is driven by the traction force drive_ratio·u / r. The leader holds
    its speed exactly. The episode stops at the first step where a gap is ≤ 0 or the state stops being finite;
    both count as a crash.

    Args:
        gains: K_P per follower, rear to front.
        config: platoon configuration.

    Returns:
        :obj:`EpisodeTrace`.
    """
    gains = np.asarray(gains, dtype=float).ravel()
    num_followers = config.num_followers
    if gains.size != num_followers:
        raise InputError(f"expected {num_followers} gains, got {gains.size}", gains)
    params = config.follower_params
    steps, dt = config.steps, config.dt
    leader_start = config.initial_positions[-1]
    follower_speed = config.leader_speed if config.initial_speed is None else config.initial_speed

    position = np.array(config.initial_positions, dtype=float)
    velocity = np.full(num_followers + 1, float(follower_speed))
    velocity[-1] = config.leader_speed
    positions, velocities, distances = [position.copy()], [velocity.copy()], []
    crashed = False
    for k in range(1, steps + 1):
        errors = controller_errors(gaps(position), config.d_ref)
        try:
            for i in range(num_followers):
                force = config.drive_ratio * gains[i] * errors[i] / params[i].wheel_radius
                velocity[i], position[i] = vehicle_step(velocity[i], position[i], force, params[i], dt)
        except NumericalError as e:
            logger.debug("episode aborted at step %d: %s", k, e.message)
            crashed = True
            break
        position[-1] = leader_start + config.leader_speed * k * dt
        d = gaps(position)
        positions.append(position.copy())
        velocities.append(velocity.copy())
        distances.append(d)
        if np.any(d <= 0):
            logger.debug("crash at step %d with gains %s", k, gains)
            crashed = True
            break

    return EpisodeTrace(
        distances=np.array(distances).reshape(len(distances), num_followers),
        positions=np.array(positions),
        velocities=np.array(velocities),
        steps=steps,
        dt=dt,
        crashed=crashed,
        gains=gains,
    )
